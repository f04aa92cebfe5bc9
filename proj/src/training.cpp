#include "evfgn/training.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>

#include "evfgn/checkpoint.hpp"
#include "evfgn/eval.hpp"
#include "evfgn/format.hpp"
#include "evfgn/random.hpp"
#include "evfgn/spectral.hpp"

namespace evfgn::training {

double loss_l2(const RealTensor& pred, const RealTensor& target) {
  require_dims(target.dims(), pred.dims(), "loss_l2");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - target[i]) * (pred[i] - target[i]);
  return sum;
}

namespace {

struct ParamVars {
  ad::Var phi_v, phi_u;
  std::vector<std::pair<ad::Var, ad::Var>> layers;
  ad::Var reduce, w1, b1, w2, b2, w3, b3;
};

ParamVars register_params(ad::Tape& tape, const model::ModelParams& p) {
  std::vector<ad::Var> vars;
  model::for_each_param(p, [&](const std::string& name, const auto& t) { vars.push_back(tape.parameter(name, t)); });
  std::size_t i = 0;
  ParamVars pv{vars[i], vars[i + 1], {}, vars[0], vars[0], vars[0], vars[0], vars[0], vars[0], vars[0]};
  i += 2;
  for (std::size_t k = 0; k < p.layers.size(); ++k, i += 2) pv.layers.emplace_back(vars[i], vars[i + 1]);
  pv.reduce = vars[i++];
  pv.w1 = vars[i++];
  pv.b1 = vars[i++];
  pv.w2 = vars[i++];
  pv.b2 = vars[i++];
  pv.w3 = vars[i++];
  pv.b3 = vars[i++];
  return pv;
}

}  // namespace

ad::Var record_forward(ad::Tape& tape, const model::Model& m, const RealTensor& x) {
  using model::Variant;
  const model::ModelConfig& cfg = m.config;
  require_dims(x.dims(), Dims{cfg.vars, cfg.steps, 1}, "model input");
  const ParamVars pv = register_params(tape, m.params);
  const ad::Var input = tape.constant(x);
  const ad::Var embedded = m.variant == Variant::no_embedding ? ad::broadcast_channels(tape, input, cfg.embed_dim)
                                                              : ad::embed(tape, input, pv.phi_v, pv.phi_u);
  const ad::Var x0 = ad::dft2(tape, embedded);

  std::vector<ad::Var> xs{x0};
  for (std::size_t k = 0; k < pv.layers.size(); ++k) {
    const auto& [w, b] = m.variant == Variant::no_dynamic_filter ? pv.layers.front() : pv.layers[k];
    xs.push_back(ad::split_relu(tape, ad::add_bias(tape, ad::channel_matmul(tape, xs.back(), w), b)));
  }
  ad::Var filtered = xs.back();
  if (m.variant != Variant::no_summation) {
    const std::size_t first = m.variant == Variant::no_residual ? 1 : 0;
    if (first >= xs.size()) {
      filtered = tape.constant(ComplexTensor(tape.complex(x0).dims()));
    } else {
      filtered = xs[first];
      for (std::size_t k = first + 1; k < xs.size(); ++k) filtered = ad::add(tape, filtered, xs[k]);
    }
  }
  const ad::Var rep = ad::real_part(tape, ad::idft2(tape, filtered));

  const ad::Var reduced = ad::reduce_steps(tape, rep, pv.reduce);
  const Dims rd = tape.real(reduced).dims();
  const ad::Var flat = ad::reshape(tape, reduced, Dims{rd.vars, rd.steps * rd.channels, 1});
  const double slope = cfg.negative_slope;
  const ad::Var h1 = ad::leaky_relu(tape, ad::linear(tape, flat, pv.w1, pv.b1), slope);
  const ad::Var h2 = ad::leaky_relu(tape, ad::linear(tape, h1, pv.w2, pv.b2), slope);
  return ad::linear(tape, h2, pv.w3, pv.b3);
}

WindowGrad window_gradient(const model::Model& m, const RealTensor& x, const RealTensor& target, ad::Fault fault) {
  ad::Tape tape;
  tape.inject(fault);
  const ad::Var pred = record_forward(tape, m, x);
  const ad::Var loss = ad::l2_loss(tape, pred, tape.constant(target));
  const ad::GradStore grads = ad::backward(tape, loss);

  WindowGrad out;
  out.loss = tape.real(loss)[0];
  const auto layout = model::parameter_layout(m.params);
  out.grad.resize(layout.empty() ? 0 : layout.back().offset + layout.back().length);
  for (const model::ParamInfo& info : layout) {
    const ad::Value& g = grads.at(info.name);
    double* dst = out.grad.data() + info.offset;
    if (const auto* gr = std::get_if<RealTensor>(&g)) {
      for (std::size_t i = 0; i < gr->size(); ++i) dst[i] = (*gr)[i];
    } else {
      const auto& gc = std::get<ComplexTensor>(g);
      for (std::size_t i = 0; i < gc.size(); ++i) {
        dst[2 * i] = gc[i].real();
        dst[2 * i + 1] = gc[i].imag();
      }
    }
  }
  return out;
}

void rmsprop_step(std::span<double> params, std::span<const double> grads, OptimizerState& state) {
  require(params.size() == grads.size(), ErrorKind::InvalidShape, "rmsprop_step: gradient length differs");
  if (state.v.size() != params.size()) state.v.assign(params.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.v[i] = state.rho * state.v[i] + (1.0 - state.rho) * g * g;
    params[i] -= state.learning_rate * g / (std::sqrt(state.v[i]) + state.epsilon);
  }
}

void TrainConfig::validate() const {
  require(epochs >= 1, ErrorKind::Config, "epochs must be >= 1");
  require(batch_size >= 1, ErrorKind::Config, "batch_size must be >= 1");
  require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorKind::Config, "learning_rate must be >= 0");
  require(rho >= 0.0 && rho < 1.0, ErrorKind::Config, "rmsprop decay must lie in [0, 1)");
  require(epsilon > 0.0, ErrorKind::Config, "rmsprop epsilon must be > 0");
}

std::string History::csv() const {
  std::ostringstream out;
  out << "epoch,train_loss,val_mae,val_rmse,val_mape\n";
  for (const auto& e : epochs)
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_mae) << ','
        << format_double(e.val_rmse) << ',' << format_double(e.val_mape) << '\n';
  return out.str();
}

std::vector<RealTensor> predict_all(const model::Model& m, const data::WindowSet& windows, Exec exec) {
  std::vector<RealTensor> preds(windows.size());
  std::exception_ptr error;
  const auto count = static_cast<std::ptrdiff_t>(windows.size());
#pragma omp parallel for schedule(static) if (fork_threads(exec, windows.size()))
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      preds[static_cast<std::size_t>(i)] = model::model_forward(windows[static_cast<std::size_t>(i)].input, m, Exec::serial);
    } catch (...) {
#pragma omp critical
      error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return preds;
}

TrainResult train(const model::Model& initial, const data::WindowSet& train_windows, const data::WindowSet& val_windows,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  require(!train_windows.empty(), ErrorKind::InsufficientData, "train: no training windows");
  require(!val_windows.empty(), ErrorKind::InsufficientData, "train: no validation windows");
  model::check_params(initial.config, initial.params);

  TrainResult result{initial, initial, {}};
  model::Model& current = result.last;
  std::vector<double> flat = model::flatten(current.params);
  OptimizerState state{std::vector<double>(flat.size(), 0.0), cfg.learning_rate, cfg.rho, cfg.epsilon};
  Rng shuffle_rng(derive_seed(cfg.seed, SeedStream::shuffle));
  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best_mae = std::numeric_limits<double>::infinity();
  std::vector<double> batch_grad(flat.size());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      std::vector<WindowGrad> grads(count);
      std::exception_ptr error;
#pragma omp parallel for schedule(static) if (fork_threads(cfg.exec, count))
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
        try {
          const data::Window& w = train_windows[order[start + static_cast<std::size_t>(i)]];
          grads[static_cast<std::size_t>(i)] = window_gradient(current, w.input, w.target);
        } catch (...) {
#pragma omp critical
          error = std::current_exception();
        }
      }
      if (error) std::rethrow_exception(error);

      double batch_loss = 0.0;
      std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
      for (const WindowGrad& g : grads) {
        batch_loss += g.loss;
        for (std::size_t i = 0; i < batch_grad.size(); ++i) batch_grad[i] += g.grad[i];
      }
      if (!std::isfinite(batch_loss)) throw DivergenceError(epoch);
      rmsprop_step(flat, batch_grad, state);
      for (double v : flat)
        if (!std::isfinite(v)) throw DivergenceError(epoch);
      model::unflatten(flat, current.params);
      epoch_loss += batch_loss;
    }

    const eval::MetricReport val = eval::evaluate(current, val_windows, eval::Scale::normalized, nullptr, cfg.exec);
    EpochRecord rec{epoch, epoch_loss / static_cast<double>(order.size()), val.mae, val.rmse, val.mape_percent};
    if (!std::isfinite(rec.val_mae)) throw DivergenceError(epoch);
    result.history.epochs.push_back(rec);
    const bool improved = rec.val_mae < best_mae;
    if (improved) {
      best_mae = rec.val_mae;
      result.best = current;
      result.history.best_epoch = epoch;
      if (cfg.checkpoint) checkpoint::save(*cfg.checkpoint, result.best);
    }
    if (on_epoch) on_epoch(rec, improved);
  }
  return result;
}

// --- gradient verification -------------------------------------------------

std::string GradCheckReport::summary() const {
  std::ostringstream out;
  out << (passed ? "PASS" : "FAIL") << " worst relative error " << worst_relative_error << " at " << worst_parameter
      << " (analytic " << worst_analytic << ", numeric " << worst_numeric << "), " << checked << " checked, "
      << excluded << " excluded near kinks, tolerance " << tolerance;
  return out.str();
}

GradCheckReport check_gradient(const std::function<double(std::span<const double>)>& loss,
                               std::span<const double> params, std::span<const double> analytic, double step,
                               double tolerance, const std::function<std::string(std::size_t)>& names,
                               const std::function<bool(std::size_t, double)>& skip) {
  GradCheckReport r;
  r.tolerance = tolerance;
  r.passed = false;
  if (!(step > 0.0) || params.size() != analytic.size()) {
    r.worst_relative_error = std::numeric_limits<double>::infinity();
    r.worst_parameter = !(step > 0.0) ? "<step must be positive>" : "<gradient length mismatch>";
    return r;
  }
  std::vector<double> p(params.begin(), params.end());
  double worst = -1.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (skip && skip(i, step)) {
      ++r.excluded;
      continue;
    }
    const double saved = p[i];
    p[i] = saved + step;
    const double up = loss(p);
    p[i] = saved - step;
    const double down = loss(p);
    p[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), kGradCheckFloor});
    double rel = std::abs(analytic[i] - numeric) / denom;
    if (std::isnan(rel)) rel = std::numeric_limits<double>::infinity();
    ++r.checked;
    if (rel > worst) {
      worst = rel;
      r.worst_component = i;
      r.worst_analytic = analytic[i];
      r.worst_numeric = numeric;
    }
  }
  r.worst_relative_error = std::max(worst, 0.0);
  r.worst_parameter = names ? names(r.worst_component) : "[" + std::to_string(r.worst_component) + "]";
  r.passed = r.checked > 0 && r.worst_relative_error < tolerance;
  return r;
}

std::vector<bool> activation_pattern(const model::Model& m, const RealTensor& x) {
  using model::Variant;
  const model::ModelConfig& cfg = m.config;
  std::vector<bool> signs;
  const RealTensor embedded = m.variant == Variant::no_embedding ? model::broadcast_channels(x, cfg.embed_dim)
                                                                 : model::embed(x, m.params.embedding);
  ComplexTensor prev = spectral::dft2(embedded, Exec::serial);
  for (std::size_t k = 0; k < m.params.layers.size(); ++k) {
    const auto& layer = m.variant == Variant::no_dynamic_filter ? m.params.layers.front() : m.params.layers[k];
    const ComplexTensor pre =
        model::add_bias(spectral::channel_matmul(prev, layer.weight, Exec::serial), layer.bias);
    for (const cdouble& v : pre.values()) {
      signs.push_back(v.real() > 0.0);
      signs.push_back(v.imag() > 0.0);
    }
    prev = model::split_relu(pre);
  }
  const RealTensor rep = model::representation(x, m, Exec::serial).representation;
  const model::HeadParams& h = m.params.head;
  const RealTensor reduced = model::reduce_steps(rep, h.reduce);
  const Dims rd = reduced.dims();
  const RealTensor flat = reduced.reshaped(Dims{rd.vars, rd.steps * rd.channels, 1});
  const RealTensor a1 = model::linear(flat, h.w1, h.b1);
  const RealTensor a2 = model::linear(model::leaky_relu(a1, cfg.negative_slope), h.w2, h.b2);
  for (double v : a1.values()) signs.push_back(v > 0.0);
  for (double v : a2.values()) signs.push_back(v > 0.0);
  return signs;
}

GradCheckReport grad_check(const model::Model& m, const data::Window& window, double step, double tolerance,
                           ad::Fault fault) {
  const WindowGrad wg = window_gradient(m, window.input, window.target, fault);
  const std::vector<double> flat = model::flatten(m.params);
  const auto layout = model::parameter_layout(m.params);
  const std::vector<bool> base_pattern = activation_pattern(m, window.input);

  model::Model probe = m;
  const auto loss = [&](std::span<const double> p) {
    model::unflatten(p, probe.params);
    return loss_l2(model::model_forward(window.input, probe, Exec::serial), window.target);
  };
  const auto crosses_kink = [&](std::size_t i, double h) {
    std::vector<double> p = flat;
    for (double sign : {1.0, -1.0}) {
      p[i] = flat[i] + sign * h;
      model::unflatten(p, probe.params);
      if (activation_pattern(probe, window.input) != base_pattern) return true;
    }
    return false;
  };
  const auto names = [&](std::size_t i) {
    for (const auto& info : layout)
      if (i >= info.offset && i < info.offset + info.length) {
        const std::size_t local = i - info.offset;
        if (!info.is_complex) return info.name + "[" + std::to_string(local) + "]";
        return info.name + "[" + std::to_string(local / 2) + (local % 2 ? "].imag" : "].real");
      }
    return std::string("<unknown>");
  };
  return check_gradient(loss, flat, wg.grad, step, tolerance, names, crosses_kink);
}

}  // namespace evfgn::training
