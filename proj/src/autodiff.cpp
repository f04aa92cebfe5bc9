#include "evfgn/autodiff.hpp"

#include <atomic>

#include "dense.hpp"
#include "evfgn/model.hpp"
#include "evfgn/spectral.hpp"

namespace evfgn::ad {

namespace {

std::atomic<std::uint64_t> next_tape_id{1};

Value zeros_like(const Value& v) {
  return std::visit([](const auto& t) -> Value { return std::decay_t<decltype(t)>(t.dims()); }, v);
}

bool is_real(const Value& v) { return std::holds_alternative<RealTensor>(v); }

}  // namespace

Tape::Tape() : id_(next_tape_id.fetch_add(1)) {}

std::size_t Tape::check(Var v) const {
  require(v.tape_ == id_ && v.id_ < nodes_.size(), ErrorKind::MissingGradPath,
          "variable does not belong to this tape");
  return v.id_;
}

Var Tape::constant(Value v) {
  nodes_.push_back(Node{std::move(v), {}, {}, {}, false, {}, false});
  return Var(nodes_.size() - 1, id_);
}

Var Tape::parameter(std::string name, Value v) {
  nodes_.push_back(Node{std::move(v), {}, {}, {}, true, std::move(name), true});
  return Var(nodes_.size() - 1, id_);
}

Var Tape::record(Value v, std::vector<Var> inputs, ReverseRule rule) {
  Node node;
  node.value = std::move(v);
  for (Var in : inputs) {
    const std::size_t id = check(in);
    node.inputs.push_back(id);
    node.requires_grad = node.requires_grad || nodes_[id].requires_grad;
  }
  node.rule = std::move(rule);
  nodes_.push_back(std::move(node));
  return Var(nodes_.size() - 1, id_);
}

const Value& Tape::value(Var v) const { return nodes_[check(v)].value; }
const RealTensor& Tape::real(Var v) const { return std::get<RealTensor>(value(v)); }
const ComplexTensor& Tape::complex(Var v) const { return std::get<ComplexTensor>(value(v)); }
const Value& Tape::grad(Var v) const { return nodes_[check(v)].grad; }

void Tape::backward(Var loss) {
  const std::size_t root = check(loss);
  const Value& lv = nodes_[root].value;
  require(is_real(lv) && std::get<RealTensor>(lv).size() == 1, ErrorKind::InvalidShape,
          "backward: loss must be a real scalar");
  require(nodes_[root].requires_grad, ErrorKind::MissingGradPath, "backward: loss does not depend on any parameter");
  for (Node& n : nodes_) n.grad = n.requires_grad ? zeros_like(n.value) : Value{};
  std::get<RealTensor>(nodes_[root].grad)[0] = 1.0;
  visits_ = 0;
  for (std::size_t i = root + 1; i-- > 0;) {
    ++visits_;
    Node& n = nodes_[i];
    if (n.requires_grad && n.rule) n.rule(*this, i);
  }
}

std::vector<std::pair<std::string, std::size_t>> Tape::parameters() const {
  std::vector<std::pair<std::string, std::size_t>> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].is_parameter) out.emplace_back(nodes_[i].name, i);
  return out;
}

const Value& GradStore::at(const std::string& name) const {
  for (const auto& [n, g] : entries_)
    if (n == name) return g;
  fail(ErrorKind::MissingGradPath, "no gradient recorded for '" + name + "'");
}

bool GradStore::contains(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.first == name) return true;
  return false;
}

GradStore backward(Tape& tape, Var loss) {
  tape.backward(loss);
  GradStore store;
  for (const auto& [name, id] : tape.parameters()) store.add(name, tape.grad_at(id));
  return store;
}

// --- operations -----------------------------------------------------------

Var embed(Tape& tape, Var x, Var phi_v, Var phi_u) {
  model::EmbeddingParams e{tape.real(phi_v), tape.real(phi_u)};
  RealTensor out = model::embed(tape.real(x), e);
  return tape.record(std::move(out), {x, phi_v, phi_u}, [](Tape& tp, std::size_t self) {
    const auto& in = tp.inputs_of(self);
    const auto& g = std::get<RealTensor>(tp.grad_at(self));
    const auto& xv = std::get<RealTensor>(tp.value_at(in[0]));
    const auto& pv = std::get<RealTensor>(tp.value_at(in[1]));
    const auto& pu = std::get<RealTensor>(tp.value_at(in[2]));
    const Dims d = g.dims();
    for (std::size_t n = 0; n < d.vars; ++n)
      for (std::size_t t = 0; t < d.steps; ++t)
        for (std::size_t c = 0; c < d.channels; ++c) {
          const double gi = g(n, t, c);
          if (tp.wants_grad(in[0])) tp.real_grad(in[0])(n, t, 0) += gi * pv(n, c) * pu(t, c);
          if (tp.wants_grad(in[1])) tp.real_grad(in[1])(n, c) += gi * xv(n, t, 0) * pu(t, c);
          if (tp.wants_grad(in[2])) tp.real_grad(in[2])(t, c) += gi * xv(n, t, 0) * pv(n, c);
        }
  });
}

Var broadcast_channels(Tape& tape, Var x, std::size_t channels) {
  RealTensor out = model::broadcast_channels(tape.real(x), channels);
  return tape.record(std::move(out), {x}, [channels](Tape& tp, std::size_t self) {
    const std::size_t src = tp.inputs_of(self)[0];
    if (!tp.wants_grad(src)) return;
    const auto& g = std::get<RealTensor>(tp.grad_at(self));
    RealTensor& gx = tp.real_grad(src);
    for (std::size_t i = 0; i < gx.size(); ++i)
      for (std::size_t c = 0; c < channels; ++c) gx[i] += g[i * channels + c];
  });
}

// y = F x with F unnormalized; the adjoint is F^H = N T * IDFT.
Var dft2(Tape& tape, Var x) {
  const Value& xv = tape.value(x);
  ComplexTensor out = is_real(xv) ? spectral::dft2(std::get<RealTensor>(xv), Exec::serial)
                                  : spectral::dft2(std::get<ComplexTensor>(xv), Exec::serial);
  return tape.record(std::move(out), {x}, [](Tape& tp, std::size_t self) {
    const std::size_t src = tp.inputs_of(self)[0];
    if (!tp.wants_grad(src)) return;
    const auto& g = std::get<ComplexTensor>(tp.grad_at(self));
    const double scale = static_cast<double>(g.dims().vars * g.dims().steps);
    const ComplexTensor back = spectral::idft2(g, Exec::serial);
    if (is_real(tp.value_at(src))) {
      RealTensor& gx = tp.real_grad(src);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += scale * back[i].real();
    } else {
      ComplexTensor& gx = tp.complex_grad(src);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += scale * back[i];
    }
  });
}

// y = (1/NT) F^H x; the adjoint is F / (N T).
Var idft2(Tape& tape, Var s) {
  ComplexTensor out = spectral::idft2(tape.complex(s), Exec::serial);
  return tape.record(std::move(out), {s}, [](Tape& tp, std::size_t self) {
    const std::size_t src = tp.inputs_of(self)[0];
    if (!tp.wants_grad(src)) return;
    const auto& g = std::get<ComplexTensor>(tp.grad_at(self));
    const double scale = 1.0 / static_cast<double>(g.dims().vars * g.dims().steps);
    const ComplexTensor fwd = spectral::dft2(g, Exec::serial);
    ComplexTensor& gx = tp.complex_grad(src);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += scale * fwd[i];
  });
}

// Y = X M per bin: dX = dY M^H, dM = sum_bins X^H dY.
Var channel_matmul(Tape& tape, Var s, Var m) {
  ComplexTensor out = spectral::channel_matmul(tape.complex(s), tape.complex(m), Exec::serial);
  return tape.record(std::move(out), {s, m}, [](Tape& tp, std::size_t self) {
    const auto& in = tp.inputs_of(self);
    const auto& g = std::get<ComplexTensor>(tp.grad_at(self));
    const auto& x = std::get<ComplexTensor>(tp.value_at(in[0]));
    const auto& w = std::get<ComplexTensor>(tp.value_at(in[1]));
    const std::size_t bins = x.dims().vars * x.dims().steps;
    const auto gm = rows_of(g, w.cols(), 0, bins);
    // dX = dY W^H, dW = X^H dY.
    if (tp.wants_grad(in[0]))
      rows_of(tp.complex_grad(in[0]), w.rows(), 0, bins).noalias() += gm * as_matrix(w).adjoint();
    if (tp.wants_grad(in[1])) as_matrix(tp.complex_grad(in[1])).noalias() += rows_of(x, w.rows(), 0, bins).adjoint() * gm;
  });
}

Var add_bias(Tape& tape, Var x, Var bias) {
  ComplexTensor out = model::add_bias(tape.complex(x), tape.complex(bias));
  return tape.record(std::move(out), {x, bias}, [](Tape& tp, std::size_t self) {
    const auto& in = tp.inputs_of(self);
    const auto& g = std::get<ComplexTensor>(tp.grad_at(self));
    if (tp.wants_grad(in[0])) {
      ComplexTensor& gx = tp.complex_grad(in[0]);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
    }
    if (tp.wants_grad(in[1])) {
      ComplexTensor& gb = tp.complex_grad(in[1]);
      const std::size_t d = gb.size();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % d] += g[i];
    }
  });
}

// Subgradient 0 at the kink.
Var split_relu(Tape& tape, Var x) {
  ComplexTensor out = model::split_relu(tape.complex(x));
  return tape.record(std::move(out), {x}, [](Tape& tp, std::size_t self) {
    const std::size_t src = tp.inputs_of(self)[0];
    if (!tp.wants_grad(src)) return;
    const auto& g = std::get<ComplexTensor>(tp.grad_at(self));
    const auto& xv = std::get<ComplexTensor>(tp.value_at(src));
    ComplexTensor& gx = tp.complex_grad(src);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double re = xv[i].real() > 0.0 ? g[i].real() : 0.0;
      const double im = xv[i].imag() > 0.0 ? g[i].imag() : 0.0;
      gx[i] += cdouble(re, im);
    }
  });
}

Var add(Tape& tape, Var a, Var b) {
  Value out = std::visit(
      [&](const auto& av) -> Value {
        using T = std::decay_t<decltype(av)>;
        const T& bv = std::get<T>(tape.value(b));
        require_dims(bv.dims(), av.dims(), "add");
        T sum = av;
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += bv[i];
        return sum;
      },
      tape.value(a));
  return tape.record(std::move(out), {a, b}, [](Tape& tp, std::size_t self) {
    for (std::size_t src : tp.inputs_of(self)) {
      if (!tp.wants_grad(src)) continue;
      if (is_real(tp.grad_at(self))) {
        const auto& g = std::get<RealTensor>(tp.grad_at(self));
        RealTensor& gx = tp.real_grad(src);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
      } else {
        const auto& g = std::get<ComplexTensor>(tp.grad_at(self));
        ComplexTensor& gx = tp.complex_grad(src);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
      }
    }
  });
}

Var real_part(Tape& tape, Var s) {
  RealTensor out = spectral::real_part(tape.complex(s)).values;
  return tape.record(std::move(out), {s}, [](Tape& tp, std::size_t self) {
    const std::size_t src = tp.inputs_of(self)[0];
    if (!tp.wants_grad(src)) return;
    const auto& g = std::get<RealTensor>(tp.grad_at(self));
    ComplexTensor& gx = tp.complex_grad(src);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += cdouble(g[i], 0.0);
  });
}

Var reduce_steps(Tape& tape, Var rep, Var w) {
  RealTensor out = model::reduce_steps(tape.real(rep), tape.real(w));
  return tape.record(std::move(out), {rep, w}, [](Tape& tp, std::size_t self) {
    const auto& in = tp.inputs_of(self);
    const auto& g = std::get<RealTensor>(tp.grad_at(self));
    const auto& r = std::get<RealTensor>(tp.value_at(in[0]));
    const auto& w = std::get<RealTensor>(tp.value_at(in[1]));
    const Dims d = r.dims();
    const std::size_t l = w.cols();
    for (std::size_t n = 0; n < d.vars; ++n)
      for (std::size_t t = 0; t < d.steps; ++t)
        for (std::size_t j = 0; j < l; ++j)
          for (std::size_t c = 0; c < d.channels; ++c) {
            const double gv = g(n, j, c);
            if (tp.wants_grad(in[0])) tp.real_grad(in[0])(n, t, c) += gv * w(t, j);
            if (tp.wants_grad(in[1])) tp.real_grad(in[1])(t, j) += gv * r(n, t, c);
          }
  });
}

Var reshape(Tape& tape, Var x, Dims dims) {
  RealTensor out = tape.real(x).reshaped(dims);
  return tape.record(std::move(out), {x}, [](Tape& tp, std::size_t self) {
    const std::size_t src = tp.inputs_of(self)[0];
    if (!tp.wants_grad(src)) return;
    const auto& g = std::get<RealTensor>(tp.grad_at(self));
    RealTensor& gx = tp.real_grad(src);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
  });
}

// Y = Z W + b: dZ = dY W^T, dW = Z^T dY, db = column sums of dY.
Var linear(Tape& tape, Var z, Var w, Var b) {
  RealTensor out = model::linear(tape.real(z), tape.real(w), tape.real(b));
  return tape.record(std::move(out), {z, w, b}, [](Tape& tp, std::size_t self) {
    const auto& in = tp.inputs_of(self);
    const auto& g = std::get<RealTensor>(tp.grad_at(self));
    const auto& zv = std::get<RealTensor>(tp.value_at(in[0]));
    const auto& wv = std::get<RealTensor>(tp.value_at(in[1]));
    const auto g_m = as_matrix(g);
    if (tp.wants_grad(in[0])) as_matrix(tp.real_grad(in[0])).noalias() += g_m * as_matrix(wv).transpose();
    if (tp.wants_grad(in[1])) {
      const double scale = tp.fault() == Fault::linear_weight_grad ? 1.5 : 1.0;
      as_matrix(tp.real_grad(in[1])).noalias() += scale * (as_matrix(zv).transpose() * g_m);
    }
    if (tp.wants_grad(in[2])) {
      RealTensor& gb = tp.real_grad(in[2]);
      Eigen::Map<Eigen::RowVectorXd>(gb.data(), static_cast<Eigen::Index>(gb.size())) += g_m.colwise().sum();
    }
  });
}

Var leaky_relu(Tape& tape, Var x, double slope) {
  RealTensor out = model::leaky_relu(tape.real(x), slope);
  return tape.record(std::move(out), {x}, [slope](Tape& tp, std::size_t self) {
    const std::size_t src = tp.inputs_of(self)[0];
    if (!tp.wants_grad(src)) return;
    const auto& g = std::get<RealTensor>(tp.grad_at(self));
    const auto& xv = std::get<RealTensor>(tp.value_at(src));
    RealTensor& gx = tp.real_grad(src);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += xv[i] > 0.0 ? g[i] : slope * g[i];
  });
}

Var l2_loss(Tape& tape, Var pred, Var target) {
  const RealTensor& p = tape.real(pred);
  const RealTensor& t = tape.real(target);
  require_dims(t.dims(), p.dims(), "l2_loss");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += (p[i] - t[i]) * (p[i] - t[i]);
  RealTensor out(1, 1, 1);
  out[0] = sum;
  return tape.record(std::move(out), {pred, target}, [](Tape& tp, std::size_t self) {
    const auto& in = tp.inputs_of(self);
    const double g = std::get<RealTensor>(tp.grad_at(self))[0];
    const auto& pv = std::get<RealTensor>(tp.value_at(in[0]));
    const auto& tv = std::get<RealTensor>(tp.value_at(in[1]));
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double diff = 2.0 * g * (pv[i] - tv[i]);
      if (tp.wants_grad(in[0])) tp.real_grad(in[0])[i] += diff;
      if (tp.wants_grad(in[1])) tp.real_grad(in[1])[i] -= diff;
    }
  });
}

Var sum_squares(Tape& tape, Var x) {
  const RealTensor& xv = tape.real(x);
  double sum = 0.0;
  for (double v : xv.values()) sum += v * v;
  RealTensor out(1, 1, 1);
  out[0] = sum;
  return tape.record(std::move(out), {x}, [](Tape& tp, std::size_t self) {
    const std::size_t src = tp.inputs_of(self)[0];
    if (!tp.wants_grad(src)) return;
    const double g = std::get<RealTensor>(tp.grad_at(self))[0];
    const auto& xv = std::get<RealTensor>(tp.value_at(src));
    RealTensor& gx = tp.real_grad(src);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += 2.0 * g * xv[i];
  });
}

}  // namespace evfgn::ad
