#include "evfgn/model.hpp"

#include <algorithm>
#include <cmath>

#include "dense.hpp"
#include "evfgn/random.hpp"
#include "evfgn/spectral.hpp"

namespace evfgn::model {

void ModelConfig::validate() const {
  const auto positive = [](std::size_t v, const char* name) {
    require(v > 0, ErrorKind::Config, std::string(name) + " must be positive");
  };
  positive(vars, "vars");
  positive(steps, "steps");
  positive(horizon, "horizon");
  positive(embed_dim, "embed_dim");
  positive(reduced_steps, "reduced_steps");
  positive(ffn_hidden1, "ffn_hidden1");
  positive(ffn_hidden2, "ffn_hidden2");
  require(reduced_steps <= steps, ErrorKind::Config, "reduced_steps must not exceed steps");
  require(std::isfinite(negative_slope), ErrorKind::Config, "negative_slope must be finite");
}

bool ModelParams::operator==(const ModelParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t k = 0; k < layers.size(); ++k)
    if (!(layers[k].weight == other.layers[k].weight) || !(layers[k].bias == other.layers[k].bias)) return false;
  const HeadParams& a = head;
  const HeadParams& b = other.head;
  return embedding.phi_v == other.embedding.phi_v && embedding.phi_u == other.embedding.phi_u &&
         a.reduce == b.reduce && a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2 && a.w3 == b.w3 &&
         a.b3 == b.b3;
}

const char* to_string(Variant v) noexcept {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_embedding: return "no_embedding";
    case Variant::no_dynamic_filter: return "no_dynamic_filter";
    case Variant::no_residual: return "no_residual";
    case Variant::no_summation: return "no_summation";
  }
  return "full";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::full, Variant::no_embedding, Variant::no_dynamic_filter, Variant::no_residual,
                    Variant::no_summation})
    if (name == to_string(v)) return v;
  fail(ErrorKind::Config, "unknown variant '" + name + "'");
}

RealTensor embed(const RealTensor& x, const EmbeddingParams& e) {
  const std::size_t n_vars = x.dims().vars;
  const std::size_t n_steps = x.dims().steps;
  const std::size_t d = e.phi_v.cols();
  require(x.dims().channels == 1, ErrorKind::InvalidShape, "embed: input must have one channel");
  require_dims(e.phi_v.dims(), Dims{n_vars, d, 1}, "embed phi_v");
  require_dims(e.phi_u.dims(), Dims{n_steps, d, 1}, "embed phi_u");
  RealTensor out(n_vars, n_steps, d);
  for (std::size_t n = 0; n < n_vars; ++n)
    for (std::size_t t = 0; t < n_steps; ++t) {
      const double v = x(n, t, 0);
      for (std::size_t c = 0; c < d; ++c) out(n, t, c) = v * e.phi_v(n, c) * e.phi_u(t, c);
    }
  return out;
}

RealTensor broadcast_channels(const RealTensor& x, std::size_t channels) {
  require(x.dims().channels == 1, ErrorKind::InvalidShape, "broadcast_channels: input must have one channel");
  RealTensor out(x.dims().vars, x.dims().steps, channels);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t c = 0; c < channels; ++c) out[i * channels + c] = x[i];
  return out;
}

ComplexTensor split_relu(const ComplexTensor& x) {
  ComplexTensor out(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = cdouble(std::max(x[i].real(), 0.0), std::max(x[i].imag(), 0.0));
  return out;
}

ComplexTensor add_bias(const ComplexTensor& x, const ComplexTensor& bias) {
  const std::size_t d = x.dims().channels;
  require(bias.size() == d, ErrorKind::InvalidShape, "add_bias: bias length differs from channel count");
  ComplexTensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bias[i % d];
  return out;
}

ComplexTensor fgso_layer(const ComplexTensor& prev, const FgsoLayerParams& layer, Activation activation,
                         Exec exec) {
  const std::size_t d = prev.dims().channels;
  require_dims(layer.weight.dims(), Dims{d, d, 1}, "fgso_layer weight");
  ComplexTensor pre = add_bias(spectral::channel_matmul(prev, layer.weight, exec), layer.bias);
  return activation == Activation::split_relu ? split_relu(pre) : pre;
}

std::vector<ComplexTensor> evfgn_layers(const ComplexTensor& x0, std::span<const FgsoLayerParams> layers,
                                        Activation activation, Variant variant, Exec exec) {
  std::vector<ComplexTensor> out;
  out.reserve(layers.size() + 1);
  out.push_back(x0);
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const FgsoLayerParams& layer = variant == Variant::no_dynamic_filter ? layers.front() : layers[k];
    out.push_back(fgso_layer(out.back(), layer, activation, exec));
  }
  return out;
}

ComplexTensor evfgn_forward(const ComplexTensor& x0, std::span<const FgsoLayerParams> layers,
                            Activation activation, Variant variant, Exec exec) {
  const std::vector<ComplexTensor> xs = evfgn_layers(x0, layers, activation, variant, exec);
  if (variant == Variant::no_summation) return xs.back();
  ComplexTensor total(x0.dims());
  const std::size_t first = variant == Variant::no_residual ? 1 : 0;
  for (std::size_t k = first; k < xs.size(); ++k)
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += xs[k][i];
  return total;
}

RealTensor reduce_steps(const RealTensor& rep, const RealTensor& w) {
  const Dims d = rep.dims();
  if (!(w.dims().channels == 1 && w.rows() == d.steps)) fail(ErrorKind::InvalidShape,
          "reduce_steps: weight " + w.dims().str() + " does not match " + d.str());
  const std::size_t l = w.cols();
  RealTensor out(d.vars, l, d.channels);
  for (std::size_t n = 0; n < d.vars; ++n)
    for (std::size_t t = 0; t < d.steps; ++t)
      for (std::size_t j = 0; j < l; ++j) {
        const double wt = w(t, j);
        const double* src = rep.data() + (n * d.steps + t) * d.channels;
        double* dst = out.data() + (n * l + j) * d.channels;
        for (std::size_t c = 0; c < d.channels; ++c) dst[c] += src[c] * wt;
      }
  return out;
}

RealTensor linear(const RealTensor& z, const RealTensor& w, const RealTensor& b) {
  if (z.dims().channels != 1 || w.dims().channels != 1 || z.cols() != w.rows())
    fail(ErrorKind::InvalidShape, "linear: " + z.dims().str() + " x " + w.dims().str());
  require(b.size() == w.cols(), ErrorKind::InvalidShape, "linear: bias length");
  RealTensor y = RealTensor::matrix(z.rows(), w.cols());
  auto out = as_matrix(y);
  out.noalias() = as_matrix(z) * as_matrix(w);
  out.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  return y;
}

RealTensor leaky_relu(const RealTensor& x, double slope) {
  RealTensor out = x;
  for (double& v : out.values())
    if (!(v > 0.0)) v *= slope;
  return out;
}

RealTensor head_forward(const RealTensor& rep, const HeadParams& h, double slope) {
  const RealTensor reduced = reduce_steps(rep, h.reduce);
  const Dims rd = reduced.dims();
  const RealTensor flat = reduced.reshaped(Dims{rd.vars, rd.steps * rd.channels, 1});
  const RealTensor x1 = leaky_relu(linear(flat, h.w1, h.b1), slope);
  const RealTensor x2 = leaky_relu(linear(x1, h.w2, h.b2), slope);
  return linear(x2, h.w3, h.b3);
}

ForwardTrace representation(const RealTensor& x, const Model& model, Exec exec) {
  const ModelConfig& cfg = model.config;
  require_dims(x.dims(), Dims{cfg.vars, cfg.steps, 1}, "model input");
  const RealTensor embedded = model.variant == Variant::no_embedding
                                  ? broadcast_channels(x, cfg.embed_dim)
                                  : embed(x, model.params.embedding);
  const ComplexTensor spectrum = spectral::dft2(embedded, exec);
  const ComplexTensor filtered =
      evfgn_forward(spectrum, model.params.layers, Activation::split_relu, model.variant, exec);
  spectral::RealPart rp = spectral::real_part(spectral::idft2(filtered, exec));
  return {std::move(rp.values), rp.residual_imag};
}

RealTensor model_forward(const RealTensor& x, const Model& model, Exec exec) {
  const ForwardTrace trace = representation(x, model, exec);
  return head_forward(trace.representation, model.params.head, model.config.negative_slope);
}

namespace {

RealTensor uniform_matrix(std::size_t rows, std::size_t cols, double variance, Rng& rng) {
  const double bound = std::sqrt(3.0 * variance);
  RealTensor m = RealTensor::matrix(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const std::size_t d = config.embed_dim;
  ModelParams p;
  // Embeddings scale a scalar input, so fan-in is 1.
  p.embedding.phi_v = uniform_matrix(config.vars, d, 1.0, rng);
  p.embedding.phi_u = uniform_matrix(config.steps, d, 1.0, rng);
  const double half_bound = std::sqrt(3.0 / (2.0 * static_cast<double>(d)));  // Var(re) = Var(im) = 1/(2d)
  for (std::size_t k = 0; k < config.order; ++k) {
    FgsoLayerParams layer{ComplexTensor::matrix(d, d), ComplexTensor::vector(d)};
    for (cdouble& v : layer.weight.values()) {
      const double re = rng.uniform(-half_bound, half_bound);
      const double im = rng.uniform(-half_bound, half_bound);
      v = cdouble(re, im);
    }
    p.layers.push_back(std::move(layer));
  }
  HeadParams& h = p.head;
  h.reduce = uniform_matrix(config.steps, config.reduced_steps, 1.0 / static_cast<double>(config.steps), rng);
  const std::size_t flat = config.reduced_steps * d;
  h.w1 = uniform_matrix(flat, config.ffn_hidden1, 1.0 / static_cast<double>(flat), rng);
  h.b1 = RealTensor::vector(config.ffn_hidden1);
  h.w2 = uniform_matrix(config.ffn_hidden1, config.ffn_hidden2, 1.0 / static_cast<double>(config.ffn_hidden1), rng);
  h.b2 = RealTensor::vector(config.ffn_hidden2);
  h.w3 = uniform_matrix(config.ffn_hidden2, config.horizon, 1.0 / static_cast<double>(config.ffn_hidden2), rng);
  h.b3 = RealTensor::vector(config.horizon);
  return p;
}

std::size_t fgso_parameter_count(const ModelParams& params) {
  std::size_t count = 0;
  for (const FgsoLayerParams& layer : params.layers) count += layer.weight.size() + layer.bias.size();
  return count;
}

std::vector<ParamInfo> parameter_layout(const ModelParams& params) {
  std::vector<ParamInfo> layout;
  std::size_t offset = 0;
  for_each_param(params, [&](const std::string& name, const auto& t) {
    constexpr bool is_cplx = std::is_same_v<std::decay_t<decltype(t)>, ComplexTensor>;
    const std::size_t len = t.size() * (is_cplx ? 2 : 1);
    layout.push_back({name, t.dims(), is_cplx, offset, len});
    offset += len;
  });
  return layout;
}

std::vector<double> flatten(const ModelParams& params) {
  std::vector<double> flat;
  for_each_param(params, [&](const std::string&, const auto& t) {
    for (const auto& v : t.values()) {
      if constexpr (std::is_same_v<std::decay_t<decltype(v)>, cdouble>) {
        flat.push_back(v.real());
        flat.push_back(v.imag());
      } else {
        flat.push_back(v);
      }
    }
  });
  return flat;
}

void unflatten(std::span<const double> flat, ModelParams& params) {
  std::size_t pos = 0;
  for_each_param(params, [&](const std::string& name, auto& t) {
    constexpr bool is_cplx = std::is_same_v<std::decay_t<decltype(t)>, ComplexTensor>;
    const std::size_t need = t.size() * (is_cplx ? 2 : 1);
    require(pos + need <= flat.size(), ErrorKind::InvalidShape, "unflatten: vector too short at " + name);
    for (auto& v : t.values()) {
      if constexpr (is_cplx) {
        v = cdouble(flat[pos], flat[pos + 1]);
        pos += 2;
      } else {
        v = flat[pos++];
      }
    }
  });
  require(pos == flat.size(), ErrorKind::InvalidShape, "unflatten: vector too long");
}

void check_params(const ModelConfig& c, const ModelParams& p) {
  c.validate();
  const std::size_t d = c.embed_dim;
  require_dims(p.embedding.phi_v.dims(), Dims{c.vars, d, 1}, "phi_v");
  require_dims(p.embedding.phi_u.dims(), Dims{c.steps, d, 1}, "phi_u");
  require(p.layers.size() == c.order, ErrorKind::InvalidShape, "layer count differs from K");
  for (const FgsoLayerParams& layer : p.layers) {
    require_dims(layer.weight.dims(), Dims{d, d, 1}, "FGSO weight");
    require_dims(layer.bias.dims(), Dims{d, 1, 1}, "FGSO bias");
  }
  const HeadParams& h = p.head;
  require_dims(h.reduce.dims(), Dims{c.steps, c.reduced_steps, 1}, "head.reduce");
  require_dims(h.w1.dims(), Dims{c.reduced_steps * d, c.ffn_hidden1, 1}, "ffn.W1");
  require_dims(h.b1.dims(), Dims{c.ffn_hidden1, 1, 1}, "ffn.b1");
  require_dims(h.w2.dims(), Dims{c.ffn_hidden1, c.ffn_hidden2, 1}, "ffn.W2");
  require_dims(h.b2.dims(), Dims{c.ffn_hidden2, 1, 1}, "ffn.b2");
  require_dims(h.w3.dims(), Dims{c.ffn_hidden2, c.horizon, 1}, "ffn.W3");
  require_dims(h.b3.dims(), Dims{c.horizon, 1, 1}, "ffn.b3");
}

}  // namespace evfgn::model
