#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evfgn/parallel.hpp"
#include "evfgn/tensor.hpp"

namespace evfgn::model {

struct ModelConfig {
  std::size_t vars = 8;           ///< N
  std::size_t steps = 12;         ///< T, input window length
  std::size_t horizon = 3;        ///< tau
  std::size_t embed_dim = 8;      ///< d
  std::size_t order = 3;          ///< K, number of FGSO layers
  std::size_t reduced_steps = 2;  ///< l, time-axis reduction target
  std::size_t ffn_hidden1 = 64;
  std::size_t ffn_hidden2 = 128;
  double negative_slope = 0.01;  ///< LeakyReLU slope in the head

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct EmbeddingParams {
  RealTensor phi_v;  ///< N x d variable embedding
  RealTensor phi_u;  ///< T x d temporal embedding
};

struct FgsoLayerParams {
  ComplexTensor weight;  ///< d x d, shared by every frequency bin
  ComplexTensor bias;    ///< d
};

struct HeadParams {
  RealTensor reduce;  ///< T x l
  RealTensor w1, b1;  ///< (l d) x d1, d1
  RealTensor w2, b2;  ///< d1 x d2, d2
  RealTensor w3, b3;  ///< d2 x tau, tau
};

struct ModelParams {
  EmbeddingParams embedding;
  std::vector<FgsoLayerParams> layers;  ///< k = 1..K; layer 0 is the identity
  HeadParams head;

  bool operator==(const ModelParams&) const;
};

enum class Activation { split_relu, identity };

/// Structural variants of the network used for ablations.
enum class Variant { full, no_embedding, no_dynamic_filter, no_residual, no_summation };

const char* to_string(Variant v) noexcept;
Variant parse_variant(const std::string& name);

struct Model {
  ModelConfig config;
  ModelParams params;
  Variant variant = Variant::full;
};

// --- forward kernels ------------------------------------------------------

/// out[n,t,c] = x[n,t] * phi_v[n,c] * phi_u[t,c].
RealTensor embed(const RealTensor& x, const EmbeddingParams& e);

/// Raw input repeated across `channels` (the no-embedding path).
RealTensor broadcast_channels(const RealTensor& x, std::size_t channels);

/// ReLU on real and imaginary parts independently.
ComplexTensor split_relu(const ComplexTensor& x);

/// Adds a length-d complex bias to every bin.
ComplexTensor add_bias(const ComplexTensor& x, const ComplexTensor& bias);

/// sigma(prev * S_k + b_k).
ComplexTensor fgso_layer(const ComplexTensor& prev, const FgsoLayerParams& layer, Activation activation,
                         Exec exec = Exec::parallel);

/// Psi_K(X) = sum_k X_k with X_0 = x0 and X_k = fgso_layer(X_{k-1}, layer_k).
/// Variants drop the k = 0 term, return X_K alone, or reuse layer 1 at every step.
ComplexTensor evfgn_forward(const ComplexTensor& x0, std::span<const FgsoLayerParams> layers,
                            Activation activation, Variant variant = Variant::full, Exec exec = Exec::parallel);

/// Every X_k, k = 0..K, in order (layer diagnostics and adjacency export).
std::vector<ComplexTensor> evfgn_layers(const ComplexTensor& x0, std::span<const FgsoLayerParams> layers,
                                        Activation activation, Variant variant = Variant::full,
                                        Exec exec = Exec::parallel);

/// z[n,j,c] = sum_t rep[n,t,c] w[t,j].
RealTensor reduce_steps(const RealTensor& rep, const RealTensor& w);

/// y = z w + b for z rows x in, w in x out, b out.
RealTensor linear(const RealTensor& z, const RealTensor& w, const RealTensor& b);

RealTensor leaky_relu(const RealTensor& x, double slope);

/// Reduction T -> l, flatten to N x (l d), three-layer LeakyReLU FFN; returns N x tau.
RealTensor head_forward(const RealTensor& rep, const HeadParams& h, double slope);

struct ForwardTrace {
  RealTensor representation;  ///< real(IDFT(Psi_K(X))), N x T x d
  double residual_imag = 0.0;
};

/// Time-domain representation feeding the head (the adjacency source).
ForwardTrace representation(const RealTensor& x, const Model& model, Exec exec = Exec::parallel);

/// Full forecast, N x tau. `x` is N x T (x1).
RealTensor model_forward(const RealTensor& x, const Model& model, Exec exec = Exec::parallel);

// --- parameters -----------------------------------------------------------

ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

/// Complex values held by the FGSO stack: K (d^2 + d).
std::size_t fgso_parameter_count(const ModelParams& params);

struct ParamInfo {
  std::string name;
  Dims dims;
  bool is_complex = false;
  std::size_t offset = 0;  ///< into the flat real vector
  std::size_t length = 0;  ///< reals (2x element count for complex)
};

/// Manifest order: embedding, FGSO layers, head.
std::vector<ParamInfo> parameter_layout(const ModelParams& params);

/// Complex entries become consecutive (real, imag) pairs.
std::vector<double> flatten(const ModelParams& params);
void unflatten(std::span<const double> flat, ModelParams& params);

/// Visits every parameter tensor in manifest order.
template <typename Params, typename F>
void for_each_param(Params& p, F&& f) {
  f("embed.phi_v", p.embedding.phi_v);
  f("embed.phi_u", p.embedding.phi_u);
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const std::string prefix = "fgso" + std::to_string(k + 1);
    f(prefix + ".S", p.layers[k].weight);
    f(prefix + ".b", p.layers[k].bias);
  }
  f("head.reduce", p.head.reduce);
  f("ffn.W1", p.head.w1);
  f("ffn.b1", p.head.b1);
  f("ffn.W2", p.head.w2);
  f("ffn.b2", p.head.b2);
  f("ffn.W3", p.head.w3);
  f("ffn.b3", p.head.b3);
}

void check_params(const ModelConfig& config, const ModelParams& params);

}  // namespace evfgn::model
