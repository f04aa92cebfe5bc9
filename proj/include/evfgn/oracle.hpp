#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evfgn/tensor.hpp"

// Brute-force time-domain references. Nothing here calls into the FFT
// kernels except the explicit "Fourier path" halves of the equivalence
// checks, which are the code under test.
namespace evfgn::oracle {

/// Direct O(n^2) DFT; `inverse` uses exp(+...) and applies 1/n.
std::vector<cdouble> naive_dft(std::span<const cdouble> x, bool inverse = false);

/// Direct O((N T)^2) 2D DFT per channel, same convention as spectral::dft2.
ComplexTensor naive_dft2(const ComplexTensor& x);

/// (x * h)[m] = sum_j h[j] x[(m - j) mod n].
std::vector<double> circular_convolve(std::span<const double> x, std::span<const double> h);
std::vector<cdouble> circular_convolve(std::span<const cdouble> x, std::span<const cdouble> h);

/// Graph shift operator: n x n real matrix, zero where nodes are unconnected.
struct Gso {
  RealTensor matrix;

  std::size_t nodes() const noexcept { return matrix.rows(); }
  static Gso identity(std::size_t n);
  static Gso all_ones(std::size_t n);
  /// S[i][j] = taps[(i - j) mod n].
  static Gso circulant(std::span<const double> taps);
};

/// Shift-invariant matrix-valued kernel kappa[m], m in [0, n), each d x d.
/// Induces (C X)[i] = sum_j X[j] kappa[(i - j) mod n] on X in R^{n x d}.
struct CirculantKernel {
  std::vector<RealTensor> taps;

  std::size_t nodes() const noexcept { return taps.size(); }
  std::size_t channels() const noexcept { return taps.empty() ? 0 : taps.front().rows(); }
  /// kappa[m] = scalar[m] * weight.
  static CirculantKernel from_scalar(std::span<const double> scalar, const RealTensor& weight);
  static CirculantKernel random(std::size_t n, std::size_t d, std::uint64_t seed);
};

/// O(X) = S X W as a plain dense product.
RealTensor gso_convolution(const RealTensor& x, const Gso& s, const RealTensor& w);

/// Kernel-summation form: O(X)[i] = sum_j X[j] kappa[i, j] with kappa[i, j] = S_ij W.
RealTensor kernel_summation(const RealTensor& x, const Gso& s, const RealTensor& w);

/// Explicit circulant kernel summation, O(n^2 d^2).
RealTensor circulant_apply(const RealTensor& x, const CirculantKernel& kernel);

/// FGSO of a kernel: S[p] = sum_m kappa[m] exp(-2 pi i p m / n), returned as (n, d, d).
ComplexTensor fourier_kernel(const CirculantKernel& kernel);

/// Max |time-domain - Fourier-path| for one circulant graph convolution.
double circulant_gso_fourier_check(const RealTensor& x, const CirculantKernel& kernel);

/// H_EV X = sum_k S_k ... S_1 X with S_0 = I.
RealTensor edge_varying_filter(const RealTensor& x, std::span<const Gso> gsos);

/// Edge-varying filter with matrix-valued circulant kernels, time domain.
RealTensor edge_varying_filter(const RealTensor& x, std::span<const CirculantKernel> kernels);

/// Same filter through the FGSO recursion S_{0:k} = S_{0:k-1} S_k in the
/// Fourier domain (fast FFT path), back-transformed.
RealTensor fourier_edge_varying_filter(const RealTensor& x, std::span<const CirculantKernel> kernels);

struct EquivalenceReport {
  std::size_t nodes = 0;
  std::size_t channels = 0;
  std::size_t order = 0;
  std::size_t trials = 0;
  double max_error = 0.0;
  bool passed = false;
};

inline constexpr double kEquivalenceTolerance = 1e-6;

/// Random circulant kernels, both sides of the K-order edge-varying identity.
EquivalenceReport edge_varying_equivalence_suite(std::size_t n, std::size_t d, std::size_t order,
                                          std::size_t trials, std::uint64_t seed);

/// Supra-graph form on the (N, T) torus with complex channel weights: each
/// layer is Y_k = Y_{k-1} M_k placed at lag (0,0) plus bias b_k at node (0,0),
/// i.e. the time-domain image of a frequency-broadcast weight and bias.
/// Evaluated by explicit 2D kernel summation over all node pairs.
ComplexTensor supra_graph_filter(const ComplexTensor& x, std::span<const ComplexTensor> weights,
                                 std::span<const ComplexTensor> biases);

struct BenchRow {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t order = 0;
  std::string path;
  double median_seconds = 0.0;
  double checksum = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  double dense_slope = 0.0;
  double fourier_slope = 0.0;
  double gate_error = 0.0;  ///< max output disagreement before timing
};

/// Dense K-step GSO path vs FGSO Fourier path. Throws Error(InvalidShape)
/// when the correctness gate fails, before any timing.
BenchResult complexity_bench(std::span<const std::size_t> sizes, std::size_t d, std::size_t order,
                             std::size_t repetitions, std::uint64_t seed);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

std::string bench_csv(const BenchResult& result);

}  // namespace evfgn::oracle
