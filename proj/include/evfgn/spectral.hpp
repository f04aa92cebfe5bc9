#pragma once

#include <span>
#include <vector>

#include "evfgn/parallel.hpp"
#include "evfgn/tensor.hpp"

namespace evfgn::spectral {

/// Precomputed 1D transform of a fixed length. Power-of-two lengths use an
/// iterative radix-2 decimation-in-time FFT; other lengths fall back to a
/// direct O(n^2) DFT over a root-of-unity table.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  bool is_radix2() const noexcept { return radix2_; }

  /// Unnormalized transform in place. `inverse` flips the exponent sign only;
  /// the caller owns the 1/n factor.
  void transform(std::span<cdouble> x, bool inverse, std::vector<cdouble>& scratch) const;
  void transform(std::span<cdouble> x, bool inverse) const;

  /// Batched form: element i is the `width` contiguous values starting at
  /// x + i * spacing, and every lane is transformed independently.
  void transform_lanes(cdouble* x, std::size_t spacing, std::size_t width, bool inverse,
                       std::vector<cdouble>& scratch) const;

 private:
  void radix2(cdouble* x, std::size_t spacing, std::size_t width, bool inverse) const;
  void direct(cdouble* x, std::size_t spacing, std::size_t width, bool inverse, std::vector<cdouble>& scratch) const;

  std::size_t n_;
  bool radix2_;
  std::vector<cdouble> roots_;  // exp(-2*pi*i*k/n), k < n (direct) or k < n/2 (radix-2)
  std::vector<std::size_t> bitrev_;
};

/// Forward 2D DFT over the (vars, steps) plane, independently per channel:
/// out[p,q,c] = sum_{n,t} x[n,t,c] exp(-2 pi i (p n / N + q t / T)).
ComplexTensor dft2(const ComplexTensor& x, Exec exec = Exec::parallel);
ComplexTensor dft2(const RealTensor& x, Exec exec = Exec::parallel);

/// Inverse of dft2, carrying the 1/(N T) factor.
ComplexTensor idft2(const ComplexTensor& s, Exec exec = Exec::parallel);

struct RealPart {
  RealTensor values;
  double residual_imag = 0.0;  ///< max |imag| discarded
};

RealPart real_part(const ComplexTensor& s);

/// out[p,q,:] = s[p,q,:] * m for every (p,q) bin; `m` is a (d x d') matrix.
ComplexTensor channel_matmul(const ComplexTensor& s, const ComplexTensor& m, Exec exec = Exec::parallel);

}  // namespace evfgn::spectral
