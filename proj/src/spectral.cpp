#include "evfgn/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "dense.hpp"

namespace evfgn::spectral {

namespace {

cdouble root(std::size_t k, std::size_t n) {
  const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
  return {std::cos(angle), std::sin(angle)};
}

constexpr std::size_t kMatmulBlock = 64;

void check_extents(const Dims& d, const char* what) {
  if (!(d.vars > 0 && d.steps > 0 && d.channels > 0)) fail(ErrorKind::InvalidShape,
          std::string(what) + ": zero extent in " + d.str());
}

}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n), radix2_(n > 0 && std::has_single_bit(n)) {
  require(n > 0, ErrorKind::InvalidShape, "FftPlan: zero length");
  if (radix2_) {
    roots_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) roots_[k] = root(k, n);
    bitrev_.resize(n);
    const int bits = std::countr_zero(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
      bitrev_[i] = r;
    }
  } else {
    roots_.resize(n);
    for (std::size_t k = 0; k < n; ++k) roots_[k] = root(k, n);
  }
}

void FftPlan::transform(std::span<cdouble> x, bool inverse) const {
  std::vector<cdouble> scratch;
  transform(x, inverse, scratch);
}

void FftPlan::transform(std::span<cdouble> x, bool inverse, std::vector<cdouble>& scratch) const {
  require(x.size() == n_, ErrorKind::InvalidShape, "FftPlan: length mismatch");
  transform_lanes(x.data(), 1, 1, inverse, scratch);
}

void FftPlan::transform_lanes(cdouble* x, std::size_t spacing, std::size_t width, bool inverse,
                              std::vector<cdouble>& scratch) const {
  if (n_ == 1) return;
  if (radix2_) {
    radix2(x, spacing, width, inverse);
  } else {
    direct(x, spacing, width, inverse, scratch);
  }
}

void FftPlan::radix2(cdouble* x, std::size_t spacing, std::size_t width, bool inverse) const {
  for (std::size_t i = 0; i < n_; ++i) {
    if (i < bitrev_[i]) std::swap_ranges(x + i * spacing, x + i * spacing + width, x + bitrev_[i] * spacing);
  }
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const cdouble w = inverse ? std::conj(roots_[j * stride]) : roots_[j * stride];
        cdouble* a = x + (start + j) * spacing;
        cdouble* b = x + (start + j + half) * spacing;
        for (std::size_t c = 0; c < width; ++c) {
          const cdouble u = a[c];
          const cdouble v = b[c] * w;
          a[c] = u + v;
          b[c] = u - v;
        }
      }
    }
  }
}

void FftPlan::direct(cdouble* x, std::size_t spacing, std::size_t width, bool inverse,
                     std::vector<cdouble>& scratch) const {
  scratch.resize(n_ * width);
  for (std::size_t j = 0; j < n_; ++j) std::copy_n(x + j * spacing, width, scratch.data() + j * width);
  for (std::size_t k = 0; k < n_; ++k) {
    cdouble* dst = x + k * spacing;
    std::fill_n(dst, width, cdouble{});
    std::size_t idx = 0;  // (j * k) mod n
    for (std::size_t j = 0; j < n_; ++j) {
      const cdouble w = inverse ? std::conj(roots_[idx]) : roots_[idx];
      const cdouble* src = scratch.data() + j * width;
      for (std::size_t c = 0; c < width; ++c) dst[c] += src[c] * w;
      idx += k;
      if (idx >= n_) idx -= n_;
    }
  }
}

namespace {

// Transforms x in place along the steps axis, then the vars axis. Each lane
// is one channel, so channels never mix.
void transform_planes(ComplexTensor& x, bool inverse, Exec exec) {
  const Dims d = x.dims();
  const FftPlan along_vars(d.vars);
  const FftPlan along_steps(d.steps);
  const std::size_t row = d.steps * d.channels;

#pragma omp parallel if (fork_threads(exec, d.vars * d.steps * d.channels / 64))
  {
    std::vector<cdouble> scratch;
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(d.vars); ++n)
      along_steps.transform_lanes(x.data() + static_cast<std::size_t>(n) * row, d.channels, d.channels, inverse,
                                  scratch);
#pragma omp for schedule(static)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(d.steps); ++t)
      along_vars.transform_lanes(x.data() + static_cast<std::size_t>(t) * d.channels, row, d.channels, inverse,
                                 scratch);
  }
}

}  // namespace

ComplexTensor dft2(const ComplexTensor& x, Exec exec) {
  check_extents(x.dims(), "dft2");
  ComplexTensor out = x;
  transform_planes(out, false, exec);
  return out;
}

ComplexTensor dft2(const RealTensor& x, Exec exec) {
  check_extents(x.dims(), "dft2");
  ComplexTensor out = to_complex(x);
  transform_planes(out, false, exec);
  return out;
}

ComplexTensor idft2(const ComplexTensor& s, Exec exec) {
  check_extents(s.dims(), "idft2");
  ComplexTensor out = s;
  transform_planes(out, true, exec);
  const double scale = 1.0 / static_cast<double>(s.dims().vars * s.dims().steps);
  for (cdouble& v : out.values()) v *= scale;
  return out;
}

RealPart real_part(const ComplexTensor& s) {
  RealPart out{RealTensor(s.dims()), 0.0};
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.values[i] = s[i].real();
    out.residual_imag = std::max(out.residual_imag, std::abs(s[i].imag()));
  }
  return out;
}

ComplexTensor channel_matmul(const ComplexTensor& s, const ComplexTensor& m, Exec exec) {
  const Dims d = s.dims();
  if (!(m.dims().channels == 1 && m.rows() == d.channels)) fail(ErrorKind::InvalidShape,
          "channel_matmul: input has " + std::to_string(d.channels) + " channels but matrix is " +
              m.dims().str());
  const std::size_t in = m.rows();
  const std::size_t out_ch = m.cols();
  ComplexTensor out(d.vars, d.steps, out_ch);
  const std::size_t bins = d.vars * d.steps;
  // Fixed-size blocks of bins so the serial and parallel paths run identical
  // products and agree bitwise.
  const auto blocks = static_cast<std::ptrdiff_t>((bins + kMatmulBlock - 1) / kMatmulBlock);
  const auto mm = as_matrix(m);

#pragma omp parallel for schedule(static) if (fork_threads(exec, bins))
  for (std::ptrdiff_t bi = 0; bi < blocks; ++bi) {
    const std::size_t first = static_cast<std::size_t>(bi) * kMatmulBlock;
    const std::size_t count = std::min(kMatmulBlock, bins - first);
    rows_of(out, out_ch, first, count).noalias() = rows_of(s, in, first, count) * mm;
  }
  return out;
}

}  // namespace evfgn::spectral
