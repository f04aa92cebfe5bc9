#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "evfgn/error.hpp"

namespace evfgn {

using cdouble = std::complex<double>;

/// Extents of a rank-3 row-major array. Matrices use `channels == 1`,
/// vectors use `steps == channels == 1`.
struct Dims {
  std::size_t vars = 0;
  std::size_t steps = 0;
  std::size_t channels = 0;

  std::size_t count() const noexcept { return vars * steps * channels; }
  bool operator==(const Dims&) const = default;
  std::string str() const;
};

namespace detail {
inline bool finite(double v) noexcept { return std::isfinite(v); }
inline bool finite(cdouble v) noexcept { return std::isfinite(v.real()) && std::isfinite(v.imag()); }
}  // namespace detail

/// Dense rank-3 array, row-major with the channel axis innermost so that the
/// channel vector of every (var, step) cell is contiguous.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Dims dims) : dims_(dims), data_(dims.count(), T{}) {}
  Tensor(std::size_t vars, std::size_t steps, std::size_t channels)
      : Tensor(Dims{vars, steps, channels}) {}

  Tensor(Dims dims, std::vector<T> data) : dims_(dims), data_(std::move(data)) {
    if (data_.size() != dims_.count()) fail(ErrorKind::InvalidShape,
            "data length " + std::to_string(data_.size()) + " does not match dims " + dims_.str());
    for (const T& v : data_) require(detail::finite(v), ErrorKind::NonFinite, "tensor entry is not finite");
  }

  static Tensor matrix(std::size_t rows, std::size_t cols) { return Tensor(rows, cols, 1); }
  static Tensor vector(std::size_t len) { return Tensor(len, 1, 1); }

  const Dims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rows() const noexcept { return dims_.vars; }
  std::size_t cols() const noexcept { return dims_.steps; }

  T& operator()(std::size_t n, std::size_t t, std::size_t c) noexcept {
    return data_[(n * dims_.steps + t) * dims_.channels + c];
  }
  const T& operator()(std::size_t n, std::size_t t, std::size_t c) const noexcept {
    return data_[(n * dims_.steps + t) * dims_.channels + c];
  }
  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * dims_.steps + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * dims_.steps + c]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  /// Same storage, new extents; the element count must be unchanged.
  Tensor reshaped(Dims dims) const {
    if (dims.count() != dims_.count()) fail(ErrorKind::InvalidShape,
            "cannot reshape " + dims_.str() + " to " + dims.str());
    Tensor out;
    out.dims_ = dims;
    out.data_ = data_;
    return out;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const T& v) { return detail::finite(v); });
  }

  bool operator==(const Tensor&) const = default;

 private:
  Dims dims_{};
  std::vector<T> data_;
};

using RealTensor = Tensor<double>;
using ComplexTensor = Tensor<cdouble>;

ComplexTensor to_complex(const RealTensor& x);

/// Largest componentwise |a - b|; shapes must agree.
double max_abs_diff(const RealTensor& a, const RealTensor& b);
double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b);

inline void require_dims(const Dims& got, const Dims& want, const std::string& what) {
  if (got != want) fail(ErrorKind::InvalidShape, what + ": expected " + want.str() + ", got " + got.str());
}

}  // namespace evfgn
