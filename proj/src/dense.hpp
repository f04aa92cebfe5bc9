#pragma once

// Eigen views over row-major rank-2 tensors, for the dense head. Internal to
// the library: Eigen is a private dependency.

#define EIGEN_DONT_PARALLELIZE  // products must not fork; callers own threading
#include <Eigen/Core>

#include "evfgn/tensor.hpp"

namespace evfgn {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<RowMajor> as_matrix(RealTensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.size() / t.rows())};
}

inline Eigen::Map<const RowMajor> as_matrix(const RealTensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.size() / t.rows())};
}

using ComplexRowMajor = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Rows [first, first + count) of a tensor viewed as (size / width) x width.
inline Eigen::Map<ComplexRowMajor> rows_of(ComplexTensor& t, std::size_t width, std::size_t first, std::size_t count) {
  return {t.data() + first * width, static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(width)};
}

inline Eigen::Map<const ComplexRowMajor> rows_of(const ComplexTensor& t, std::size_t width, std::size_t first,
                                                 std::size_t count) {
  return {t.data() + first * width, static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(width)};
}

inline Eigen::Map<ComplexRowMajor> as_matrix(ComplexTensor& t) { return rows_of(t, t.size() / t.rows(), 0, t.rows()); }

inline Eigen::Map<const ComplexRowMajor> as_matrix(const ComplexTensor& t) {
  return rows_of(t, t.size() / t.rows(), 0, t.rows());
}

}  // namespace evfgn
