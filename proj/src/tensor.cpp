#include "evfgn/tensor.hpp"

namespace evfgn {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidShape: return "InvalidShape";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::MissingGradPath: return "MissingGradPath";
    case ErrorKind::Divergence: return "DivergenceError";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::RaggedRows: return "ShapeError";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorKind::ZeroRepresentation: return "ZeroRepresentation";
    case ErrorKind::IncompatibleCheckpoint: return "IncompatibleCheckpoint";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

std::string Dims::str() const {
  return "(" + std::to_string(vars) + "x" + std::to_string(steps) + "x" + std::to_string(channels) + ")";
}

ComplexTensor to_complex(const RealTensor& x) {
  ComplexTensor out(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = cdouble(x[i], 0.0);
  return out;
}

template <typename T>
static double max_abs_diff_impl(const Tensor<T>& a, const Tensor<T>& b) {
  require_dims(b.dims(), a.dims(), "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

double max_abs_diff(const RealTensor& a, const RealTensor& b) { return max_abs_diff_impl(a, b); }
double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b) { return max_abs_diff_impl(a, b); }

}  // namespace evfgn
