#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evfgn/tensor.hpp"

namespace evfgn::data {

/// Multivariate series: `values` is N x L (variables x timestamps).
struct Series {
  RealTensor values = RealTensor::matrix(0, 0);
  std::vector<std::string> names;
  std::vector<std::string> timestamps;  ///< empty when the source had none

  std::size_t vars() const noexcept { return values.rows(); }
  std::size_t length() const noexcept { return values.cols(); }
  /// Timestamps [begin, end) of every variable.
  Series slice(std::size_t begin, std::size_t end) const;
};

struct CsvOptions {
  bool header = false;            ///< first row holds variable names
  bool transpose = false;         ///< rows are variables instead of timestamps
  bool timestamp_column = false;  ///< first column is a label, not a variable
  char delimiter = ',';
};

/// Rejects NaN/inf and unparseable cells with ParseError (1-based row/col)
/// and ragged rows with Error(RaggedRows).
Series ingest_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Rows = timestamps; writes a header when the series has names.
void write_csv(const std::filesystem::path& path, const Series& series);
void write_matrix_csv(const std::filesystem::path& path, const RealTensor& m);

inline constexpr double kEpsGuard = 1e-12;

/// Per-variable min/max of the segment it is fitted on.
struct NormStats {
  std::vector<double> min;
  std::vector<double> max;
  std::vector<bool> degenerate;  ///< max == min

  static NormStats fit(const Series& train);
  bool operator==(const NormStats&) const = default;
};

/// v' = (v - min) / (max - min + eps); degenerate variables map to 0.
Series normalize(const Series& series, const NormStats& stats);
Series denormalize(const Series& series, const NormStats& stats);
/// Same maps for an N x k block of one window (rows are variables).
RealTensor normalize_block(const RealTensor& block, const NormStats& stats);
RealTensor denormalize_block(const RealTensor& block, const NormStats& stats);

struct SplitRatios {
  double train = 0.7;
  double val = 0.2;
  double test = 0.1;
};

struct Segments {
  Series train, val, test;
  std::size_t val_start = 0;
  std::size_t test_start = 0;
};

/// Chronological floor allocation with the remainder going to train.
/// Throws InsufficientData if a segment is shorter than steps + horizon.
Segments split(const Series& series, const SplitRatios& ratios, std::size_t steps, std::size_t horizon);

enum class SplitTag { train, val, test };
const char* to_string(SplitTag tag) noexcept;

struct Window {
  RealTensor input;   ///< N x T x 1
  RealTensor target;  ///< N x tau
  std::size_t origin = 0;  ///< index of the first target step in the full series
  SplitTag split = SplitTag::train;
};

using WindowSet = std::vector<Window>;

/// One window per origin t in [T, L - tau] of `segment`; `offset` maps
/// segment indices to full-series origins.
WindowSet make_windows(const Series& segment, std::size_t steps, std::size_t horizon, SplitTag tag = SplitTag::train,
                       std::size_t offset = 0);

/// Split, train-only statistics, normalization, windows per split.
struct Dataset {
  NormStats stats;
  WindowSet train, val, test;
};

Dataset prepare(const Series& raw, const SplitRatios& ratios, std::size_t steps, std::size_t horizon);

enum class SyntheticKind { coupled_sinusoids, var1 };
const char* to_string(SyntheticKind kind) noexcept;
SyntheticKind parse_synthetic_kind(const std::string& name);

struct Synthetic {
  Series series;
  RealTensor coupling;  ///< N x N generator coupling
};

/// coupled_sinusoids: x_i(t) = sum_j C_ij sin(w_j t + p_j) + noise, C_ii = 1,
/// C_ij = coupling * U[-1, 1]. var1: x_t = A x_{t-1} + e_t with A rescaled to
/// spectral radius 0.9.
Synthetic gen_synthetic(SyntheticKind kind, std::size_t vars, std::size_t length, std::uint64_t seed,
                        double coupling = 0.3);

}  // namespace evfgn::data
