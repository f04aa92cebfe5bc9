#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "evfgn/data.hpp"
#include "evfgn/model.hpp"

namespace evfgn::eval {

enum class Scale { normalized, original };
const char* to_string(Scale s) noexcept;

struct MetricReport {
  double mae = 0.0;
  double rmse = 0.0;
  double mape_percent = 0.0;
  std::vector<double> mae_per_step;  ///< one entry per horizon step
  std::vector<double> rmse_per_step;
  std::vector<double> mape_per_step;
  std::size_t windows = 0;
  std::size_t cells = 0;
  std::size_t zero_truth_excluded = 0;  ///< cells left out of MAPE
  std::size_t horizon = 0;
  Scale scale = Scale::normalized;

  /// `metric,value` rows followed by per-step rows.
  std::string csv() const;
  std::string text() const;
};

/// MAE = mean |d|, RMSE = sqrt(mean d^2), MAPE = 100 mean |d / x| over
/// nonzero truth cells. Sums run in window order. Throws EmptyEvaluation.
MetricReport metrics(std::span<const RealTensor> preds, std::span<const RealTensor> truths);

/// Metrics of `m` on `windows`; Scale::original denormalizes both sides first.
MetricReport evaluate(const model::Model& m, const data::WindowSet& windows, Scale scale = Scale::normalized,
                      const data::NormStats* stats = nullptr, Exec exec = Exec::parallel);

/// Forecasts every horizon step as the last observed input value.
RealTensor repeat_last_value(const RealTensor& input, std::size_t horizon);
MetricReport baseline_repeat_last(const data::WindowSet& windows);

/// Same parameters under a structural variant. Variants ignore the
/// parameters they do not use (embeddings, or layers after the first).
model::Model apply_ablation(model::Variant variant, model::Model base);

enum class AdjacencyMode { full, spatial_avg, temporal_per_variable };
const char* to_string(AdjacencyMode m) noexcept;
AdjacencyMode parse_adjacency_mode(const std::string& name);

struct Adjacency {
  AdjacencyMode mode = AdjacencyMode::full;
  std::vector<std::size_t> indices;  ///< selected variables (all when exporting full)
  std::vector<RealTensor> matrices;  ///< one for full/spatial_avg, one per variable otherwise
  double normalization_max = 0.0;    ///< max |A| before scaling
};

/// A = R_flat R_flat^T over the (N T) x d flattening, divided by max |A|.
RealTensor gram_normalized(const RealTensor& rep, double* max_abs = nullptr);

/// full: the NT x NT matrix (indices ignored). spatial_avg: N x N averaged over
/// both time axes. temporal_per_variable: a T x T block per variable.
/// Empty `indices` selects every variable. Throws ZeroRepresentation.
Adjacency export_adjacency(const RealTensor& rep, AdjacencyMode mode, std::span<const std::size_t> indices = {});

/// Writes `<stem>.csv` (or `<stem>_var<i>.csv` per variable) and `<stem>.manifest`.
std::vector<std::filesystem::path> write_adjacency(const std::filesystem::path& stem, const Adjacency& adj);

}  // namespace evfgn::eval
