#include "evfgn/eval.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "evfgn/error.hpp"
#include "evfgn/format.hpp"
#include "evfgn/training.hpp"

namespace evfgn::eval {

const char* to_string(Scale s) noexcept { return s == Scale::original ? "original" : "normalized"; }

std::string MetricReport::csv() const {
  std::ostringstream out;
  out << "metric,step,value\n";
  out << "mae,all," << format_double(mae) << '\n';
  out << "rmse,all," << format_double(rmse) << '\n';
  out << "mape_percent,all," << format_double(mape_percent) << '\n';
  for (std::size_t j = 0; j < mae_per_step.size(); ++j) {
    out << "mae," << j + 1 << ',' << format_double(mae_per_step[j]) << '\n';
    out << "rmse," << j + 1 << ',' << format_double(rmse_per_step[j]) << '\n';
    out << "mape_percent," << j + 1 << ',' << format_double(mape_per_step[j]) << '\n';
  }
  out << "windows,all," << windows << '\n';
  out << "zero_truth_excluded,all," << zero_truth_excluded << '\n';
  out << "scale,all," << to_string(scale) << '\n';
  return out.str();
}

std::string MetricReport::text() const {
  std::ostringstream out;
  out << "horizon " << horizon << ", " << windows << " windows, " << to_string(scale) << " scale\n";
  out << "  MAE  " << format_double(mae) << "\n  RMSE " << format_double(rmse) << "\n  MAPE "
      << format_double(mape_percent) << "%";
  if (zero_truth_excluded > 0) out << " (" << zero_truth_excluded << " zero-truth cells excluded)";
  out << '\n';
  for (std::size_t j = 0; j < mae_per_step.size(); ++j)
    out << "  step " << j + 1 << ": MAE " << format_double(mae_per_step[j]) << ", RMSE "
        << format_double(rmse_per_step[j]) << '\n';
  return out.str();
}

MetricReport metrics(std::span<const RealTensor> preds, std::span<const RealTensor> truths) {
  require(preds.size() == truths.size(), ErrorKind::InvalidShape, "metrics: prediction and truth counts differ");
  require(!preds.empty() && preds.front().size() > 0, ErrorKind::EmptyEvaluation, "metrics: no windows to evaluate");
  const std::size_t n_vars = preds.front().rows();
  const std::size_t horizon = preds.front().cols();
  std::vector<double> abs_sum(horizon, 0.0), sq_sum(horizon, 0.0), pct_sum(horizon, 0.0);
  std::vector<std::size_t> pct_count(horizon, 0);
  MetricReport r;
  for (std::size_t w = 0; w < preds.size(); ++w) {
    require_dims(preds[w].dims(), Dims{n_vars, horizon, 1}, "metrics prediction");
    require_dims(truths[w].dims(), Dims{n_vars, horizon, 1}, "metrics truth");
    for (std::size_t n = 0; n < n_vars; ++n)
      for (std::size_t j = 0; j < horizon; ++j) {
        const double truth = truths[w](n, j);
        const double delta = preds[w](n, j) - truth;
        abs_sum[j] += std::abs(delta);
        sq_sum[j] += delta * delta;
        if (truth != 0.0) {
          pct_sum[j] += std::abs(delta / truth);
          ++pct_count[j];
        } else {
          ++r.zero_truth_excluded;
        }
      }
  }
  const double per_step = static_cast<double>(preds.size() * n_vars);
  double abs_all = 0.0, sq_all = 0.0, pct_all = 0.0;
  std::size_t pct_all_count = 0;
  for (std::size_t j = 0; j < horizon; ++j) {
    abs_all += abs_sum[j];
    sq_all += sq_sum[j];
    pct_all += pct_sum[j];
    pct_all_count += pct_count[j];
    r.mae_per_step.push_back(abs_sum[j] / per_step);
    r.rmse_per_step.push_back(std::sqrt(sq_sum[j] / per_step));
    r.mape_per_step.push_back(pct_count[j] ? 100.0 * pct_sum[j] / static_cast<double>(pct_count[j]) : 0.0);
  }
  r.windows = preds.size();
  r.cells = preds.size() * n_vars * horizon;
  r.horizon = horizon;
  const double cells = static_cast<double>(r.cells);
  r.mae = abs_all / cells;
  r.rmse = std::sqrt(sq_all / cells);
  r.mape_percent = pct_all_count ? 100.0 * pct_all / static_cast<double>(pct_all_count) : 0.0;
  return r;
}

MetricReport evaluate(const model::Model& m, const data::WindowSet& windows, Scale scale,
                      const data::NormStats* stats, Exec exec) {
  require(!windows.empty(), ErrorKind::EmptyEvaluation, "evaluate: no windows");
  std::vector<RealTensor> preds = training::predict_all(m, windows, exec);
  std::vector<RealTensor> truths;
  truths.reserve(windows.size());
  for (const auto& w : windows) truths.push_back(w.target);
  if (scale == Scale::original) {
    require(stats != nullptr, ErrorKind::Config, "original-scale metrics need normalization statistics");
    for (auto& p : preds) p = data::denormalize_block(p, *stats);
    for (auto& t : truths) t = data::denormalize_block(t, *stats);
  }
  MetricReport r = metrics(preds, truths);
  r.scale = scale;
  return r;
}

RealTensor repeat_last_value(const RealTensor& input, std::size_t horizon) {
  const std::size_t n_vars = input.dims().vars;
  const std::size_t steps = input.dims().steps;
  require(steps > 0 && input.dims().channels == 1, ErrorKind::InvalidShape, "repeat_last_value: bad input window");
  RealTensor out = RealTensor::matrix(n_vars, horizon);
  for (std::size_t n = 0; n < n_vars; ++n)
    for (std::size_t j = 0; j < horizon; ++j) out(n, j) = input(n, steps - 1, 0);
  return out;
}

MetricReport baseline_repeat_last(const data::WindowSet& windows) {
  require(!windows.empty(), ErrorKind::EmptyEvaluation, "baseline: no windows");
  std::vector<RealTensor> preds, truths;
  for (const auto& w : windows) {
    preds.push_back(repeat_last_value(w.input, w.target.cols()));
    truths.push_back(w.target);
  }
  return metrics(preds, truths);
}

model::Model apply_ablation(model::Variant variant, model::Model base) {
  base.variant = variant;
  return base;
}

const char* to_string(AdjacencyMode m) noexcept {
  switch (m) {
    case AdjacencyMode::full: return "full";
    case AdjacencyMode::spatial_avg: return "spatial_avg";
    case AdjacencyMode::temporal_per_variable: return "temporal_per_variable";
  }
  return "full";
}

AdjacencyMode parse_adjacency_mode(const std::string& name) {
  for (AdjacencyMode m : {AdjacencyMode::full, AdjacencyMode::spatial_avg, AdjacencyMode::temporal_per_variable})
    if (name == to_string(m)) return m;
  fail(ErrorKind::Config, "unknown adjacency mode '" + name + "'");
}

RealTensor gram_normalized(const RealTensor& rep, double* max_abs) {
  require(rep.all_finite(), ErrorKind::NonFinite, "adjacency: representation is not finite");
  const std::size_t rows = rep.dims().vars * rep.dims().steps;
  const std::size_t d = rep.dims().channels;
  RealTensor a = RealTensor::matrix(rows, rows);
  double peak = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += rep[i * d + c] * rep[j * d + c];
      a(i, j) = acc;
      a(j, i) = acc;
      peak = std::max(peak, std::abs(acc));
    }
  require(peak > 0.0, ErrorKind::ZeroRepresentation, "adjacency: representation is identically zero");
  for (double& v : a.values()) v /= peak;
  if (max_abs) *max_abs = peak;
  return a;
}

Adjacency export_adjacency(const RealTensor& rep, AdjacencyMode mode, std::span<const std::size_t> indices) {
  const std::size_t n_vars = rep.dims().vars;
  const std::size_t steps = rep.dims().steps;
  Adjacency adj;
  adj.mode = mode;
  const RealTensor a = gram_normalized(rep, &adj.normalization_max);
  if (indices.empty() || mode == AdjacencyMode::full) {
    for (std::size_t n = 0; n < n_vars; ++n) adj.indices.push_back(n);
  } else {
    for (std::size_t n : indices) {
      require(n < n_vars, ErrorKind::Config, "adjacency: variable index " + std::to_string(n) + " out of range");
      adj.indices.push_back(n);
    }
  }
  const std::size_t k = adj.indices.size();
  switch (mode) {
    case AdjacencyMode::full:
      adj.matrices.push_back(a);
      break;
    case AdjacencyMode::spatial_avg: {
      RealTensor s = RealTensor::matrix(k, k);
      const double inv = 1.0 / static_cast<double>(steps * steps);
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
          double acc = 0.0;
          for (std::size_t t = 0; t < steps; ++t)
            for (std::size_t u = 0; u < steps; ++u) acc += a(adj.indices[i] * steps + t, adj.indices[j] * steps + u);
          s(i, j) = acc * inv;
        }
      adj.matrices.push_back(std::move(s));
      break;
    }
    case AdjacencyMode::temporal_per_variable:
      for (std::size_t n : adj.indices) {
        RealTensor t = RealTensor::matrix(steps, steps);
        for (std::size_t i = 0; i < steps; ++i)
          for (std::size_t j = 0; j < steps; ++j) t(i, j) = a(n * steps + i, n * steps + j);
        adj.matrices.push_back(std::move(t));
      }
      break;
  }
  return adj;
}

std::vector<std::filesystem::path> write_adjacency(const std::filesystem::path& stem, const Adjacency& adj) {
  std::vector<std::filesystem::path> written;
  const auto with_suffix = [&](const std::string& suffix) {
    std::filesystem::path p = stem;
    p += suffix;
    return p;
  };
  if (adj.mode == AdjacencyMode::temporal_per_variable) {
    for (std::size_t i = 0; i < adj.indices.size(); ++i) {
      written.push_back(with_suffix("_var" + std::to_string(adj.indices[i]) + ".csv"));
      data::write_matrix_csv(written.back(), adj.matrices[i]);
    }
  } else {
    written.push_back(with_suffix(".csv"));
    data::write_matrix_csv(written.back(), adj.matrices.front());
  }
  const std::filesystem::path manifest = with_suffix(".manifest");
  std::ofstream out(manifest, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot write '" + manifest.string() + "'");
  out << "mode = " << to_string(adj.mode) << '\n';
  out << "indices = ";
  for (std::size_t i = 0; i < adj.indices.size(); ++i) out << (i ? "," : "") << adj.indices[i];
  out << '\n';
  out << "normalization_max = " << format_double(adj.normalization_max) << '\n';
  out << "rows = " << adj.matrices.front().rows() << '\n';
  written.push_back(manifest);
  return written;
}

}  // namespace evfgn::eval
