#include "evfgn/data.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "evfgn/error.hpp"
#include "evfgn/format.hpp"
#include "evfgn/random.hpp"

namespace evfgn::data {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_line(std::string_view line, char delim) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
    throw ParseError(row, col, std::string(cell));
  return v;
}


}  // namespace

Series Series::slice(std::size_t begin, std::size_t end) const {
  require(begin <= end && end <= length(), ErrorKind::InvalidShape, "slice out of range");
  Series out;
  out.values = RealTensor::matrix(vars(), end - begin);
  for (std::size_t n = 0; n < vars(); ++n)
    for (std::size_t t = begin; t < end; ++t) out.values(n, t - begin) = values(n, t);
  out.names = names;
  if (!timestamps.empty()) out.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + end);
  return out;
}

Series ingest_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::vector<std::string> header;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line, options.delimiter);
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      fail(ErrorKind::RaggedRows, "row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                      " cells, expected " + std::to_string(width));
    if (options.header && header.empty() && rows.empty() && labels.empty()) {
      for (auto c : cells) header.emplace_back(c);
      if (options.timestamp_column) header.erase(header.begin());
      continue;
    }
    std::size_t first = 0;
    if (options.timestamp_column) {
      labels.emplace_back(cells.front());
      first = 1;
    }
    std::vector<double> row;
    row.reserve(cells.size() - first);
    for (std::size_t c = first; c < cells.size(); ++c) row.push_back(parse_cell(cells[c], line_no, c + 1));
    rows.push_back(std::move(row));
  }
  require(!rows.empty() && !rows.front().empty(), ErrorKind::Parse, "'" + path.string() + "' holds no data rows");

  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = rows.front().size();
  Series s;
  if (!options.transpose) {
    s.values = RealTensor::matrix(n_cols, n_rows);
    for (std::size_t r = 0; r < n_rows; ++r)
      for (std::size_t c = 0; c < n_cols; ++c) s.values(c, r) = rows[r][c];
    s.names = std::move(header);
    s.timestamps = std::move(labels);
  } else {
    s.values = RealTensor::matrix(n_rows, n_cols);
    for (std::size_t r = 0; r < n_rows; ++r)
      for (std::size_t c = 0; c < n_cols; ++c) s.values(r, c) = rows[r][c];
    s.names = std::move(labels);
    s.timestamps = std::move(header);
  }
  return s;
}

void write_csv(const std::filesystem::path& path, const Series& series) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot write '" + path.string() + "'");
  if (!series.names.empty()) {
    for (std::size_t n = 0; n < series.names.size(); ++n) out << (n ? "," : "") << series.names[n];
    out << '\n';
  }
  for (std::size_t t = 0; t < series.length(); ++t) {
    for (std::size_t n = 0; n < series.vars(); ++n) out << (n ? "," : "") << format_double(series.values(n, t));
    out << '\n';
  }
  require(out.good(), ErrorKind::Io, "write failed for '" + path.string() + "'");
}

void write_matrix_csv(const std::filesystem::path& path, const RealTensor& m) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot write '" + path.string() + "'");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
    out << '\n';
  }
  require(out.good(), ErrorKind::Io, "write failed for '" + path.string() + "'");
}

NormStats NormStats::fit(const Series& train) {
  require(train.length() > 0, ErrorKind::InsufficientData, "normalization needs a nonempty training segment");
  NormStats s;
  for (std::size_t n = 0; n < train.vars(); ++n) {
    double lo = train.values(n, 0);
    double hi = lo;
    for (std::size_t t = 1; t < train.length(); ++t) {
      lo = std::min(lo, train.values(n, t));
      hi = std::max(hi, train.values(n, t));
    }
    s.min.push_back(lo);
    s.max.push_back(hi);
    s.degenerate.push_back(hi == lo);
  }
  return s;
}

RealTensor normalize_block(const RealTensor& block, const NormStats& stats) {
  require(block.rows() == stats.min.size(), ErrorKind::InvalidShape, "normalize: variable count differs from stats");
  RealTensor out = block;
  const std::size_t width = block.size() / block.rows();
  for (std::size_t n = 0; n < block.rows(); ++n) {
    const double scale = stats.max[n] - stats.min[n] + kEpsGuard;
    for (std::size_t i = 0; i < width; ++i) {
      double& v = out[n * width + i];
      v = stats.degenerate[n] ? 0.0 : (v - stats.min[n]) / scale;
    }
  }
  return out;
}

RealTensor denormalize_block(const RealTensor& block, const NormStats& stats) {
  require(block.rows() == stats.min.size(), ErrorKind::InvalidShape, "denormalize: variable count differs from stats");
  RealTensor out = block;
  const std::size_t width = block.size() / block.rows();
  for (std::size_t n = 0; n < block.rows(); ++n) {
    const double scale = stats.max[n] - stats.min[n] + kEpsGuard;
    for (std::size_t i = 0; i < width; ++i) {
      double& v = out[n * width + i];
      v = stats.degenerate[n] ? stats.min[n] : v * scale + stats.min[n];
    }
  }
  return out;
}

Series normalize(const Series& series, const NormStats& stats) {
  Series out = series;
  out.values = normalize_block(series.values, stats);
  return out;
}

Series denormalize(const Series& series, const NormStats& stats) {
  Series out = series;
  out.values = denormalize_block(series.values, stats);
  return out;
}

Segments split(const Series& series, const SplitRatios& r, std::size_t steps, std::size_t horizon) {
  require(r.train > 0 && r.val > 0 && r.test > 0 && std::abs(r.train + r.val + r.test - 1.0) <= 1e-9,
          ErrorKind::Config, "split ratios must be positive and sum to 1");
  const std::size_t total = series.length();
  const auto share = [&](double ratio) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(total) * ratio + 1e-9));
  };
  const std::size_t val_len = share(r.val);
  const std::size_t test_len = share(r.test);
  const std::size_t train_len = total - val_len - test_len;
  const std::size_t need = steps + horizon;
  if (train_len < need || val_len < need || test_len < need)
    fail(ErrorKind::InsufficientData, "split " + std::to_string(train_len) + "/" + std::to_string(val_len) + "/" +
                                          std::to_string(test_len) + " leaves a segment shorter than T + tau = " +
                                          std::to_string(need));
  Segments seg;
  seg.val_start = train_len;
  seg.test_start = train_len + val_len;
  seg.train = series.slice(0, seg.val_start);
  seg.val = series.slice(seg.val_start, seg.test_start);
  seg.test = series.slice(seg.test_start, total);
  return seg;
}

const char* to_string(SplitTag tag) noexcept {
  switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::val: return "val";
    case SplitTag::test: return "test";
  }
  return "train";
}

WindowSet make_windows(const Series& segment, std::size_t steps, std::size_t horizon, SplitTag tag,
                       std::size_t offset) {
  require(steps > 0 && horizon > 0, ErrorKind::Config, "window length and horizon must be positive");
  const std::size_t len = segment.length();
  if (len < steps + horizon)
    fail(ErrorKind::InsufficientData, "segment of length " + std::to_string(len) + " cannot hold T + tau = " +
                                          std::to_string(steps + horizon));
  const std::size_t n_vars = segment.vars();
  WindowSet out;
  out.reserve(len - steps - horizon + 1);
  for (std::size_t t = steps; t + horizon <= len; ++t) {
    Window w{RealTensor(n_vars, steps, 1), RealTensor::matrix(n_vars, horizon), offset + t, tag};
    for (std::size_t n = 0; n < n_vars; ++n) {
      for (std::size_t j = 0; j < steps; ++j) w.input(n, j, 0) = segment.values(n, t - steps + j);
      for (std::size_t j = 0; j < horizon; ++j) w.target(n, j) = segment.values(n, t + j);
    }
    out.push_back(std::move(w));
  }
  return out;
}

Dataset prepare(const Series& raw, const SplitRatios& ratios, std::size_t steps, std::size_t horizon) {
  const Segments seg = split(raw, ratios, steps, horizon);
  Dataset ds;
  ds.stats = NormStats::fit(seg.train);
  ds.train = make_windows(normalize(seg.train, ds.stats), steps, horizon, SplitTag::train, 0);
  ds.val = make_windows(normalize(seg.val, ds.stats), steps, horizon, SplitTag::val, seg.val_start);
  ds.test = make_windows(normalize(seg.test, ds.stats), steps, horizon, SplitTag::test, seg.test_start);
  return ds;
}

const char* to_string(SyntheticKind kind) noexcept {
  return kind == SyntheticKind::var1 ? "var1" : "coupled_sinusoids";
}

SyntheticKind parse_synthetic_kind(const std::string& name) {
  if (name == "coupled_sinusoids") return SyntheticKind::coupled_sinusoids;
  if (name == "var1") return SyntheticKind::var1;
  fail(ErrorKind::Config, "unknown synthetic kind '" + name + "'");
}

namespace {

constexpr double kSinusoidNoise = 0.05;
constexpr double kMinPeriod = 8.0;
constexpr double kMaxPeriod = 48.0;
constexpr double kVarRadius = 0.9;
constexpr std::size_t kVarBurnIn = 200;

Synthetic coupled_sinusoids(std::size_t n_vars, std::size_t length, Rng& rng, double coupling) {
  Synthetic s{{}, RealTensor::matrix(n_vars, n_vars)};
  for (std::size_t i = 0; i < n_vars; ++i)
    for (std::size_t j = 0; j < n_vars; ++j) s.coupling(i, j) = i == j ? 1.0 : coupling * rng.uniform(-1.0, 1.0);
  std::vector<double> omega(n_vars), phase(n_vars);
  for (std::size_t j = 0; j < n_vars; ++j) {
    omega[j] = 2.0 * std::numbers::pi / rng.uniform(kMinPeriod, kMaxPeriod);
    phase[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  s.series.values = RealTensor::matrix(n_vars, length);
  std::vector<double> wave(n_vars);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t j = 0; j < n_vars; ++j) wave[j] = std::sin(omega[j] * static_cast<double>(t) + phase[j]);
    for (std::size_t i = 0; i < n_vars; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < n_vars; ++j) v += s.coupling(i, j) * wave[j];
      s.series.values(i, t) = v + kSinusoidNoise * rng.normal();
    }
  }
  return s;
}

Synthetic var1(std::size_t n_vars, std::size_t length, Rng& rng, double coupling) {
  Eigen::MatrixXd a(n_vars, n_vars);
  for (std::size_t i = 0; i < n_vars; ++i)
    for (std::size_t j = 0; j < n_vars; ++j)
      a(i, j) = i == j ? rng.uniform(0.3, 0.9) : coupling * rng.uniform(-1.0, 1.0);
  const double radius = Eigen::EigenSolver<Eigen::MatrixXd>(a, false).eigenvalues().cwiseAbs().maxCoeff();
  if (radius > 0.0) a *= kVarRadius / radius;

  Synthetic s{{}, RealTensor::matrix(n_vars, n_vars)};
  for (std::size_t i = 0; i < n_vars; ++i)
    for (std::size_t j = 0; j < n_vars; ++j) s.coupling(i, j) = a(i, j);
  s.series.values = RealTensor::matrix(n_vars, length);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_vars));
  Eigen::VectorXd e(static_cast<Eigen::Index>(n_vars));
  for (std::size_t t = 0; t < kVarBurnIn + length; ++t) {
    for (std::size_t i = 0; i < n_vars; ++i) e(static_cast<Eigen::Index>(i)) = rng.normal();
    x = a * x + e;
    if (t >= kVarBurnIn)
      for (std::size_t i = 0; i < n_vars; ++i) s.series.values(i, t - kVarBurnIn) = x(static_cast<Eigen::Index>(i));
  }
  return s;
}

}  // namespace

Synthetic gen_synthetic(SyntheticKind kind, std::size_t vars, std::size_t length, std::uint64_t seed,
                        double coupling) {
  require(vars >= 2 && length >= 64, ErrorKind::Config, "synthetic data needs N >= 2 and L >= 64");
  Rng rng(derive_seed(seed, SeedStream::synthetic));
  Synthetic s = kind == SyntheticKind::var1 ? var1(vars, length, rng, coupling)
                                            : coupled_sinusoids(vars, length, rng, coupling);
  for (std::size_t i = 0; i < vars; ++i) s.series.names.push_back("x" + std::to_string(i));
  return s;
}

}  // namespace evfgn::data
