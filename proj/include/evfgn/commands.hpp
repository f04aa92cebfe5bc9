#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evfgn/eval.hpp"
#include "evfgn/oracle.hpp"
#include "evfgn/run_config.hpp"
#include "evfgn/training.hpp"
#include "evfgn/verify.hpp"

namespace evfgn::cli {

namespace fs = std::filesystem;

/// Process exit codes.
enum Exit : int { kOk = 0, kUserError = 1, kInternalError = 2 };

/// 1 for configuration, data and I/O problems; 2 for broken invariants.
int exit_code_for(const std::exception& e) noexcept;

// Fixed run-directory layout.
inline constexpr const char* kResolvedConfig = "config.resolved";
inline constexpr const char* kCheckpoint = "checkpoint.bin";
inline constexpr const char* kHistory = "history.csv";
inline constexpr const char* kMetrics = "metrics.csv";
inline constexpr const char* kLog = "log.txt";

struct TrainOutcome {
  fs::path dir;
  training::TrainResult result;
  eval::MetricReport test;
};

/// Trains one model per horizon (the sweep list, or `horizon` alone). A sweep
/// puts each run under `run_dir/h<tau>/`.
std::vector<TrainOutcome> cmd_train(const RunConfig& cfg, const fs::path& run_dir, std::ostream& out);

/// Test-split metrics of the stored checkpoint(s); rewrites metrics.csv.
/// `overrides` are `key=value` strings applied over config.resolved.
std::vector<eval::MetricReport> cmd_evaluate(const fs::path& run_dir, const std::vector<std::string>& overrides,
                                             std::ostream& out);

/// Forecast from the last T steps of `input` (or the run's data), on the
/// original scale, rows = horizon steps and columns = variables.
RealTensor cmd_predict(const fs::path& run_dir, const std::optional<fs::path>& input, const fs::path& output,
                       std::ostream& out);

verify::Report cmd_verify(std::uint64_t seed, ad::Fault fault, std::ostream& out);

struct BenchOptions {
  std::vector<std::size_t> sizes{256, 512, 1024, 2048, 4096};
  std::size_t d = 8;
  std::size_t order = 3;
  std::size_t repetitions = 5;
  std::uint64_t seed = 42;
};

/// Writes the benchmark CSV and prints one slope line per path.
oracle::BenchResult cmd_bench(const BenchOptions& opts, const fs::path& output, std::ostream& out);

struct AdjacencyOptions {
  eval::AdjacencyMode mode = eval::AdjacencyMode::spatial_avg;
  std::vector<std::size_t> indices;
  std::size_t window = 0;  ///< test-split window whose representation is exported
};

std::vector<fs::path> cmd_export_adjacency(const fs::path& run_dir, const AdjacencyOptions& opts,
                                           const fs::path& output_stem, std::ostream& out);

/// Writes `output` and `<stem>.coupling.csv` next to it.
std::vector<fs::path> cmd_synth(data::SyntheticKind kind, std::size_t vars, std::size_t length, std::uint64_t seed,
                                double coupling, const fs::path& output, std::ostream& out);

/// config.resolved of `run_dir` with `overrides` applied.
RunConfig load_run_config(const fs::path& run_dir, const std::vector<std::string>& overrides = {});
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides);

}  // namespace evfgn::cli
