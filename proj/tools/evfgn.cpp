// Command-line front end: evfgn <train|evaluate|predict|verify|bench|export-adjacency|synth> [options]

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "evfgn/commands.hpp"
#include "evfgn/error.hpp"

namespace {

using namespace evfgn;

std::string config_help() {
  std::ostringstream out;
  out << "Configuration precedence: built-in defaults < --config file < --set key=value.\n"
      << "Config files hold flat 'key = value' lines; '#' starts a comment; unknown keys are errors.\n\nKeys:\n";
  for (const auto& [key, def, help] : RunConfig::describe())
    out << "  " << key << " = " << def << "\n      " << help << '\n';
  return out.str();
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoul(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge-varying Fourier graph network forecaster"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  std::string run_dir;
  std::string config_path;
  std::vector<std::string> overrides;

  auto* train = app.add_subcommand("train", "Train a model into a run directory");
  train->add_option("--run", run_dir, "Run directory")->required();
  train->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  train->add_option("--set", overrides, "key=value override (repeatable)");
  train->footer(config_help());

  auto* evaluate = app.add_subcommand("evaluate", "Test-split metrics of a trained run");
  evaluate->add_option("--run", run_dir, "Run directory")->required();
  evaluate->add_option("--set", overrides, "key=value override, e.g. horizons=[3,6,9,12] or metric_scale=original");

  std::string input_path;
  std::string out_path;
  auto* predict = app.add_subcommand("predict", "Forecast from the last T steps of a series");
  predict->add_option("--run", run_dir, "Run directory")->required();
  predict->add_option("--input", input_path, "CSV series (defaults to the run's data)");
  predict->add_option("--out", out_path, "Forecast CSV")->required();

  std::uint64_t seed = 42;
  bool inject_fault = false;
  auto* verify = app.add_subcommand("verify", "Run the oracle self-check suites");
  verify->add_option("--seed", seed, "Seed for random test inputs");
  verify->add_flag("--inject-fault", inject_fault, "Corrupt one reverse rule (negative control)");

  cli::BenchOptions bench_opts;
  std::string bench_out = "bench.csv";
  auto* bench = app.add_subcommand("bench", "Dense GSO vs Fourier path timing");
  bench->add_option("--sizes", bench_opts.sizes, "Node counts, ascending")->delimiter(',');
  bench->add_option("--d", bench_opts.d, "Channels");
  bench->add_option("--order", bench_opts.order, "Diffusion steps K");
  bench->add_option("--reps", bench_opts.repetitions, "Timed repetitions per point");
  bench->add_option("--seed", bench_opts.seed, "Seed");
  bench->add_option("--out", bench_out, "Output CSV");

  cli::AdjacencyOptions adj_opts;
  std::string mode = "spatial_avg";
  std::string indices;
  auto* adjacency = app.add_subcommand("export-adjacency", "Export the learned supra-graph adjacency");
  adjacency->add_option("--run", run_dir, "Run directory")->required();
  adjacency->add_option("--mode", mode, "full | spatial_avg | temporal_per_variable");
  adjacency->add_option("--indices", indices, "Comma-separated variable indices (default: all)");
  adjacency->add_option("--window", adj_opts.window, "Test-split window index");
  adjacency->add_option("--out", out_path, "Output path stem")->required();

  std::string kind = "coupled_sinusoids";
  std::size_t vars = 8;
  std::size_t length = 2048;
  double coupling = 0.3;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic dataset and its coupling matrix");
  synth->add_option("--kind", kind, "coupled_sinusoids | var1");
  synth->add_option("--vars", vars, "Variables N");
  synth->add_option("--length", length, "Timestamps L");
  synth->add_option("--seed", seed, "Seed");
  synth->add_option("--coupling", coupling, "Off-diagonal coupling scale");
  synth->add_option("--out", out_path, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUserError;
  }

  std::ostringstream sink;
  std::ostream& out = quiet ? static_cast<std::ostream&>(sink) : std::cout;
  try {
    if (*train) {
      RunConfig cfg;
      if (!config_path.empty()) cfg.merge_file(config_path);
      cli::apply_overrides(cfg, overrides);
      cli::cmd_train(cfg, run_dir, out);
    } else if (*evaluate) {
      cli::cmd_evaluate(run_dir, overrides, out);
    } else if (*predict) {
      std::optional<std::filesystem::path> input;
      if (!input_path.empty()) input = input_path;
      cli::cmd_predict(run_dir, input, out_path, out);
    } else if (*verify) {
      const auto report = cli::cmd_verify(seed, inject_fault ? ad::Fault::linear_weight_grad : ad::Fault::none,
                                          std::cout);
      return report.passed() ? cli::kOk : cli::kInternalError;
    } else if (*bench) {
      cli::cmd_bench(bench_opts, bench_out, std::cout);
    } else if (*adjacency) {
      adj_opts.mode = eval::parse_adjacency_mode(mode);
      adj_opts.indices = parse_index_list(indices);
      cli::cmd_export_adjacency(run_dir, adj_opts, out_path, out);
    } else if (*synth) {
      cli::cmd_synth(data::parse_synthetic_kind(kind), vars, length, seed, coupling, out_path, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code_for(e);
  }
  return cli::kOk;
}
