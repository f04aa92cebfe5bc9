#include "evfgn/commands.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "evfgn/checkpoint.hpp"
#include "evfgn/error.hpp"
#include "evfgn/format.hpp"
#include "evfgn/parallel.hpp"
#include "evfgn/random.hpp"

namespace evfgn::cli {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::Io, "cannot write '" + tmp.string() + "'");
    out << text;
    require(out.good(), ErrorKind::Io, "short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::size_t> horizon_list(const RunConfig& cfg) {
  return cfg.horizons.empty() ? std::vector<std::size_t>{cfg.horizon} : cfg.horizons;
}

fs::path horizon_dir(const RunConfig& cfg, const fs::path& run_dir, std::size_t h) {
  return cfg.horizons.empty() ? run_dir : run_dir / ("h" + std::to_string(h));
}

RunConfig for_horizon(RunConfig cfg, std::size_t h) {
  cfg.horizon = h;
  cfg.horizons.clear();
  return cfg;
}

void apply_threads(const RunConfig& cfg) {
  if (cfg.threads > 0) set_threads(cfg.threads);
}

TrainOutcome train_one(const RunConfig& cfg, const fs::path& dir, std::ostream& out) {
  fs::create_directories(dir);
  write_text(dir / kResolvedConfig, cfg.resolved());
  std::ofstream log(dir / kLog, std::ios::binary | std::ios::trunc);
  require(log.good(), ErrorKind::Io, "cannot write '" + (dir / kLog).string() + "'");
  const auto say = [&](const std::string& line) {
    log << line << '\n';
    log.flush();
    out << line << '\n';
  };

  const data::Series series = cfg.load_series();
  const data::Dataset ds = data::prepare(series, cfg.ratios(), cfg.steps, cfg.horizon);
  const model::ModelConfig mc = cfg.model_config(series.vars());
  const model::Model initial{mc, model::init_params(mc, derive_seed(cfg.seed, SeedStream::init)), cfg.variant};
  say("data: " + std::to_string(series.vars()) + " variables x " + std::to_string(series.length()) +
      " steps; windows train " + std::to_string(ds.train.size()) + ", val " + std::to_string(ds.val.size()) +
      ", test " + std::to_string(ds.test.size()));
  say("model: variant " + std::string(model::to_string(cfg.variant)) + ", " +
      std::to_string(model::flatten(initial.params).size()) + " real parameters");

  training::TrainConfig tc = cfg.train_config();
  tc.checkpoint = dir / kCheckpoint;
  TrainOutcome outcome{dir, training::train(initial, ds.train, ds.val, tc,
                                            [&](const training::EpochRecord& r, bool improved) {
                                              say("epoch " + std::to_string(r.epoch) + " train_loss " +
                                                  format_double(r.train_loss) + " val_mae " +
                                                  format_double(r.val_mae) + (improved ? " *" : ""));
                                            }),
                       {}};
  write_text(dir / kHistory, outcome.result.history.csv());
  outcome.test = eval::evaluate(outcome.result.best, ds.test, cfg.metric_scale, &ds.stats);
  write_text(dir / kMetrics, outcome.test.csv());
  say("best epoch " + std::to_string(outcome.result.history.best_epoch) + "; test metrics:");
  say(outcome.test.text());
  return outcome;
}

}  // namespace

int exit_code_for(const std::exception& e) noexcept {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (err == nullptr) return dynamic_cast<const fs::filesystem_error*>(&e) ? kUserError : kInternalError;
  switch (err->kind()) {
    case ErrorKind::InvalidShape:
    case ErrorKind::NonFinite:
    case ErrorKind::MissingGradPath:
      return kInternalError;
    default:
      return kUserError;
  }
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    require(eq != std::string::npos, ErrorKind::Config, "override '" + o + "' is not key=value");
    std::string key = o.substr(0, eq);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    cfg.set(key, o.substr(eq + 1));
  }
}

RunConfig load_run_config(const fs::path& run_dir, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  cfg.merge_text(read_text(run_dir / kResolvedConfig), (run_dir / kResolvedConfig).string());
  apply_overrides(cfg, overrides);
  cfg.validate();
  return cfg;
}

std::vector<TrainOutcome> cmd_train(const RunConfig& cfg, const fs::path& run_dir, std::ostream& out) {
  cfg.validate();
  apply_threads(cfg);
  std::vector<TrainOutcome> outcomes;
  if (cfg.horizons.empty()) {
    outcomes.push_back(train_one(cfg, run_dir, out));
    return outcomes;
  }
  fs::create_directories(run_dir);
  write_text(run_dir / kResolvedConfig, cfg.resolved());
  for (std::size_t h : cfg.horizons) {
    out << "== horizon " << h << " ==\n";
    outcomes.push_back(train_one(for_horizon(cfg, h), horizon_dir(cfg, run_dir, h), out));
  }
  return outcomes;
}

std::vector<eval::MetricReport> cmd_evaluate(const fs::path& run_dir, const std::vector<std::string>& overrides,
                                             std::ostream& out) {
  const RunConfig cfg = load_run_config(run_dir, overrides);
  apply_threads(cfg);
  const data::Series series = cfg.load_series();
  std::vector<eval::MetricReport> reports;
  for (std::size_t h : horizon_list(cfg)) {
    const RunConfig sub = for_horizon(cfg, h);
    const fs::path dir = horizon_dir(cfg, run_dir, h);
    const data::Dataset ds = data::prepare(series, sub.ratios(), sub.steps, sub.horizon);
    const model::Model m = checkpoint::load_compatible(dir / kCheckpoint, sub.model_config(series.vars()));
    eval::MetricReport report = eval::evaluate(m, ds.test, sub.metric_scale, &ds.stats);
    write_text(dir / kMetrics, report.csv());
    out << report.text();
    reports.push_back(std::move(report));
  }
  return reports;
}

RealTensor cmd_predict(const fs::path& run_dir, const std::optional<fs::path>& input, const fs::path& output,
                       std::ostream& out) {
  const RunConfig cfg = load_run_config(run_dir);
  const data::Series reference = cfg.load_series();
  const data::NormStats stats =
      data::NormStats::fit(data::split(reference, cfg.ratios(), cfg.steps, cfg.horizon).train);
  const data::Series series = input ? data::ingest_csv(*input, cfg.csv_options()) : reference;
  require(series.vars() == reference.vars(), ErrorKind::Config,
          "input has " + std::to_string(series.vars()) + " variables, the model expects " +
              std::to_string(reference.vars()));
  require(series.length() >= cfg.steps, ErrorKind::InsufficientData,
          "input holds fewer than T = " + std::to_string(cfg.steps) + " steps");
  const model::Model m = checkpoint::load_compatible(run_dir / kCheckpoint, cfg.model_config(series.vars()));

  const data::Series recent = series.slice(series.length() - cfg.steps, series.length());
  const RealTensor x = data::normalize_block(recent.values, stats).reshaped(Dims{series.vars(), cfg.steps, 1});
  const RealTensor forecast = data::denormalize_block(model::model_forward(x, m), stats);
  data::Series table;
  table.values = forecast;
  table.names = series.names;
  data::write_csv(output, table);
  out << "wrote " << cfg.horizon << "-step forecast for " << series.vars() << " variables to " << output.string()
      << '\n';
  return forecast;
}

verify::Report cmd_verify(std::uint64_t seed, ad::Fault fault, std::ostream& out) {
  const verify::Report report = verify::run_all(seed, fault);
  out << report.text();
  return report;
}

oracle::BenchResult cmd_bench(const BenchOptions& opts, const fs::path& output, std::ostream& out) {
  const oracle::BenchResult result = oracle::complexity_bench(opts.sizes, opts.d, opts.order, opts.repetitions,
                                                              derive_seed(opts.seed, SeedStream::oracle));
  write_text(output, oracle::bench_csv(result));
  out << "correctness gate: max disagreement " << result.gate_error << '\n';
  out << "slope dense " << result.dense_slope << '\n';
  out << "slope fourier " << result.fourier_slope << '\n';
  out << "wrote " << output.string() << '\n';
  return result;
}

std::vector<fs::path> cmd_export_adjacency(const fs::path& run_dir, const AdjacencyOptions& opts,
                                           const fs::path& output_stem, std::ostream& out) {
  const RunConfig cfg = load_run_config(run_dir);
  const data::Series series = cfg.load_series();
  const data::Dataset ds = data::prepare(series, cfg.ratios(), cfg.steps, cfg.horizon);
  require(opts.window < ds.test.size(), ErrorKind::Config,
          "window " + std::to_string(opts.window) + " out of range (test split has " + std::to_string(ds.test.size()) +
              ")");
  const model::Model m = checkpoint::load_compatible(run_dir / kCheckpoint, cfg.model_config(series.vars()));
  const RealTensor rep = model::representation(ds.test[opts.window].input, m).representation;
  const eval::Adjacency adj = eval::export_adjacency(rep, opts.mode, opts.indices);
  if (output_stem.has_parent_path()) fs::create_directories(output_stem.parent_path());
  std::vector<fs::path> files = eval::write_adjacency(output_stem, adj);
  for (const auto& f : files) out << "wrote " << f.string() << '\n';
  return files;
}

std::vector<fs::path> cmd_synth(data::SyntheticKind kind, std::size_t vars, std::size_t length, std::uint64_t seed,
                                double coupling, const fs::path& output, std::ostream& out) {
  const data::Synthetic s = data::gen_synthetic(kind, vars, length, seed, coupling);
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  fs::path sidecar = output;
  sidecar.replace_extension();
  sidecar += ".coupling.csv";
  data::write_csv(output, s.series);
  data::write_matrix_csv(sidecar, s.coupling);
  out << "wrote " << output.string() << " (" << vars << " x " << length << ") and " << sidecar.string() << '\n';
  return {output, sidecar};
}

}  // namespace evfgn::cli
