#include "evfgn/run_config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "evfgn/error.hpp"
#include "evfgn/format.hpp"

namespace evfgn {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
    return v.substr(1, v.size() - 2);
  return v;
}

std::string quote(const std::string& v) { return "\"" + v + "\""; }

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  fail(ErrorKind::Config, "key '" + key + "': cannot read '" + value + "' as " + expected);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    bad_value(key, v, "a finite number");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::size_t> to_size_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::string body = trim(v);
  if (!body.empty() && body.front() == '[' && body.back() == ']') body = body.substr(1, body.size() - 2);
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_size(key, item));
  }
  return out;
}

struct Key {
  const char* name;
  const char* help;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Key size_key(const char* name, const char* help, T RunConfig::*field) {
  return {name, help, [field](RunConfig& c, const std::string& k, const std::string& v) { c.*field = to_size(k, v); },
          [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

Key double_key(const char* name, const char* help, double RunConfig::*field) {
  return {name, help, [field](RunConfig& c, const std::string& k, const std::string& v) { c.*field = to_double(k, v); },
          [field](const RunConfig& c) { return format_double(c.*field); }};
}

Key bool_key(const char* name, const char* help, bool RunConfig::*field) {
  return {name, help, [field](RunConfig& c, const std::string& k, const std::string& v) { c.*field = to_bool(k, v); },
          [field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      size_key("steps", "input window length T", &RunConfig::steps),
      size_key("horizon", "forecast horizon tau", &RunConfig::horizon),
      size_key("embed_dim", "embedding size d", &RunConfig::embed_dim),
      size_key("order", "number of FGSO layers K", &RunConfig::order),
      size_key("reduced_steps", "time-axis reduction l before the FFN", &RunConfig::reduced_steps),
      size_key("ffn_hidden1", "first FFN width", &RunConfig::ffn_hidden1),
      size_key("ffn_hidden2", "second FFN width", &RunConfig::ffn_hidden2),
      double_key("negative_slope", "LeakyReLU slope in the FFN", &RunConfig::negative_slope),
      {"variant", "full | no_embedding | no_dynamic_filter | no_residual | no_summation",
       [](RunConfig& c, const std::string&, const std::string& v) { c.variant = model::parse_variant(v); },
       [](const RunConfig& c) { return quote(model::to_string(c.variant)); }},
      size_key("epochs", "training epochs", &RunConfig::epochs),
      size_key("batch_size", "windows per RMSProp step (losses summed)", &RunConfig::batch_size),
      double_key("learning_rate", "RMSProp learning rate", &RunConfig::learning_rate),
      double_key("rmsprop_rho", "RMSProp decay", &RunConfig::rmsprop_rho),
      double_key("rmsprop_epsilon", "RMSProp denominator guard", &RunConfig::rmsprop_epsilon),
      {"seed", "run seed; init, shuffle and synthetic seeds derive from it",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"threads", "OpenMP threads, 0 for the runtime default",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.threads = to_int(k, v); },
       [](const RunConfig& c) { return std::to_string(c.threads); }},
      {"data", "CSV path; empty selects the synthetic generator",
       [](RunConfig& c, const std::string&, const std::string& v) { c.data = v; },
       [](const RunConfig& c) { return quote(c.data); }},
      bool_key("csv_header", "first CSV row holds variable names", &RunConfig::csv_header),
      bool_key("csv_transpose", "CSV rows are variables instead of timestamps", &RunConfig::csv_transpose),
      bool_key("csv_timestamp_column", "first CSV column is a timestamp label", &RunConfig::csv_timestamp_column),
      {"synthetic_kind", "coupled_sinusoids | var1",
       [](RunConfig& c, const std::string&, const std::string& v) { c.synthetic_kind = data::parse_synthetic_kind(v); },
       [](const RunConfig& c) { return quote(data::to_string(c.synthetic_kind)); }},
      size_key("synthetic_vars", "synthetic variable count N", &RunConfig::synthetic_vars),
      size_key("synthetic_length", "synthetic series length L", &RunConfig::synthetic_length),
      double_key("synthetic_coupling", "off-diagonal coupling scale", &RunConfig::synthetic_coupling),
      double_key("split_train", "chronological train share", &RunConfig::split_train),
      double_key("split_val", "chronological validation share", &RunConfig::split_val),
      double_key("split_test", "chronological test share", &RunConfig::split_test),
      {"metric_scale", "normalized | original",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "normalized") c.metric_scale = eval::Scale::normalized;
         else if (v == "original") c.metric_scale = eval::Scale::original;
         else bad_value(k, v, "normalized or original");
       },
       [](const RunConfig& c) { return quote(eval::to_string(c.metric_scale)); }},
      {"horizons", "comma-separated horizon sweep, e.g. [3, 6, 9, 12]",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.horizons = to_size_list(k, v); },
       [](const RunConfig& c) {
         std::string s = "[";
         for (std::size_t i = 0; i < c.horizons.size(); ++i) s += (i ? ", " : "") + std::to_string(c.horizons[i]);
         return s + "]";
       }},
  };
  return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const Key& k : keys())
    if (key == k.name) {
      k.set(*this, key, unquote(trim(value)));
      return;
    }
  fail(ErrorKind::Config, "unknown config key '" + key + "'");
}

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quotes = !in_quotes;
      if (line[i] == '#' && !in_quotes) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Config, origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorKind::Config, origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Config, "cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path.string());
}

std::string RunConfig::resolved() const {
  std::string out;
  for (const Key& k : keys()) out += std::string(k.name) + " = " + k.get(*this) + "\n";
  return out;
}

std::vector<std::array<std::string, 3>> RunConfig::describe() {
  const RunConfig defaults;
  std::vector<std::array<std::string, 3>> out;
  for (const Key& k : keys()) out.push_back({k.name, k.get(defaults), k.help});
  return out;
}

void RunConfig::validate() const {
  model_config(2).validate();
  train_config().validate();
  require(threads >= 0, ErrorKind::Config, "threads must be >= 0");
  for (std::size_t h : horizons) require(h >= 1, ErrorKind::Config, "horizons must be >= 1");
}

model::ModelConfig RunConfig::model_config(std::size_t vars) const {
  return {vars, steps, horizon, embed_dim, order, reduced_steps, ffn_hidden1, ffn_hidden2, negative_slope};
}

training::TrainConfig RunConfig::train_config() const {
  training::TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.learning_rate = learning_rate;
  t.rho = rmsprop_rho;
  t.epsilon = rmsprop_epsilon;
  t.seed = seed;
  return t;
}

data::Series RunConfig::load_series() const {
  if (!data.empty()) return data::ingest_csv(data, csv_options());
  return data::gen_synthetic(synthetic_kind, synthetic_vars, synthetic_length, seed, synthetic_coupling).series;
}

}  // namespace evfgn
