#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evfgn/data.hpp"
#include "evfgn/eval.hpp"
#include "evfgn/model.hpp"
#include "evfgn/training.hpp"

namespace evfgn {

/// Everything a run needs. Precedence: built-in defaults < config file <
/// `--set key=value` overrides. The variable count comes from the data.
struct RunConfig {
  // model
  std::size_t steps = 12;
  std::size_t horizon = 3;
  std::size_t embed_dim = 8;
  std::size_t order = 3;
  std::size_t reduced_steps = 2;
  std::size_t ffn_hidden1 = 64;
  std::size_t ffn_hidden2 = 128;
  double negative_slope = 0.01;
  model::Variant variant = model::Variant::full;

  // training
  std::size_t epochs = 500;
  std::size_t batch_size = 8;
  double learning_rate = 1e-5;
  double rmsprop_rho = 0.9;
  double rmsprop_epsilon = 1e-8;
  std::uint64_t seed = 42;
  int threads = 0;  ///< 0 keeps the OpenMP default

  // data; an empty path selects the synthetic generator
  std::string data;
  bool csv_header = false;
  bool csv_transpose = false;
  bool csv_timestamp_column = false;
  data::SyntheticKind synthetic_kind = data::SyntheticKind::coupled_sinusoids;
  std::size_t synthetic_vars = 8;
  std::size_t synthetic_length = 2048;
  double synthetic_coupling = 0.3;
  double split_train = 0.7;
  double split_val = 0.2;
  double split_test = 0.1;

  // evaluation
  eval::Scale metric_scale = eval::Scale::normalized;
  std::vector<std::size_t> horizons;  ///< sweep list; empty means just `horizon`

  /// Applies one `key = value` assignment. Unknown keys are an Error(Config).
  void set(const std::string& key, const std::string& value);
  /// Parses flat `key = value` lines; `#` starts a comment.
  void merge_text(const std::string& text, const std::string& origin = "<config>");
  void merge_file(const std::filesystem::path& path);

  /// Every key in a fixed order, one `key = value` per line.
  std::string resolved() const;
  void validate() const;

  model::ModelConfig model_config(std::size_t vars) const;
  training::TrainConfig train_config() const;
  data::SplitRatios ratios() const { return {split_train, split_val, split_test}; }
  data::CsvOptions csv_options() const { return {csv_header, csv_transpose, csv_timestamp_column, ','}; }

  /// Raw series named by the config (CSV file or synthetic generator).
  data::Series load_series() const;

  /// Documentation of every key: name, default, description.
  static std::vector<std::array<std::string, 3>> describe();
};

}  // namespace evfgn
