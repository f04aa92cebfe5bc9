#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evfgn/autodiff.hpp"
#include "evfgn/data.hpp"
#include "evfgn/model.hpp"

namespace evfgn::training {

/// sum (pred - target)^2 over variables and horizon.
double loss_l2(const RealTensor& pred, const RealTensor& target);

/// Parameter nodes of one recorded forward pass, in manifest order.
struct TapeParams {
  std::vector<std::pair<model::ParamInfo, ad::Var>> entries;
};

/// Records the network on `tape`; each parameter tensor becomes a named
/// parameter node. Values match model::model_forward bit for bit.
ad::Var record_forward(ad::Tape& tape, const model::Model& m, const RealTensor& x);

struct WindowGrad {
  double loss = 0.0;
  std::vector<double> grad;  ///< flat, model::parameter_layout order
};

/// Loss and flat gradient of one window.
WindowGrad window_gradient(const model::Model& m, const RealTensor& x, const RealTensor& target,
                           ad::Fault fault = ad::Fault::none);

struct OptimizerState {
  std::vector<double> v;  ///< running mean square, one per flat parameter
  double learning_rate = 1e-5;
  double rho = 0.9;
  double epsilon = 1e-8;
};

/// v <- rho v + (1 - rho) g^2; p <- p - lr g / (sqrt(v) + eps).
void rmsprop_step(std::span<double> params, std::span<const double> grads, OptimizerState& state);

struct TrainConfig {
  std::size_t epochs = 500;
  std::size_t batch_size = 8;
  double learning_rate = 1e-5;
  double rho = 0.9;
  double epsilon = 1e-8;
  std::uint64_t seed = 42;
  std::optional<std::filesystem::path> checkpoint;  ///< best model saved here after each improvement
  Exec exec = Exec::parallel;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  ///< mean per-window L2 loss over the epoch
  double val_mae = 0.0;
  double val_rmse = 0.0;
  double val_mape = 0.0;
};

struct History {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;

  std::string csv() const;
};

struct TrainResult {
  model::Model best;
  model::Model last;
  History history;
};

using EpochCallback = std::function<void(const EpochRecord&, bool improved)>;

/// Shuffled mini-batches with summed batch loss, validation MAE after every
/// epoch, and the best-validation model retained. Throws DivergenceError.
TrainResult train(const model::Model& initial, const data::WindowSet& train_windows, const data::WindowSet& val_windows,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Predictions for every window, in window order.
std::vector<RealTensor> predict_all(const model::Model& m, const data::WindowSet& windows, Exec exec = Exec::parallel);

// --- gradient verification -------------------------------------------------

inline constexpr double kGradCheckStep = 1e-4;
inline constexpr double kGradCheckFloor = 1e-6;  ///< denominator floor of the relative error

struct GradCheckReport {
  double worst_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_component = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  std::size_t excluded = 0;  ///< components whose perturbation crosses an activation kink
  double tolerance = 0.0;
  bool passed = false;

  std::string summary() const;
};

/// Central differences of `loss` at `params` against `analytic`. `names`
/// labels flat indices; `skip(i)` marks components excluded from the check.
GradCheckReport check_gradient(const std::function<double(std::span<const double>)>& loss,
                               std::span<const double> params, std::span<const double> analytic, double step,
                               double tolerance, const std::function<std::string(std::size_t)>& names = {},
                               const std::function<bool(std::size_t, double)>& skip = {});

/// Backward pass vs. central differences on one window, excluding components
/// whose +-step perturbation flips the sign of any split-ReLU or LeakyReLU input.
GradCheckReport grad_check(const model::Model& m, const data::Window& window, double step = kGradCheckStep,
                           double tolerance = 1e-4, ad::Fault fault = ad::Fault::none);

/// Signs of every activation input along the forward pass (kink audit).
std::vector<bool> activation_pattern(const model::Model& m, const RealTensor& x);

}  // namespace evfgn::training
