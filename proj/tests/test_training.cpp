#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "evfgn/checkpoint.hpp"
#include "evfgn/data.hpp"
#include "evfgn/random.hpp"
#include "evfgn/training.hpp"
#include "helpers.hpp"

using namespace evfgn;
using namespace evfgn::training;
using testing::random_real;

namespace {

model::ModelConfig tiny_config(std::size_t vars = 3) {
  model::ModelConfig c;
  c.vars = vars;
  c.steps = 4;
  c.horizon = 2;
  c.embed_dim = 3;
  c.order = 2;
  c.reduced_steps = 2;
  c.ffn_hidden1 = 5;
  c.ffn_hidden2 = 7;
  return c;
}

data::Dataset tiny_dataset(std::uint64_t seed) {
  const data::Synthetic s = data::gen_synthetic(data::SyntheticKind::coupled_sinusoids, 3, 160, seed);
  return data::prepare(s.series, {}, 4, 2);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("RMSProp: zero gradient, hand-computed step and antisymmetry") {
  std::vector<double> p{0.5};
  OptimizerState s{{0.4}, 0.001, 0.9, 1e-8};
  rmsprop_step(p, std::vector<double>{0.0}, s);
  CHECK(p[0] == 0.5);
  CHECK(s.v[0] == doctest::Approx(0.36).epsilon(1e-15));

  std::vector<double> q{0.0};
  OptimizerState fresh{{0.0}, 0.001, 0.9, 1e-8};
  rmsprop_step(q, std::vector<double>{1.0}, fresh);
  CHECK(fresh.v[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(q[0] == doctest::Approx(-0.001 / (std::sqrt(0.1) + 1e-8)).epsilon(1e-14));
  CHECK(q[0] == doctest::Approx(-0.0031623).epsilon(1e-4));

  std::vector<double> up{0.0}, down{0.0};
  OptimizerState a{{0.2}, 0.01, 0.9, 1e-8}, b{{0.2}, 0.01, 0.9, 1e-8};
  rmsprop_step(up, std::vector<double>{0.3}, a);
  rmsprop_step(down, std::vector<double>{-0.3}, b);
  CHECK(up[0] == -down[0]);
  CHECK(a.v == b.v);
}

TEST_CASE("RMSProp accumulator converges to g squared") {
  std::vector<double> p{0.0};
  OptimizerState s{{0.0}, 1e-3, 0.9, 1e-8};
  for (int i = 0; i < 400; ++i) rmsprop_step(p, std::vector<double>{0.7}, s);
  CHECK(s.v[0] == doctest::Approx(0.49).epsilon(1e-12));
}

TEST_CASE("training with zero learning rate leaves parameters bitwise unchanged") {
  const data::Dataset ds = tiny_dataset(5);
  const model::Model m{tiny_config(), model::init_params(tiny_config(), 6), model::Variant::full};
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.0;
  const TrainResult r = train(m, ds.train, ds.val, cfg);
  CHECK(r.last.params == m.params);
  CHECK(r.history.epochs.size() == 3);
}

TEST_CASE("training is deterministic and keeps the best validation checkpoint") {
  const data::Dataset ds = tiny_dataset(7);
  const model::Model m{tiny_config(), model::init_params(tiny_config(), 8), model::Variant::full};
  const auto dir = std::filesystem::temp_directory_path() / "evfgn_test_training";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 4;
  cfg.learning_rate = 1e-3;
  cfg.checkpoint = dir / "a.bin";
  const TrainResult first = train(m, ds.train, ds.val, cfg);
  cfg.checkpoint = dir / "b.bin";
  cfg.exec = Exec::serial;
  const TrainResult second = train(m, ds.train, ds.val, cfg);

  CHECK(first.history.csv() == second.history.csv());
  CHECK(slurp(dir / "a.bin") == slurp(dir / "b.bin"));
  CHECK(first.last.params == second.last.params);

  double best = first.history.epochs.front().val_mae;
  for (const EpochRecord& e : first.history.epochs) best = std::min(best, e.val_mae);
  CHECK(first.history.epochs[first.history.best_epoch - 1].val_mae == best);
  CHECK(checkpoint::load(dir / "a.bin").params == first.best.params);
  CHECK(first.history.csv().rfind("epoch,train_loss,val_mae,val_rmse,val_mape\n", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("training rejects empty splits and invalid configs, and never mutates windows") {
  const data::Dataset ds = tiny_dataset(9);
  const model::Model m{tiny_config(), model::init_params(tiny_config(), 10), model::Variant::full};
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(train(m, {}, ds.val, cfg), Error);
  CHECK_THROWS_AS(train(m, ds.train, {}, cfg), Error);
  TrainConfig bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(m, ds.train, ds.val, bad), Error);
  bad = cfg;
  bad.epochs = 0;
  CHECK_THROWS_AS(train(m, ds.train, ds.val, bad), Error);

  const data::WindowSet before = ds.train;
  cfg.learning_rate = 1e-3;
  train(m, ds.train, ds.val, cfg);
  REQUIRE(before.size() == ds.train.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(before[i].input == ds.train[i].input);
    CHECK(before[i].target == ds.train[i].target);
  }
}

TEST_CASE("a huge learning rate raises a divergence error with the epoch") {
  const data::Dataset ds = tiny_dataset(11);
  const model::Model m{tiny_config(), model::init_params(tiny_config(), 12), model::Variant::full};
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 2;
  cfg.learning_rate = 1e200;
  try {
    train(m, ds.train, ds.val, cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() >= 1);
    CHECK(e.kind() == ErrorKind::Divergence);
  }
}

TEST_CASE("gradient check: quadratic toy, full model and the zero-tolerance contract") {
  const std::vector<double> p{0.3, -1.2, 2.0};
  std::vector<double> analytic;
  for (double v : p) analytic.push_back(2.0 * v);
  auto quadratic = [](std::span<const double> q) {
    double s = 0.0;
    for (double v : q) s += v * v;
    return s;
  };
  const GradCheckReport toy = check_gradient(quadratic, p, analytic, kGradCheckStep, 1e-8);
  CHECK(toy.passed);
  CHECK(toy.worst_relative_error < 1e-8);

  const GradCheckReport never = check_gradient(quadratic, p, analytic, kGradCheckStep, 0.0);
  CHECK_FALSE(never.passed);
  CHECK(!never.summary().empty());
  const GradCheckReport bad_step = check_gradient(quadratic, p, analytic, 0.0, 1.0);
  CHECK_FALSE(bad_step.passed);

  const model::ModelConfig c = tiny_config();
  for (model::Variant v : {model::Variant::full, model::Variant::no_embedding, model::Variant::no_dynamic_filter,
                           model::Variant::no_residual, model::Variant::no_summation}) {
    const model::Model m{c, model::init_params(c, 13), v};
    Rng rng(14);
    const data::Window w{random_real({3, 4, 1}, rng), random_real({3, 2, 1}, rng), 0, data::SplitTag::train};
    const GradCheckReport r = grad_check(m, w);
    INFO(r.summary());
    CHECK(r.passed);
    CHECK(r.worst_relative_error < 1e-4);
    CHECK(r.checked > 0);
  }
}

TEST_CASE("recorded forward equals the plain forward bitwise") {
  const model::ModelConfig c = tiny_config();
  const model::Model m{c, model::init_params(c, 15), model::Variant::full};
  Rng rng(16);
  const RealTensor x = random_real({3, 4, 1}, rng);
  ad::Tape tape;
  const ad::Var out = record_forward(tape, m, x);
  CHECK(tape.real(out) == model::model_forward(x, m, Exec::serial));
}
