#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "evfgn/data.hpp"
#include "evfgn/eval.hpp"
#include "evfgn/random.hpp"
#include "helpers.hpp"

using namespace evfgn;
using namespace evfgn::eval;
using testing::random_real;

namespace {

model::ModelConfig small_config() {
  model::ModelConfig c;
  c.vars = 3;
  c.steps = 6;
  c.horizon = 2;
  c.embed_dim = 4;
  c.order = 3;
  c.reduced_steps = 2;
  c.ffn_hidden1 = 6;
  c.ffn_hidden2 = 5;
  return c;
}

data::WindowSet random_windows(std::size_t count, Rng& rng) {
  data::WindowSet ws;
  for (std::size_t i = 0; i < count; ++i)
    ws.push_back({random_real({3, 6, 1}, rng), random_real({3, 2, 1}, rng), i, data::SplitTag::test});
  return ws;
}

}  // namespace

TEST_CASE("metrics on a hand-sized example") {
  const std::vector<RealTensor> preds{RealTensor({1, 2, 1}, {1.0, 6.0})};
  const std::vector<RealTensor> truths{RealTensor({1, 2, 1}, {2.0, 4.0})};
  const MetricReport r = metrics(preds, truths);
  CHECK(r.mae == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(r.rmse == doctest::Approx(std::sqrt(2.5)).epsilon(1e-15));
  CHECK(r.mape_percent == doctest::Approx(50.0).epsilon(1e-13));
  CHECK(r.mae_per_step == std::vector<double>{1.0, 2.0});
  CHECK(r.windows == 1);
  CHECK(r.cells == 2);
  CHECK(r.zero_truth_excluded == 0);
  CHECK(r.csv().rfind("metric,step,value\nmae,all,", 0) == 0);
}

TEST_CASE("zero truth cells are left out of MAPE and counted") {
  const std::vector<RealTensor> preds{RealTensor({2, 1, 1}, {1.0, 3.0})};
  const std::vector<RealTensor> truths{RealTensor({2, 1, 1}, {0.0, 2.0})};
  const MetricReport r = metrics(preds, truths);
  CHECK(r.zero_truth_excluded == 1);
  CHECK(r.mape_percent == doctest::Approx(50.0).epsilon(1e-13));
  CHECK(r.mae == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.text().find("1 zero-truth cells excluded") != std::string::npos);

  try {
    metrics(std::vector<RealTensor>{}, std::vector<RealTensor>{});
    FAIL("expected EmptyEvaluation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyEvaluation);
  }
  CHECK_THROWS_AS(evaluate(model::Model{}, {}), Error);
}

TEST_CASE("evaluate agrees with per-window loops over the forward pass") {
  const model::ModelConfig c = small_config();
  const model::Model m{c, model::init_params(c, 3), model::Variant::full};
  Rng rng(4);
  const data::WindowSet ws = random_windows(9, rng);
  double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
  for (const data::Window& w : ws) {
    const RealTensor y = model::model_forward(w.input, m, Exec::serial);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = y[i] - w.target[i];
      abs_sum += std::abs(d);
      sq_sum += d * d;
      pct_sum += std::abs(d / w.target[i]);
    }
  }
  const double cells = 9.0 * 3.0 * 2.0;
  const MetricReport r = evaluate(m, ws);
  CHECK(std::abs(r.mae - abs_sum / cells) < 1e-12);
  CHECK(std::abs(r.rmse - std::sqrt(sq_sum / cells)) < 1e-12);
  CHECK(std::abs(r.mape_percent - 100.0 * pct_sum / cells) < 1e-9);
  CHECK(r.mae_per_step.size() == 2);

  const MetricReport serial = evaluate(m, ws, Scale::normalized, nullptr, Exec::serial);
  CHECK(serial.mae == r.mae);
  CHECK(serial.rmse == r.rmse);
}

TEST_CASE("original-scale metrics undo the normalization on both sides") {
  const model::ModelConfig c = small_config();
  const model::Model m{c, model::init_params(c, 5), model::Variant::full};
  Rng rng(6);
  const data::WindowSet ws = random_windows(4, rng);
  data::NormStats stats{{-2.0, 0.0, 10.0}, {2.0, 1.0, 30.0}, {false, false, false}};
  const MetricReport r = evaluate(m, ws, Scale::original, &stats);
  double abs_sum = 0.0;
  for (const data::Window& w : ws) {
    const RealTensor y = data::denormalize_block(model::model_forward(w.input, m, Exec::serial), stats);
    const RealTensor t = data::denormalize_block(w.target, stats);
    for (std::size_t i = 0; i < y.size(); ++i) abs_sum += std::abs(y[i] - t[i]);
  }
  CHECK(r.scale == Scale::original);
  CHECK(std::abs(r.mae - abs_sum / 24.0) < 1e-12);
  CHECK_THROWS_AS(evaluate(m, ws, Scale::original, nullptr), Error);
}

TEST_CASE("repeat-last baseline copies the final input column") {
  const RealTensor x({2, 3, 1}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  const RealTensor y = repeat_last_value(x, 2);
  CHECK(y == RealTensor({2, 2, 1}, {3.0, 3.0, 6.0, 6.0}));

  const data::WindowSet ws{{x, RealTensor({2, 2, 1}, {4.0, 5.0, 6.0, 8.0}), 0, data::SplitTag::test}};
  const MetricReport r = baseline_repeat_last(ws);
  CHECK(r.mae == doctest::Approx((1.0 + 2.0 + 0.0 + 2.0) / 4.0).epsilon(1e-15));
  CHECK_THROWS_AS(baseline_repeat_last({}), Error);
}

TEST_CASE("ablation variants") {
  const model::ModelConfig c = small_config();
  const model::Model base{c, model::init_params(c, 7), model::Variant::full};
  Rng rng(8);
  const RealTensor x = random_real({3, 6, 1}, rng);
  const RealTensor full = model::model_forward(x, base, Exec::serial);

  SUBCASE("full is the identity transformation") {
    const model::Model same = apply_ablation(model::Variant::full, base);
    CHECK(same.params == base.params);
    CHECK(model::model_forward(x, same, Exec::serial) == full);
  }

  SUBCASE("every variant changes the forecast on a generic model") {
    for (model::Variant v : {model::Variant::no_embedding, model::Variant::no_dynamic_filter,
                             model::Variant::no_residual, model::Variant::no_summation}) {
      const model::Model ab = apply_ablation(v, base);
      CHECK(ab.variant == v);
      CHECK(ab.params == base.params);
      CHECK_FALSE(model::model_forward(x, ab, Exec::serial) == full);
    }
  }

  SUBCASE("with no FGSO layers, dropping the summation changes nothing") {
    model::ModelConfig k0 = c;
    k0.order = 0;
    const model::Model m0{k0, model::init_params(k0, 9), model::Variant::full};
    const RealTensor want = model::model_forward(x, m0, Exec::serial);
    CHECK(model::model_forward(x, apply_ablation(model::Variant::no_summation, m0), Exec::serial) == want);
  }

  SUBCASE("a shared filter equals the full model with every layer tied to the first") {
    model::Model tied = base;
    for (auto& layer : tied.params.layers) layer = tied.params.layers.front();
    const RealTensor want = model::model_forward(x, tied, Exec::serial);
    const RealTensor got = model::model_forward(x, apply_ablation(model::Variant::no_dynamic_filter, base), Exec::serial);
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);
  }
}

TEST_CASE("Gram adjacency: closed forms and loop agreement") {
  SUBCASE("orthonormal rows give the identity") {
    RealTensor rep(Dims{2, 2, 4});
    for (std::size_t i = 0; i < 4; ++i) rep[i * 4 + i] = 1.0;
    double peak = 0.0;
    const RealTensor a = gram_normalized(rep, &peak);
    CHECK(peak == 1.0);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) CHECK(a(i, j) == (i == j ? 1.0 : 0.0));
  }

  SUBCASE("constant rows give an all-ones matrix") {
    RealTensor rep(Dims{3, 2, 5});
    for (double& v : rep.values()) v = 2.0;
    double peak = 0.0;
    const RealTensor a = gram_normalized(rep, &peak);
    CHECK(peak == doctest::Approx(20.0).epsilon(1e-15));
    for (double v : a.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("random representation matches a loop Gram and is symmetric") {
    Rng rng(10);
    const RealTensor rep = random_real({6, 4, 3}, rng);
    double peak = 0.0;
    const RealTensor a = gram_normalized(rep, &peak);
    REQUIRE(a.rows() == 24);
    double max_abs = 0.0;
    for (std::size_t i = 0; i < 24; ++i)
      for (std::size_t j = 0; j < 24; ++j) {
        double g = 0.0;
        for (std::size_t c = 0; c < 3; ++c) g += rep(i / 4, i % 4, c) * rep(j / 4, j % 4, c);
        CHECK(std::abs(a(i, j) - g / peak) < 1e-12);
        CHECK(a(i, j) == a(j, i));
        max_abs = std::max(max_abs, std::abs(a(i, j)));
      }
    CHECK(max_abs == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("an all-zero representation is rejected") {
    try {
      gram_normalized(RealTensor(Dims{2, 2, 2}));
      FAIL("expected ZeroRepresentation");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ZeroRepresentation);
    }
  }
}

TEST_CASE("adjacency export modes and files") {
  Rng rng(11);
  const RealTensor rep = random_real({4, 3, 2}, rng);
  const RealTensor a = gram_normalized(rep);

  const Adjacency full = export_adjacency(rep, AdjacencyMode::full);
  REQUIRE(full.matrices.size() == 1);
  CHECK(full.matrices.front() == a);
  CHECK(full.indices.size() == 4);

  const std::vector<std::size_t> pick{2, 0};
  const Adjacency spatial = export_adjacency(rep, AdjacencyMode::spatial_avg, pick);
  REQUIRE(spatial.matrices.front().rows() == 2);
  double block = 0.0;
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t u = 0; u < 3; ++u) block += a(2 * 3 + t, 0 * 3 + u);
  CHECK(std::abs(spatial.matrices.front()(0, 1) - block / 9.0) < 1e-14);

  const Adjacency temporal = export_adjacency(rep, AdjacencyMode::temporal_per_variable, pick);
  REQUIRE(temporal.matrices.size() == 2);
  CHECK(temporal.matrices[1](2, 1) == a(0 * 3 + 2, 0 * 3 + 1));
  CHECK(temporal.matrices[0](0, 2) == a(2 * 3 + 0, 2 * 3 + 2));

  const std::vector<std::size_t> bad{4};
  CHECK_THROWS_AS(export_adjacency(rep, AdjacencyMode::spatial_avg, bad), Error);
  CHECK(parse_adjacency_mode("temporal_per_variable") == AdjacencyMode::temporal_per_variable);
  CHECK_THROWS_AS(parse_adjacency_mode("diagonal"), Error);

  const auto dir = std::filesystem::temp_directory_path() / "evfgn_test_adjacency";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto files = write_adjacency(dir / "adj", temporal);
  CHECK(files.size() == 3);
  for (const auto& f : files) CHECK(std::filesystem::exists(f));
  CHECK(files[0].filename() == "adj_var2.csv");
  const data::Series back = data::ingest_csv(files[0]);
  CHECK(std::abs(back.values(1, 2) - temporal.matrices[0](2, 1)) < 1e-15);
  std::filesystem::remove_all(dir);
}
