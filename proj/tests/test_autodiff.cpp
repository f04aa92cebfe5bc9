#include <doctest.h>

#include <cmath>
#include <functional>

#include "evfgn/autodiff.hpp"
#include "evfgn/random.hpp"
#include "evfgn/training.hpp"
#include "helpers.hpp"

using namespace evfgn;
using testing::random_complex;
using testing::random_real;

namespace {

// Differentiates `build` with respect to one complex parameter packed as
// (re, im) pairs and compares against central differences.
training::GradCheckReport check_complex_op(const ComplexTensor& p0,
                                           const std::function<ad::Var(ad::Tape&, ad::Var)>& build) {
  auto unpack = [&](std::span<const double> flat) {
    ComplexTensor p(p0.dims());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = {flat[2 * i], flat[2 * i + 1]};
    return p;
  };
  std::vector<double> flat;
  for (const cdouble& v : p0.values()) {
    flat.push_back(v.real());
    flat.push_back(v.imag());
  }
  ad::Tape tape;
  const ad::Var p = tape.parameter("p", p0);
  tape.backward(build(tape, p));
  std::vector<double> analytic;
  for (const cdouble& g : std::get<ComplexTensor>(tape.grad(p)).values()) {
    analytic.push_back(g.real());
    analytic.push_back(g.imag());
  }
  auto loss = [&](std::span<const double> q) {
    ad::Tape t;
    return t.real(build(t, t.parameter("p", unpack(q))))[0];
  };
  return training::check_gradient(loss, flat, analytic, 1e-5, 1e-7);
}

}  // namespace

TEST_CASE("sum of squares has gradient 2p exactly") {
  Rng rng(1);
  const RealTensor p = random_real({5, 1, 1}, rng);
  ad::Tape tape;
  const ad::Var v = tape.parameter("p", p);
  const ad::GradStore grads = ad::backward(tape, ad::sum_squares(tape, v));
  const auto& g = std::get<RealTensor>(grads.at("p"));
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(g[i] == 2.0 * p[i]);
  CHECK(tape.last_visit_count() == tape.size());
}

TEST_CASE("a parameter the loss ignores gets an exact zero gradient") {
  Rng rng(2);
  ad::Tape tape;
  const ad::Var used = tape.parameter("used", random_real({3, 1, 1}, rng));
  tape.parameter("unused", random_real({4, 1, 1}, rng));
  const ad::GradStore grads = ad::backward(tape, ad::sum_squares(tape, used));
  for (double v : std::get<RealTensor>(grads.at("unused")).values()) CHECK(v == 0.0);
  CHECK_FALSE(grads.contains("missing"));
  CHECK_THROWS_AS(grads.at("missing"), Error);
}

TEST_CASE("backward rejects detached, foreign and non-scalar losses") {
  Rng rng(3);
  ad::Tape tape;
  const ad::Var c = tape.constant(random_real({3, 1, 1}, rng));
  try {
    tape.backward(ad::sum_squares(tape, c));
    FAIL("expected MissingGradPath");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingGradPath);
  }

  ad::Tape other;
  const ad::Var foreign = ad::sum_squares(other, other.parameter("q", random_real({2, 1, 1}, rng)));
  try {
    tape.backward(foreign);
    FAIL("expected MissingGradPath");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingGradPath);
  }

  const ad::Var vec = tape.parameter("v", random_real({3, 1, 1}, rng));
  try {
    tape.backward(vec);
    FAIL("expected InvalidShape");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidShape);
  }
}

TEST_CASE("L2 loss: zero on a match, term count on unit offsets, loop sum on random") {
  Rng rng(4);
  const RealTensor a = random_real({2, 3, 1}, rng);
  CHECK(training::loss_l2(a, a) == 0.0);
  RealTensor shifted = a;
  for (double& v : shifted.values()) v += 1.0;
  CHECK(training::loss_l2(shifted, a) == doctest::Approx(6.0).epsilon(1e-15));
  const RealTensor b = random_real({2, 3, 1}, rng);
  double want = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) want += (a[i] - b[i]) * (a[i] - b[i]);
  CHECK(training::loss_l2(a, b) == want);
  CHECK_THROWS_AS(training::loss_l2(a, random_real({3, 2, 1}, rng)), Error);
}

TEST_CASE("complex reverse rules match central differences") {
  Rng rng(5);
  const ComplexTensor w = random_complex({3, 2, 1}, rng);
  const ComplexTensor bias = random_complex({2, 1, 1}, rng);
  const RealTensor target = random_real({3, 4, 2}, rng);

  SUBCASE("transform pair, channel product and bias") {
    const auto report = check_complex_op(random_complex({3, 4, 3}, rng), [&](ad::Tape& t, ad::Var p) {
      const ad::Var s = ad::dft2(t, p);
      const ad::Var m = ad::channel_matmul(t, s, t.constant(w));
      const ad::Var b = ad::add_bias(t, m, t.constant(bias));
      const ad::Var r = ad::real_part(t, ad::idft2(t, b));
      return ad::l2_loss(t, r, t.constant(target));
    });
    CHECK(report.passed);
    CHECK(report.worst_relative_error < 1e-7);
  }

  SUBCASE("gradient with respect to the weight itself") {
    const ComplexTensor x = random_complex({3, 4, 3}, rng);
    const auto report = check_complex_op(w, [&](ad::Tape& t, ad::Var p) {
      const ad::Var m = ad::channel_matmul(t, t.constant(x), p);
      return ad::l2_loss(t, ad::real_part(t, ad::idft2(t, m)), t.constant(target));
    });
    CHECK(report.passed);
  }

  SUBCASE("split ReLU away from the kink") {
    ComplexTensor p0 = random_complex({2, 3, 2}, rng);
    for (cdouble& v : p0.values()) {
      // keep every component at least 0.1 from zero
      v = {v.real() + std::copysign(0.1, v.real()), v.imag() + std::copysign(0.1, v.imag())};
    }
    const auto report = check_complex_op(p0, [&](ad::Tape& t, ad::Var p) {
      const ad::Var r = ad::real_part(t, ad::split_relu(t, p));
      return ad::sum_squares(t, r);
    });
    CHECK(report.passed);
  }
}

TEST_CASE("directional derivative of the full model agrees with the gradient") {
  model::ModelConfig c;
  c.vars = 3;
  c.steps = 4;
  c.horizon = 2;
  c.embed_dim = 3;
  c.order = 2;
  c.reduced_steps = 2;
  c.ffn_hidden1 = 5;
  c.ffn_hidden2 = 7;
  model::Model m{c, model::init_params(c, 21), model::Variant::full};
  Rng rng(22);
  const RealTensor x = random_real({3, 4, 1}, rng);
  const RealTensor target = random_real({3, 2, 1}, rng);
  const training::WindowGrad wg = training::window_gradient(m, x, target);
  const std::vector<double> p = model::flatten(m.params);
  const double h = 1e-4;

  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> u(p.size());
    double norm = 0.0;
    for (double& v : u) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] /= norm;
      dot += wg.grad[i] * u[i];
    }
    auto loss_at = [&](double sign) {
      std::vector<double> q = p;
      for (std::size_t i = 0; i < q.size(); ++i) q[i] += sign * h * u[i];
      model::Model shifted = m;
      model::unflatten(q, shifted.params);
      return training::loss_l2(model::model_forward(x, shifted, Exec::serial), target);
    };
    const double numeric = (loss_at(1.0) - loss_at(-1.0)) / (2.0 * h);
    CHECK(std::abs(numeric - dot) < 1e-5 + 1e-6 * std::abs(dot));
  }
}

TEST_CASE("a corrupted reverse rule is caught by the gradient check") {
  model::ModelConfig c;
  c.vars = 3;
  c.steps = 4;
  c.horizon = 2;
  c.embed_dim = 3;
  c.order = 2;
  c.reduced_steps = 2;
  c.ffn_hidden1 = 5;
  c.ffn_hidden2 = 7;
  const model::Model m{c, model::init_params(c, 31), model::Variant::full};
  Rng rng(32);
  data::Window w{random_real({3, 4, 1}, rng), random_real({3, 2, 1}, rng), 0, data::SplitTag::train};
  const auto clean = training::grad_check(m, w);
  CHECK(clean.passed);
  const auto broken = training::grad_check(m, w, training::kGradCheckStep, 1e-4, ad::Fault::linear_weight_grad);
  CHECK_FALSE(broken.passed);
  CHECK(broken.worst_parameter.rfind("ffn.W", 0) == 0);
}
