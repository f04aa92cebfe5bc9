#include "evfgn/verify.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "evfgn/model.hpp"
#include "evfgn/oracle.hpp"
#include "evfgn/random.hpp"
#include "evfgn/spectral.hpp"
#include "evfgn/training.hpp"

namespace evfgn::verify {

namespace {

template <typename F>
SuiteResult timed(const std::string& name, double tolerance, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  SuiteResult r{name, 0.0, tolerance, false, {}, 0.0};
  body(r);
  r.passed = r.passed || (r.detail.empty() && r.worst_error < tolerance);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

ComplexTensor random_complex(Dims d, Rng& rng) {
  ComplexTensor x(d);
  for (cdouble& v : x.values()) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  return x;
}

double max_abs_diff(std::span<const cdouble> a, std::span<const cdouble> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

bool Report::passed() const {
  for (const auto& s : suites)
    if (!s.passed) return false;
  return !suites.empty();
}

std::string Report::text() const {
  std::ostringstream out;
  for (const auto& s : suites) {
    out << (s.passed ? "PASS " : "FAIL ") << s.name << ": worst error " << s.worst_error << " (tolerance "
        << s.tolerance << ", " << s.seconds << " s)";
    if (!s.detail.empty()) out << " " << s.detail;
    out << '\n';
  }
  out << (passed() ? "all suites passed" : "verification FAILED") << '\n';
  return out.str();
}

SuiteResult dft_suite(std::uint64_t seed, double tolerance) {
  return timed("dft", tolerance, [&](SuiteResult& r) {
    Rng rng(derive_seed(seed, SeedStream::oracle));
    const Dims shapes[] = {{1, 1, 1}, {2, 3, 1}, {4, 4, 2}, {5, 7, 3}, {8, 12, 4}, {16, 16, 8}, {12, 16, 8}};
    double round_trip = 0.0, parseval = 0.0, naive = 0.0;
    for (const Dims& d : shapes) {
      const ComplexTensor x = random_complex(d, rng);
      const ComplexTensor s = spectral::dft2(x);
      round_trip = std::max(round_trip, max_abs_diff(spectral::idft2(s), x));
      double energy_time = 0.0, energy_freq = 0.0;
      for (const cdouble& v : x.values()) energy_time += std::norm(v);
      for (const cdouble& v : s.values()) energy_freq += std::norm(v);
      const double nt = static_cast<double>(d.vars * d.steps);
      parseval = std::max(parseval, std::abs(energy_freq / nt - energy_time) / std::max(1.0, energy_time));
      naive = std::max(naive, max_abs_diff(s, oracle::naive_dft2(x)));
    }
    r.worst_error = std::max({round_trip, parseval, naive});
    std::ostringstream detail;
    detail << "round-trip " << round_trip << ", Parseval " << parseval << ", FFT vs naive " << naive;
    r.passed = r.worst_error < tolerance;
    r.detail = detail.str();
  });
}

SuiteResult convolution_suite(std::uint64_t seed, std::size_t pairs, double tolerance) {
  return timed("convolution", tolerance, [&](SuiteResult& r) {
    Rng rng(derive_seed(seed, SeedStream::oracle) ^ 0x2);
    std::vector<cdouble> scratch;
    for (std::size_t p = 0; p < pairs; ++p) {
      const std::size_t n = 4 + static_cast<std::size_t>(rng.below(29));
      std::vector<cdouble> x(n), h(n);
      for (auto& v : x) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      for (auto& v : h) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      const spectral::FftPlan plan(n);
      std::vector<cdouble> conv = oracle::circular_convolve(std::span<const cdouble>(x), std::span<const cdouble>(h));
      std::vector<cdouble> fx = x, fh = h;
      plan.transform(conv, false, scratch);
      plan.transform(fx, false, scratch);
      plan.transform(fh, false, scratch);
      std::vector<cdouble> product(n);
      for (std::size_t i = 0; i < n; ++i) product[i] = fx[i] * fh[i];
      r.worst_error = std::max(r.worst_error, max_abs_diff(conv, product));
    }
    r.passed = r.worst_error < tolerance;
    r.detail = std::to_string(pairs) + " pairs";
  });
}

SuiteResult equivalence_suite(std::uint64_t seed, std::size_t trials, double tolerance) {
  return timed("edge-varying equivalence", tolerance, [&](SuiteResult& r) {
    std::size_t cases = 0;
    std::uint64_t case_seed = derive_seed(seed, SeedStream::oracle);
    for (std::size_t n : {4, 8, 16})
      for (std::size_t d : {1, 2, 4})
        for (std::size_t k = 0; k <= 3; ++k) {
          case_seed = splitmix64(case_seed);
          const oracle::EquivalenceReport rep = oracle::edge_varying_equivalence_suite(n, d, k, trials, case_seed);
          r.worst_error = std::max(r.worst_error, rep.max_error);
          ++cases;
        }
    r.passed = r.worst_error < tolerance;
    r.detail = std::to_string(cases) + " (n, d, K) cases x " + std::to_string(trials) + " trials";
  });
}

SuiteResult supra_graph_suite(std::uint64_t seed, double tolerance) {
  return timed("supra-graph", tolerance, [&](SuiteResult& r) {
    Rng rng(derive_seed(seed, SeedStream::oracle) ^ 0x4);
    const Dims d{3, 4, 2};
    const ComplexTensor x = random_complex(d, rng);
    std::vector<model::FgsoLayerParams> layers;
    std::vector<ComplexTensor> weights, biases;
    for (int k = 0; k < 3; ++k) {
      layers.push_back({random_complex({d.channels, d.channels, 1}, rng), random_complex({d.channels, 1, 1}, rng)});
      weights.push_back(layers.back().weight);
      biases.push_back(layers.back().bias);
    }
    const ComplexTensor spectral_path = spectral::idft2(
        model::evfgn_forward(spectral::dft2(x), layers, model::Activation::identity));
    const ComplexTensor supra = oracle::supra_graph_filter(x, weights, biases);
    r.worst_error = max_abs_diff(spectral_path, supra);
    r.passed = r.worst_error < tolerance;
  });
}

SuiteResult gradient_suite(std::uint64_t seed, double tolerance, ad::Fault fault) {
  return timed("gradient", tolerance, [&](SuiteResult& r) {
    const model::ModelConfig cfg{3, 4, 2, 3, 2, 2, 5, 7, 0.01};
    const model::Model m{cfg, model::init_params(cfg, derive_seed(seed, SeedStream::init)), model::Variant::full};
    Rng rng(derive_seed(seed, SeedStream::input));
    data::Window w{RealTensor(cfg.vars, cfg.steps, 1), RealTensor::matrix(cfg.vars, cfg.horizon), 0,
                   data::SplitTag::train};
    for (double& v : w.input.values()) v = rng.uniform();
    for (double& v : w.target.values()) v = rng.uniform();
    const training::GradCheckReport rep = training::grad_check(m, w, training::kGradCheckStep, tolerance, fault);
    r.worst_error = rep.worst_relative_error;
    r.passed = rep.passed;
    r.detail = "at " + rep.worst_parameter + ", " + std::to_string(rep.checked) + " checked, " +
               std::to_string(rep.excluded) + " excluded near kinks";
  });
}

Report run_all(std::uint64_t seed, ad::Fault fault) {
  Report r;
  r.suites.push_back(dft_suite(seed));
  r.suites.push_back(convolution_suite(seed));
  r.suites.push_back(equivalence_suite(seed));
  r.suites.push_back(supra_graph_suite(seed));
  r.suites.push_back(gradient_suite(seed, 1e-4, fault));
  return r;
}

}  // namespace evfgn::verify
