#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evfgn/autodiff.hpp"

// Self-check suites that compare the fast kernels against the brute-force
// references in oracle.hpp.
namespace evfgn::verify {

struct SuiteResult {
  std::string name;
  double worst_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Report {
  std::vector<SuiteResult> suites;
  bool passed() const;
  std::string text() const;
};

/// DFT round-trip, Parseval and FFT-vs-naive on tensors up to 16 x 16 x 8.
SuiteResult dft_suite(std::uint64_t seed, double tolerance = 1e-9);

/// DFT(x (*) h) = DFT(x) DFT(h) for random pairs with lengths in [4, 32].
SuiteResult convolution_suite(std::uint64_t seed, std::size_t pairs = 100, double tolerance = 1e-9);

/// K-order edge-varying identity over (n, d, K) in {4,8,16} x {1,2,4} x {0..3}.
SuiteResult equivalence_suite(std::uint64_t seed, std::size_t trials = 20, double tolerance = 1e-6);

/// Spectral FGSO stack (identity activation) vs. explicit supra-graph summation.
SuiteResult supra_graph_suite(std::uint64_t seed, double tolerance = 1e-9);

/// Finite-difference gradient check on (N=3, T=4, tau=2, d=3, K=2, l=2, 5, 7).
SuiteResult gradient_suite(std::uint64_t seed, double tolerance = 1e-4, ad::Fault fault = ad::Fault::none);

Report run_all(std::uint64_t seed = 42, ad::Fault fault = ad::Fault::none);

}  // namespace evfgn::verify
