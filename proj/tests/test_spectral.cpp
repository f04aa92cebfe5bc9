#include <doctest.h>

#include <numbers>

#include "evfgn/oracle.hpp"
#include "evfgn/spectral.hpp"
#include "helpers.hpp"

using namespace evfgn;
using testing::random_complex;
using testing::random_real;

TEST_CASE("1D transform matches the direct sum for every length up to 33") {
  Rng rng(11);
  for (std::size_t n = 1; n <= 33; ++n) {
    std::vector<cdouble> x(n);
    for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const spectral::FftPlan plan(n);
    for (bool inverse : {false, true}) {
      std::vector<cdouble> fast = x;
      plan.transform(fast, inverse);
      std::vector<cdouble> ref = oracle::naive_dft(x, inverse);
      if (inverse)
        for (auto& v : ref) v *= static_cast<double>(n);  // plan leaves the 1/n to the caller
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(fast[i] - ref[i]));
      CHECK_MESSAGE(worst < 1e-12, "n = " << n);
    }
  }
}

TEST_CASE("impulse and constant transform pairs") {
  ComplexTensor delta(4, 8, 1);
  delta(0, 0, 0) = 1.0;
  const ComplexTensor impulse = spectral::dft2(delta);
  for (const cdouble& v : impulse.values()) CHECK(std::abs(v - cdouble(1.0)) < 1e-15);

  ComplexTensor ones(4, 8, 1);
  for (auto& v : ones.values()) v = 1.0;
  const ComplexTensor s = spectral::dft2(ones);
  CHECK(std::abs(s(0, 0, 0) - cdouble(32.0)) < 1e-12);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(std::abs(s[i]) < 1e-12);
}

TEST_CASE("2D transform matches the naive DFT, round-trips and obeys Parseval") {
  Rng rng(12);
  for (Dims d : {Dims{1, 1, 1}, Dims{3, 5, 2}, Dims{8, 12, 3}, Dims{16, 16, 8}, Dims{6, 4, 5}}) {
    const ComplexTensor x = random_complex(d, rng);
    const ComplexTensor s = spectral::dft2(x);
    CHECK(max_abs_diff(s, oracle::naive_dft2(x)) < 1e-9);
    CHECK(max_abs_diff(spectral::idft2(s), x) < 1e-12);
    double et = 0.0, ef = 0.0;
    for (auto v : x.values()) et += std::norm(v);
    for (auto v : s.values()) ef += std::norm(v);
    CHECK(std::abs(ef / static_cast<double>(d.vars * d.steps) - et) < 1e-10 * std::max(1.0, et));
  }
}

TEST_CASE("transform of a real tensor is Hermitian symmetric") {
  Rng rng(13);
  const RealTensor x = random_real({6, 10, 3}, rng);
  const ComplexTensor s = spectral::dft2(x);
  for (std::size_t p = 0; p < 6; ++p)
    for (std::size_t q = 0; q < 10; ++q)
      for (std::size_t c = 0; c < 3; ++c)
        CHECK(std::abs(s(p, q, c) - std::conj(s((6 - p) % 6, (10 - q) % 10, c))) < 1e-12);
  const auto rp = spectral::real_part(spectral::idft2(s));
  CHECK(max_abs_diff(rp.values, x) < 1e-12);
  CHECK(rp.residual_imag < 1e-12);
}

TEST_CASE("transform is linear") {
  Rng rng(14);
  const ComplexTensor a = random_complex({5, 6, 2}, rng);
  const ComplexTensor b = random_complex({5, 6, 2}, rng);
  const cdouble alpha{0.3, -1.2};
  ComplexTensor mix(a.dims());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * a[i] + b[i];
  const ComplexTensor sa = spectral::dft2(a), sb = spectral::dft2(b), sm = spectral::dft2(mix);
  double worst = 0.0;
  for (std::size_t i = 0; i < sm.size(); ++i) worst = std::max(worst, std::abs(sm[i] - (alpha * sa[i] + sb[i])));
  CHECK(worst < 1e-12);
}

TEST_CASE("zero extents are rejected") {
  CHECK_THROWS_AS(spectral::dft2(ComplexTensor(0, 4, 1)), Error);
  CHECK_THROWS_AS(spectral::idft2(ComplexTensor(4, 0, 1)), Error);
  CHECK_THROWS_AS(spectral::FftPlan(0), Error);
}

TEST_CASE("channel_matmul is a per-bin matrix product") {
  Rng rng(15);
  const ComplexTensor s = random_complex({3, 4, 5}, rng);
  const ComplexTensor m = random_complex({5, 2, 1}, rng);
  const ComplexTensor y = spectral::channel_matmul(s, m);
  REQUIRE(y.dims() == Dims{3, 4, 2});
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t b = 0; b < 2; ++b) {
        cdouble acc{};
        for (std::size_t a = 0; a < 5; ++a) acc += s(n, t, a) * m(a, b);
        CHECK(std::abs(y(n, t, b) - acc) < 1e-13);
      }
  CHECK_THROWS_AS(spectral::channel_matmul(s, random_complex({4, 2, 1}, rng)), Error);
}

TEST_CASE("parallel and serial kernels agree bit for bit") {
  Rng rng(16);
  const ComplexTensor x = random_complex({16, 12, 8}, rng);
  const ComplexTensor m = random_complex({8, 8, 1}, rng);
  CHECK(spectral::dft2(x, Exec::parallel) == spectral::dft2(x, Exec::serial));
  CHECK(spectral::idft2(x, Exec::parallel) == spectral::idft2(x, Exec::serial));
  CHECK(spectral::channel_matmul(x, m, Exec::parallel) == spectral::channel_matmul(x, m, Exec::serial));
}
