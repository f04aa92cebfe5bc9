#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "evfgn/data.hpp"
#include "evfgn/random.hpp"
#include "helpers.hpp"

using namespace evfgn;
using namespace evfgn::data;

namespace {

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name, const std::string& body)
      : path(std::filesystem::temp_directory_path() / name) {
    std::ofstream(path) << body;
  }
  ~TempFile() { std::filesystem::remove(path); }
};

Series ramp(std::size_t vars, std::size_t length) {
  Series s;
  s.values = RealTensor::matrix(vars, length);
  for (std::size_t n = 0; n < vars; ++n)
    for (std::size_t t = 0; t < length; ++t) s.values(n, t) = static_cast<double>(100 * n + t);
  return s;
}

}  // namespace

TEST_CASE("CSV ingestion: plain, header, timestamps and transpose") {
  const TempFile plain("evfgn_plain.csv", "1,2\n3,4\n5,6\n");
  const Series a = ingest_csv(plain.path);
  CHECK(a.vars() == 2);
  CHECK(a.length() == 3);
  CHECK(a.values(1, 2) == 6.0);

  const TempFile named("evfgn_named.csv", "time,x,y\nt0,1,2\nt1,3,4\n");
  const Series b = ingest_csv(named.path, {.header = true, .timestamp_column = true});
  CHECK(b.names == std::vector<std::string>{"x", "y"});
  CHECK(b.timestamps == std::vector<std::string>{"t0", "t1"});
  CHECK(b.values(0, 1) == 3.0);

  const Series c = ingest_csv(plain.path, {.transpose = true});
  CHECK(c.vars() == 3);
  CHECK(c.length() == 2);
  CHECK(c.values(2, 0) == 5.0);
}

TEST_CASE("CSV ingestion errors name the offending cell") {
  const TempFile bad("evfgn_nan.csv", "1,2\n3,nan\n");
  try {
    ingest_csv(bad.path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
    CHECK(e.col() == 2);
    CHECK(std::string(e.what()).find("nan") != std::string::npos);
  }
  const TempFile word("evfgn_word.csv", "1,abc\n");
  CHECK_THROWS_AS(ingest_csv(word.path), ParseError);

  const TempFile ragged("evfgn_ragged.csv", "1,2\n3\n");
  try {
    ingest_csv(ragged.path);
    FAIL("expected ragged rows");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RaggedRows);
  }
  const TempFile empty("evfgn_empty.csv", "\n");
  CHECK_THROWS_AS(ingest_csv(empty.path), Error);
  CHECK_THROWS_AS(ingest_csv("/nonexistent/evfgn.csv"), Error);
}

TEST_CASE("CSV write and read round-trip") {
  Rng rng(1);
  Series s;
  s.values = testing::random_real({3, 5, 1}, rng);
  s.names = {"a", "b", "c"};
  const auto path = std::filesystem::temp_directory_path() / "evfgn_roundtrip.csv";
  write_csv(path, s);
  const Series back = ingest_csv(path, {.header = true});
  std::filesystem::remove(path);
  CHECK(back.names == s.names);
  CHECK(back.values == s.values);
}

TEST_CASE("min-max normalization") {
  Series s;
  s.values = RealTensor({2, 3, 1}, {0.0, 5.0, 10.0, 4.0, 4.0, 4.0});
  const NormStats st = NormStats::fit(s);
  const Series n = normalize(s, st);
  CHECK(n.values(0, 0) == 0.0);
  CHECK(n.values(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(n.values(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(st.degenerate[0]);
  CHECK(st.degenerate[1]);
  for (std::size_t t = 0; t < 3; ++t) CHECK(n.values(1, t) == 0.0);

  Rng rng(2);
  Series r;
  r.values = testing::random_real({4, 50, 1}, rng, -3.0, 7.0);
  const NormStats rs = NormStats::fit(r);
  const Series back = denormalize(normalize(r, rs), rs);
  for (std::size_t i = 0; i < r.values.size(); ++i) CHECK(std::abs(back.values[i] - r.values[i]) < 1e-9);
}

TEST_CASE("normalization statistics never see validation or test values") {
  const Synthetic syn = gen_synthetic(SyntheticKind::coupled_sinusoids, 3, 300, 3);
  const Dataset clean = prepare(syn.series, {}, 6, 2);
  Series poked = syn.series;
  const Segments seg = split(syn.series, {}, 6, 2);
  for (std::size_t n = 0; n < poked.vars(); ++n)
    for (std::size_t t = seg.val_start; t < poked.length(); ++t) poked.values(n, t) = 1e6 * (t % 3 == 0 ? -1 : 1);
  const Dataset moved = prepare(poked, {}, 6, 2);
  CHECK(clean.stats == moved.stats);
}

TEST_CASE("chronological split lengths and errors") {
  const Segments a = split(ramp(2, 100), {0.7, 0.2, 0.1}, 3, 2);
  CHECK(a.train.length() == 70);
  CHECK(a.val.length() == 20);
  CHECK(a.test.length() == 10);

  const Segments b = split(ramp(2, 10), {0.6, 0.2, 0.2}, 1, 1);
  CHECK(b.train.length() == 6);
  CHECK(b.val.length() == 2);
  CHECK(b.test.length() == 2);

  CHECK_THROWS_AS(split(ramp(2, 10), {0.6, 0.2, 0.2}, 8, 4), Error);
  CHECK_THROWS_AS(split(ramp(2, 100), {0.7, 0.2, 0.2}, 3, 2), Error);

  const Series full = ramp(3, 57);
  const Segments c = split(full, {}, 3, 2);
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t t = 0; t < 57; ++t) {
      const double got = t < c.val_start   ? c.train.values(n, t)
                         : t < c.test_start ? c.val.values(n, t - c.val_start)
                                            : c.test.values(n, t - c.test_start);
      CHECK(got == full.values(n, t));
    }
}

TEST_CASE("window counts and contents") {
  CHECK(make_windows(ramp(2, 10), 3, 2).size() == 6);
  CHECK(make_windows(ramp(2, 5), 3, 2).size() == 1);
  CHECK_THROWS_AS(make_windows(ramp(2, 4), 3, 2), Error);

  for (std::size_t len = 2; len <= 32; ++len)
    for (std::size_t t = 1; t < len; ++t)
      for (std::size_t tau = 1; t + tau <= len; ++tau) CHECK(make_windows(ramp(1, len), t, tau).size() == len - t - tau + 1);

  const Series s = ramp(2, 12);
  const WindowSet ws = make_windows(s, 4, 3, SplitTag::val, 100);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const Window& w = ws[i];
    const std::size_t first_target = w.origin - 100;
    CHECK(w.split == SplitTag::val);
    if (i > 0) CHECK(w.origin == ws[i - 1].origin + 1);
    for (std::size_t n = 0; n < 2; ++n) {
      for (std::size_t k = 0; k < 4; ++k) CHECK(w.input(n, k, 0) == s.values(n, first_target - 4 + k));
      for (std::size_t k = 0; k < 3; ++k) CHECK(w.target(n, k) == s.values(n, first_target + k));
    }
  }
}

TEST_CASE("synthetic generators: determinism, independence and VAR(1) recovery") {
  const Synthetic a = gen_synthetic(SyntheticKind::coupled_sinusoids, 4, 256, 9);
  const Synthetic b = gen_synthetic(SyntheticKind::coupled_sinusoids, 4, 256, 9);
  CHECK(a.series.values == b.series.values);
  CHECK(a.coupling == b.coupling);
  CHECK(a.series.names.size() == 4);

  const Synthetic solo = gen_synthetic(SyntheticKind::coupled_sinusoids, 4, 256, 9, 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(solo.coupling(i, j) == (i == j ? 1.0 : 0.0));

  const std::size_t n = 6;
  const std::size_t len = 4096;
  const Synthetic var = gen_synthetic(SyntheticKind::var1, n, len, 7);
  Eigen::MatrixXd a_true(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a_true(i, j) = var.coupling(i, j);
  CHECK(a_true.eigenvalues().cwiseAbs().maxCoeff() == doctest::Approx(0.9).epsilon(1e-9));

  // Least-squares lag-1 regression: A = (sum x_t x_{t-1}^T)(sum x_{t-1} x_{t-1}^T)^{-1}.
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd auto_cov = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t t = 1; t < len; ++t) {
    Eigen::VectorXd now(n), prev(n);
    for (std::size_t i = 0; i < n; ++i) {
      now(i) = var.series.values(i, t);
      prev(i) = var.series.values(i, t - 1);
    }
    cross += now * prev.transpose();
    auto_cov += prev * prev.transpose();
  }
  const Eigen::MatrixXd a_hat = cross * auto_cov.inverse();
  CHECK((a_hat - a_true).norm() / a_true.norm() < 0.2);

  CHECK_THROWS_AS(gen_synthetic(SyntheticKind::var1, 1, 256, 1), Error);
  CHECK_THROWS_AS(gen_synthetic(SyntheticKind::var1, 4, 32, 1), Error);
  CHECK(parse_synthetic_kind("var1") == SyntheticKind::var1);
  CHECK_THROWS_AS(parse_synthetic_kind("sawtooth"), Error);
}
