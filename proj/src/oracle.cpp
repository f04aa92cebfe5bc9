#include "evfgn/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "evfgn/random.hpp"
#include "evfgn/spectral.hpp"

namespace evfgn::oracle {

namespace {

cdouble unit_root(double sign, std::size_t k, std::size_t n) {
  const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k % n) / static_cast<double>(n);
  return {std::cos(angle), std::sin(angle)};
}

std::size_t wrap(std::size_t i, std::size_t j, std::size_t n) { return (i + n - j) % n; }

void check_matrix(const RealTensor& m, std::size_t rows, std::size_t cols, const char* what) {
  require(m.dims() == Dims{rows, cols, 1}, ErrorKind::InvalidShape,
          std::string(what) + ": expected " + Dims{rows, cols, 1}.str() + ", got " + m.dims().str());
}

RealTensor matmul(const RealTensor& a, const RealTensor& b) {
  require(a.cols() == b.rows(), ErrorKind::InvalidShape, "matmul: inner dimensions differ");
  RealTensor out = RealTensor::matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a(i, k) * b(k, j);
  return out;
}

// (n, d) matrix viewed as an (n, 1, d) tensor for the node-axis transform.
RealTensor as_node_signal(const RealTensor& x) { return x.reshaped(Dims{x.rows(), 1, x.cols()}); }

}  // namespace

std::vector<cdouble> naive_dft(std::span<const cdouble> x, bool inverse) {
  const std::size_t n = x.size();
  std::vector<cdouble> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    cdouble acc{};
    for (std::size_t j = 0; j < n; ++j) acc += x[j] * unit_root(sign, j * k, n);
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

ComplexTensor naive_dft2(const ComplexTensor& x) {
  const Dims d = x.dims();
  ComplexTensor out(d);
  for (std::size_t c = 0; c < d.channels; ++c)
    for (std::size_t p = 0; p < d.vars; ++p)
      for (std::size_t q = 0; q < d.steps; ++q) {
        cdouble acc{};
        for (std::size_t n = 0; n < d.vars; ++n)
          for (std::size_t t = 0; t < d.steps; ++t) {
            const double angle = -2.0 * std::numbers::pi *
                                 (static_cast<double>((p * n) % d.vars) / static_cast<double>(d.vars) +
                                  static_cast<double>((q * t) % d.steps) / static_cast<double>(d.steps));
            acc += x(n, t, c) * cdouble(std::cos(angle), std::sin(angle));
          }
        out(p, q, c) = acc;
      }
  return out;
}

template <typename T>
static std::vector<T> convolve_impl(std::span<const T> x, std::span<const T> h) {
  require(x.size() == h.size(), ErrorKind::InvalidShape,
          "circular_convolve: lengths " + std::to_string(x.size()) + " and " + std::to_string(h.size()));
  const std::size_t n = x.size();
  std::vector<T> out(n, T{});
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t j = 0; j < n; ++j) out[m] += h[j] * x[wrap(m, j, n)];
  return out;
}

std::vector<double> circular_convolve(std::span<const double> x, std::span<const double> h) {
  return convolve_impl(x, h);
}

std::vector<cdouble> circular_convolve(std::span<const cdouble> x, std::span<const cdouble> h) {
  return convolve_impl(x, h);
}

Gso Gso::identity(std::size_t n) {
  Gso s{RealTensor::matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) s.matrix(i, i) = 1.0;
  return s;
}

Gso Gso::all_ones(std::size_t n) {
  Gso s{RealTensor::matrix(n, n)};
  for (double& v : s.matrix.values()) v = 1.0;
  return s;
}

Gso Gso::circulant(std::span<const double> taps) {
  const std::size_t n = taps.size();
  Gso s{RealTensor::matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s.matrix(i, j) = taps[wrap(i, j, n)];
  return s;
}

CirculantKernel CirculantKernel::from_scalar(std::span<const double> scalar, const RealTensor& weight) {
  require(weight.dims().channels == 1 && weight.rows() == weight.cols(), ErrorKind::InvalidShape,
          "CirculantKernel: weight must be square");
  CirculantKernel k;
  for (double s : scalar) {
    RealTensor tap = weight;
    for (double& v : tap.values()) v *= s;
    k.taps.push_back(std::move(tap));
  }
  return k;
}

CirculantKernel CirculantKernel::random(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  CirculantKernel k;
  for (std::size_t m = 0; m < n; ++m) {
    RealTensor tap = RealTensor::matrix(d, d);
    for (double& v : tap.values()) v = rng.uniform(-1.0, 1.0);
    k.taps.push_back(std::move(tap));
  }
  return k;
}

RealTensor gso_convolution(const RealTensor& x, const Gso& s, const RealTensor& w) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  check_matrix(x, n, d, "gso_convolution X");
  check_matrix(s.matrix, n, n, "gso_convolution S");
  check_matrix(w, d, d, "gso_convolution W");
  return matmul(matmul(s.matrix, x), w);
}

RealTensor kernel_summation(const RealTensor& x, const Gso& s, const RealTensor& w) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  check_matrix(x, n, d, "kernel_summation X");
  check_matrix(s.matrix, n, n, "kernel_summation S");
  check_matrix(w, d, d, "kernel_summation W");
  RealTensor out = RealTensor::matrix(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) out(i, b) += x(j, a) * s.matrix(i, j) * w(a, b);
  return out;
}

RealTensor circulant_apply(const RealTensor& x, const CirculantKernel& kernel) {
  const std::size_t n = kernel.nodes();
  const std::size_t d = kernel.channels();
  check_matrix(x, n, d, "circulant_apply X");
  RealTensor out = RealTensor::matrix(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const RealTensor& tap = kernel.taps[wrap(i, j, n)];
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) out(i, b) += x(j, a) * tap(a, b);
    }
  return out;
}

ComplexTensor fourier_kernel(const CirculantKernel& kernel) {
  const std::size_t n = kernel.nodes();
  const std::size_t d = kernel.channels();
  RealTensor stacked(n, 1, d * d);
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t e = 0; e < d * d; ++e) stacked(m, 0, e) = kernel.taps[m][e];
  return spectral::dft2(stacked).reshaped(Dims{n, d, d});
}

namespace {

// Multiplies every frequency row of `spectrum` (n, 1, d) by fgso[p] (n, d, d).
ComplexTensor apply_fgso(const ComplexTensor& spectrum, const ComplexTensor& fgso) {
  const std::size_t n = spectrum.dims().vars;
  const std::size_t d = spectrum.dims().channels;
  ComplexTensor out(spectrum.dims());
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t a = 0; a < d; ++a) {
      const cdouble xa = spectrum(p, 0, a);
      for (std::size_t b = 0; b < d; ++b) out(p, 0, b) += xa * fgso(p, a, b);
    }
  return out;
}

RealTensor back_to_nodes(const ComplexTensor& spectrum, std::size_t n, std::size_t d) {
  return spectral::real_part(spectral::idft2(spectrum, Exec::serial)).values.reshaped(Dims{n, d, 1});
}

}  // namespace

double circulant_gso_fourier_check(const RealTensor& x, const CirculantKernel& kernel) {
  const std::size_t n = kernel.nodes();
  const std::size_t d = kernel.channels();
  const RealTensor time_domain = circulant_apply(x, kernel);
  const ComplexTensor spectrum = spectral::dft2(as_node_signal(x));
  const RealTensor fourier = back_to_nodes(apply_fgso(spectrum, fourier_kernel(kernel)), n, d);
  return max_abs_diff(time_domain, fourier);
}

RealTensor edge_varying_filter(const RealTensor& x, std::span<const Gso> gsos) {
  RealTensor total = x;
  RealTensor term = x;
  for (const Gso& s : gsos) {
    check_matrix(s.matrix, x.rows(), x.rows(), "edge_varying_filter GSO");
    term = matmul(s.matrix, term);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += term[i];
  }
  return total;
}

RealTensor edge_varying_filter(const RealTensor& x, std::span<const CirculantKernel> kernels) {
  RealTensor total = x;
  RealTensor term = x;
  for (const CirculantKernel& k : kernels) {
    term = circulant_apply(term, k);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += term[i];
  }
  return total;
}

RealTensor fourier_edge_varying_filter(const RealTensor& x, std::span<const CirculantKernel> kernels) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const ComplexTensor spectrum = spectral::dft2(as_node_signal(x));
  ComplexTensor total = spectrum;
  ComplexTensor term = spectrum;  // F(X) S_{0:k}
  for (const CirculantKernel& k : kernels) {
    require(k.nodes() == n && k.channels() == d, ErrorKind::InvalidShape,
            "fourier_edge_varying_filter: kernel shape mismatch");
    term = apply_fgso(term, fourier_kernel(k));
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += term[i];
  }
  return back_to_nodes(total, n, d);
}

EquivalenceReport edge_varying_equivalence_suite(std::size_t n, std::size_t d, std::size_t order,
                                          std::size_t trials, std::uint64_t seed) {
  require(trials >= 1, ErrorKind::InvalidShape, "edge_varying_equivalence_suite: trials must be >= 1");
  EquivalenceReport report{n, d, order, trials, 0.0, false};
  Rng rng(seed);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    RealTensor x = RealTensor::matrix(n, d);
    for (double& v : x.values()) v = rng.uniform(-1.0, 1.0);
    std::vector<CirculantKernel> kernels;
    for (std::size_t k = 0; k < order; ++k) kernels.push_back(CirculantKernel::random(n, d, rng.next()));
    const RealTensor time_domain = edge_varying_filter(x, std::span<const CirculantKernel>(kernels));
    const RealTensor fourier = fourier_edge_varying_filter(x, kernels);
    report.max_error = std::max(report.max_error, max_abs_diff(time_domain, fourier));
  }
  report.passed = report.max_error < kEquivalenceTolerance;
  return report;
}

ComplexTensor supra_graph_filter(const ComplexTensor& x, std::span<const ComplexTensor> weights,
                                 std::span<const ComplexTensor> biases) {
  require(weights.size() == biases.size(), ErrorKind::InvalidShape, "supra_graph_filter: weights/biases");
  const Dims dims = x.dims();
  const std::size_t nodes = dims.vars * dims.steps;
  const std::size_t d = dims.channels;
  ComplexTensor total = x;
  ComplexTensor term = x;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    require(weights[k].dims() == Dims{d, d, 1}, ErrorKind::InvalidShape, "supra_graph_filter: weight shape");
    require(biases[k].size() == d, ErrorKind::InvalidShape, "supra_graph_filter: bias shape");
    ComplexTensor next(dims);
    for (std::size_t i = 0; i < nodes; ++i) {
      const std::size_t in = i / dims.steps;
      const std::size_t it = i % dims.steps;
      for (std::size_t j = 0; j < nodes; ++j) {
        const std::size_t jn = j / dims.steps;
        const std::size_t jt = j % dims.steps;
        // Lag on the torus; only the zero lag carries weight.
        const bool zero_lag = wrap(in, jn, dims.vars) == 0 && wrap(it, jt, dims.steps) == 0;
        if (!zero_lag) continue;
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t b = 0; b < d; ++b) next(in, it, b) += term(jn, jt, a) * weights[k](a, b);
      }
    }
    for (std::size_t b = 0; b < d; ++b) next(0, 0, b) += biases[k][b];
    term = std::move(next);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += term[i];
  }
  return total;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::InvalidShape, "loglog_slope: need >= 2 points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

namespace {

// Buffers are allocated once per case so the timed calls measure arithmetic,
// not page faults from large fresh allocations.
struct BenchCase {
  BenchCase(std::size_t n, std::size_t d)
      : x(RealTensor::matrix(n, d)),
        plan(n),
        dense_total(x),
        dense_term(x),
        dense_shifted(x),
        fourier_out(x),
        total(n * d),
        term(n * d),
        next(n * d) {}

  std::vector<RealTensor> gsos;                   // dense n x n
  std::vector<RealTensor> weights;                // d x d
  std::vector<std::vector<cdouble>> tap_spectra;  // DFT of each tap vector
  RealTensor x;
  spectral::FftPlan plan;

  mutable RealTensor dense_total, dense_term, dense_shifted, fourier_out;
  mutable std::vector<cdouble> total, term, next, scratch;
};

BenchCase make_bench_case(std::size_t n, std::size_t d, std::size_t order, Rng& rng) {
  BenchCase bc(n, d);
  const double tap_scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double w_scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& v : bc.x.values()) v = rng.uniform(-1.0, 1.0);
  for (std::size_t k = 0; k < order; ++k) {
    std::vector<double> taps(n);
    for (double& t : taps) t = tap_scale * rng.uniform(-1.0, 1.0);
    RealTensor w = RealTensor::matrix(d, d);
    for (double& v : w.values()) v = w_scale * rng.uniform(-1.0, 1.0);
    bc.gsos.push_back(Gso::circulant(taps).matrix);
    // FGSO of a scalar circulant times W is spectrum(p) * W, so one value per bin suffices.
    std::vector<cdouble> complex_taps(taps.begin(), taps.end());
    bc.tap_spectra.push_back(naive_dft(complex_taps));
    bc.weights.push_back(std::move(w));
  }
  return bc;
}

// Y_k = S_k Y_{k-1} W_k, summed: O(K n^2 d + K n d^2).
const RealTensor& dense_path(const BenchCase& bc) {
  const std::size_t n = bc.x.rows();
  const std::size_t d = bc.x.cols();
  RealTensor& total = bc.dense_total;
  RealTensor& term = bc.dense_term;
  RealTensor& shifted = bc.dense_shifted;
  std::copy(bc.x.values().begin(), bc.x.values().end(), total.values().begin());
  std::copy(bc.x.values().begin(), bc.x.values().end(), term.values().begin());
  for (std::size_t k = 0; k < bc.gsos.size(); ++k) {
    const RealTensor& s = bc.gsos[k];
    std::fill(shifted.values().begin(), shifted.values().end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double* dst = shifted.data() + i * d;
      const double* srow = s.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double sij = srow[j];
        const double* src = term.data() + j * d;
        for (std::size_t a = 0; a < d; ++a) dst[a] += sij * src[a];
      }
    }
    const RealTensor& w = bc.weights[k];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t b = 0; b < d; ++b) {
        double acc = 0.0;
        for (std::size_t a = 0; a < d; ++a) acc += shifted(i, a) * w(a, b);
        term(i, b) = acc;
      }
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += term[i];
  }
  return total;
}

// One transform pair, K per-frequency d x d products: O(n d log n + K n d^2).
const RealTensor& fourier_path(const BenchCase& bc) {
  const std::size_t n = bc.x.rows();
  const std::size_t d = bc.x.cols();
  std::vector<cdouble>& total = bc.total;
  std::vector<cdouble>& term = bc.term;
  std::vector<cdouble>& next = bc.next;
  for (std::size_t i = 0; i < total.size(); ++i) total[i] = bc.x[i];
  bc.plan.transform_lanes(total.data(), d, d, false, bc.scratch);
  std::copy(total.begin(), total.end(), term.begin());
  for (std::size_t k = 0; k < bc.weights.size(); ++k) {
    const double* w = bc.weights[k].data();
    const std::vector<cdouble>& h = bc.tap_spectra[k];
    for (std::size_t p = 0; p < n; ++p) {
      const cdouble* row = term.data() + p * d;
      cdouble* dst = next.data() + p * d;
      for (std::size_t b = 0; b < d; ++b) dst[b] = 0.0;
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) dst[b] += row[a] * w[a * d + b];
      for (std::size_t b = 0; b < d; ++b) dst[b] *= h[p];
    }
    std::swap(term, next);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += term[i];
  }
  bc.plan.transform_lanes(total.data(), d, d, true, bc.scratch);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < total.size(); ++i) bc.fourier_out[i] = total[i].real() * scale;
  return bc.fourier_out;
}

template <typename F>
double median_seconds(F&& f, std::size_t repetitions, double& checksum) {
  f();  // warm-up, discarded
  std::vector<double> times;
  for (std::size_t r = 0; r < repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    const RealTensor& out = f();
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(stop - start).count());
    checksum = 0.0;
    for (double v : out.values()) checksum += v;
  }
  std::sort(times.begin(), times.end());
  const std::size_t m = times.size() / 2;
  return times.size() % 2 == 1 ? times[m] : 0.5 * (times[m - 1] + times[m]);
}

}  // namespace

BenchResult complexity_bench(std::span<const std::size_t> sizes, std::size_t d, std::size_t order,
                             std::size_t repetitions, std::uint64_t seed) {
  require(!sizes.empty() && repetitions >= 1, ErrorKind::InvalidShape, "complexity_bench: empty plan");
  require(std::is_sorted(sizes.begin(), sizes.end()), ErrorKind::InvalidShape,
          "complexity_bench: sizes must be ascending");
  Rng rng(seed);
  std::vector<BenchCase> cases;
  BenchResult result;
  for (std::size_t n : sizes) {
    cases.push_back(make_bench_case(n, d, order, rng));
    const double err = max_abs_diff(dense_path(cases.back()), fourier_path(cases.back()));
    result.gate_error = std::max(result.gate_error, err);
  }
  require(result.gate_error < kEquivalenceTolerance, ErrorKind::InvalidShape,
          "complexity_bench: paths disagree by " + std::to_string(result.gate_error) + " before timing");

  std::vector<double> ns;
  std::vector<double> dense_t;
  std::vector<double> fourier_t;
  for (const BenchCase& bc : cases) {
    const std::size_t n = bc.x.rows();
    double dense_sum = 0.0;
    double fourier_sum = 0.0;
    const double td = median_seconds([&]() -> const RealTensor& { return dense_path(bc); }, repetitions, dense_sum);
    const double tf = median_seconds([&]() -> const RealTensor& { return fourier_path(bc); }, repetitions, fourier_sum);
    result.rows.push_back({n, d, order, "dense", td, dense_sum});
    result.rows.push_back({n, d, order, "fourier", tf, fourier_sum});
    ns.push_back(static_cast<double>(n));
    dense_t.push_back(td);
    fourier_t.push_back(tf);
  }
  if (ns.size() >= 2) {
    result.dense_slope = loglog_slope(ns, dense_t);
    result.fourier_slope = loglog_slope(ns, fourier_t);
  }
  return result;
}

std::string bench_csv(const BenchResult& result) {
  std::ostringstream os;
  os.precision(17);
  os << "n,d,K,path,median_seconds,checksum\n";
  for (const BenchRow& r : result.rows)
    os << r.n << ',' << r.d << ',' << r.order << ',' << r.path << ',' << r.median_seconds << ',' << r.checksum
       << '\n';
  return os.str();
}

}  // namespace evfgn::oracle
