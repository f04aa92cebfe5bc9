#pragma once

#include <cmath>

#include "evfgn/random.hpp"
#include "evfgn/tensor.hpp"

namespace testing {

inline evfgn::RealTensor random_real(evfgn::Dims d, evfgn::Rng& rng, double lo = -1.0, double hi = 1.0) {
  evfgn::RealTensor x(d);
  for (double& v : x.values()) v = rng.uniform(lo, hi);
  return x;
}

inline evfgn::ComplexTensor random_complex(evfgn::Dims d, evfgn::Rng& rng) {
  evfgn::ComplexTensor x(d);
  for (auto& v : x.values()) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  return x;
}

}  // namespace testing
