#pragma once

#include <cstddef>
#include <vector>

#include "qvdw/core.hpp"

namespace qvdw {

//! Neville polynomial extrapolation of samples (h_n, v_n) to h = 0. Intended
//! for values with a power-series error model v(h) = v(0) + c1 h + c2 h^2 + ...
//! sampled on a shrinking ladder of step sizes.
template <typename V>
V extrapolate_to_zero(const std::vector<double>& h, const std::vector<V>& v) {
  if (h.size() != v.size() || v.empty())
    throw UsageError("extrapolation needs matching non-empty sample lists");
  std::vector<V> t = v;
  const std::size_t n = t.size();
  for (std::size_t level = 1; level < n; ++level)
    for (std::size_t i = 0; i + level < n; ++i) {
      const double hi = h[i], hj = h[i + level];
      t[i] = (t[i + 1] * hi - t[i] * hj) / (hi - hj);
    }
  return t[0];
}

}  // namespace qvdw
