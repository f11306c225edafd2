#pragma once

#include <cmath>
#include <random>

#include "noisyslp/rng.hpp"
#include "noisyslp/types.hpp"

namespace nslp::test {

inline Vector uniform_vector(Philox& rng, Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline Matrix uniform_matrix(Philox& rng, Index r, Index c, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = u(rng);
  return m;
}

// Central differences of a vector-valued function.
template <class F>
Matrix fd_jacobian(const F& f, const Vector& x, double h = 1e-6) {
  const Vector f0 = f(x);
  Matrix j(f0.size(), x.size());
  for (Index k = 0; k < x.size(); ++k) {
    Vector xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    j.col(k) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return j;
}

}  // namespace nslp::test
