#pragma once

#include <random>

#include "birk/numcore.hpp"

namespace testsupport {

using birk::CMatrix;
using birk::cplx;

inline std::mt19937_64& rng() {
  static std::mt19937_64 g(20240917ULL);
  return g;
}

inline cplx random_complex(std::mt19937_64& g) {
  std::normal_distribution<double> d;
  return {d(g), d(g)};
}

inline CMatrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& g = rng()) {
  CMatrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = random_complex(g);
  return m;
}

// Laplace expansion along the first row; exponential cost, used only as an oracle.
inline cplx laplace_det(const CMatrix& m) {
  const Eigen::Index n = m.rows();
  if (n == 1) return m(0, 0);
  cplx acc = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    CMatrix sub(n - 1, n - 1);
    for (Eigen::Index i = 1; i < n; ++i)
      for (Eigen::Index k = 0, c = 0; k < n; ++k)
        if (k != j) sub(i - 1, c++) = m(i, k);
    acc += ((j % 2 == 0) ? 1.0 : -1.0) * m(0, j) * laplace_det(sub);
  }
  return acc;
}

inline double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace testsupport
