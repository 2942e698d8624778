#pragma once

// Dense complex linear algebra for the small matrices (n <= ~8) that occur here.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "birk/errors.hpp"

namespace birk {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr cplx I_unit{0.0, 1.0};

struct Tolerance {
  double rel = 1e-10;
  double abs = 0.0;

  Tolerance() = default;
  Tolerance(double r, double a = 0.0) : rel(r), abs(a) {
    if (!(r >= 0.0) || !(a >= 0.0)) throw DomainError("tolerance components must be nonnegative");
    if (r == 0.0 && a == 0.0) throw DomainError("tolerance must not be identically zero");
  }
  double threshold(double scale) const { return rel * scale + abs; }
};

inline void require_square(const CMatrix& m, const char* op) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw DimensionError(std::string(op) + ": expected a nonempty square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline bool all_finite(const CMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

inline double norm1(const CMatrix& m) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) best = std::max(best, m.col(j).cwiseAbs().sum());
  return best;
}

namespace detail {

struct Lu {
  CMatrix lu;
  std::vector<Eigen::Index> perm;  // row i of lu came from row perm[i]
  int sign = 1;
  bool exactly_singular = false;
};

inline Lu lu_decompose(const CMatrix& a) {
  const Eigen::Index n = a.rows();
  Lu f{a, std::vector<Eigen::Index>(static_cast<std::size_t>(n)), 1, false};
  for (Eigen::Index i = 0; i < n; ++i) f.perm[static_cast<std::size_t>(i)] = i;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index p = k;
    double best = std::abs(f.lu(k, k));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      double v = std::abs(f.lu(i, k));
      if (v > best) best = v, p = i;
    }
    if (best == 0.0) {
      f.exactly_singular = true;
      continue;
    }
    if (p != k) {
      f.lu.row(p).swap(f.lu.row(k));
      std::swap(f.perm[static_cast<std::size_t>(p)], f.perm[static_cast<std::size_t>(k)]);
      f.sign = -f.sign;
    }
    const cplx piv = f.lu(k, k);
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const cplx l = f.lu(i, k) / piv;
      f.lu(i, k) = l;
      if (l != 0.0) f.lu.row(i).tail(n - k - 1) -= l * f.lu.row(k).tail(n - k - 1);
    }
  }
  return f;
}

inline CMatrix lu_solve(const Lu& f, const CMatrix& rhs) {
  const Eigen::Index n = f.lu.rows();
  CMatrix x(n, rhs.cols());
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = rhs.row(f.perm[static_cast<std::size_t>(i)]);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < i; ++k) x(i, c) -= f.lu(i, k) * x(k, c);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      for (Eigen::Index k = i + 1; k < n; ++k) x(i, c) -= f.lu(i, k) * x(k, c);
      x(i, c) /= f.lu(i, i);
    }
  }
  return x;
}

}  // namespace detail

inline cplx det(const CMatrix& m) {
  require_square(m, "det");
  if (m.rows() == 1) return m(0, 0);
  if (m.rows() == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const auto f = detail::lu_decompose(m);
  if (f.exactly_singular) return 0.0;
  cplx d = static_cast<double>(f.sign);
  for (Eigen::Index i = 0; i < m.rows(); ++i) d *= f.lu(i, i);
  return d;
}

// m with row `row` and column `col` removed.
inline CMatrix minor_matrix(const CMatrix& m, Eigen::Index row, Eigen::Index col) {
  const Eigen::Index n = m.rows();
  CMatrix out(n - 1, m.cols() - 1);
  for (Eigen::Index i = 0, oi = 0; i < n; ++i) {
    if (i == row) continue;
    for (Eigen::Index j = 0, oj = 0; j < m.cols(); ++j) {
      if (j == col) continue;
      out(oi, oj++) = m(i, j);
    }
    ++oi;
  }
  return out;
}

inline CMatrix cofactor_adjugate(const CMatrix& m) {
  require_square(m, "adjugate");
  const Eigen::Index n = m.rows();
  CMatrix adj(n, n);
  if (n == 1) {
    adj(0, 0) = 1.0;
    return adj;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double s = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      adj(j, i) = s * det(minor_matrix(m, i, j));
    }
  return adj;
}

inline CMatrix adjugate(const CMatrix& m, Tolerance tol = {}) {
  require_square(m, "adjugate");
  const Eigen::Index n = m.rows();
  if (n <= 4) return cofactor_adjugate(m);
  const auto f = detail::lu_decompose(m);
  cplx d = static_cast<double>(f.sign);
  for (Eigen::Index i = 0; i < n; ++i) d *= f.lu(i, i);
  const double scale = std::pow(m.norm(), static_cast<double>(n));
  if (f.exactly_singular || std::abs(d) <= tol.threshold(scale)) return cofactor_adjugate(m);
  return d * detail::lu_solve(f, CMatrix::Identity(n, n));
}

inline Eigen::VectorXd singular_values(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues();
}

inline int numerical_rank(const CMatrix& m, Tolerance tol = {}) {
  const auto s = singular_values(m);
  if (s.size() == 0) return 0;
  const double thr = tol.threshold(s(0));
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > thr) ++r;
  return r;
}

// Orthonormal basis (as columns) of the numerical kernel.
inline CMatrix nullspace_matrix(const CMatrix& m, Tolerance tol = {}) {
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  const double thr = tol.threshold(smax);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > thr) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

inline std::vector<CVector> nullspace(const CMatrix& m, Tolerance tol = {}) {
  const CMatrix v = nullspace_matrix(m, tol);
  std::vector<CVector> out;
  for (Eigen::Index j = 0; j < v.cols(); ++j) out.emplace_back(v.col(j));
  return out;
}

// Solves m x = rhs; throws when m is singular to tolerance (1-norm condition estimate).
inline CMatrix solve(const CMatrix& m, const CMatrix& rhs, Tolerance tol = {}) {
  require_square(m, "solve");
  if (rhs.rows() != m.rows()) throw DimensionError("solve: right-hand side row count mismatch");
  const Eigen::Index n = m.rows();
  const auto f = detail::lu_decompose(m);
  if (f.exactly_singular) throw SingularityError("solve: matrix is exactly singular", std::numeric_limits<double>::infinity());
  const CMatrix inv = detail::lu_solve(f, CMatrix::Identity(n, n));
  const double cond = norm1(m) * norm1(inv);
  if (!std::isfinite(cond) || 1.0 / cond <= tol.rel) throw SingularityError("solve: matrix is singular to tolerance", cond);
  return detail::lu_solve(f, rhs);
}

// Scaling and squaring with the degree-13 Pade approximant.
inline CMatrix mat_exp(const CMatrix& m) {
  require_square(m, "mat_exp");
  const Eigen::Index n = m.rows();
  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;
  const double nrm = norm1(m);
  int s = 0;
  if (nrm > theta13) s = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
  const CMatrix a = m / std::ldexp(1.0, s);
  const CMatrix id = CMatrix::Identity(n, n);
  const CMatrix a2 = a * a, a4 = a2 * a2, a6 = a4 * a2;
  const CMatrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const CMatrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  CMatrix r = detail::lu_solve(detail::lu_decompose(v - u), v + u);
  for (int k = 0; k < s; ++k) r = r * r;
  return r;
}

namespace detail {

// Radius for sampling a matrix polynomial sum_p A_p e^p so that the terms are of comparable size on the circle.
inline double taylor_radius(const std::vector<CMatrix>& a) {
  const double a0 = a.front().norm();
  double grow = 1.0;
  for (std::size_t p = 1; p < a.size(); ++p) {
    const double ap = a[p].norm();
    if (ap > 0.0 && a0 > 0.0) grow = std::max(grow, std::pow(ap / a0, 1.0 / static_cast<double>(p)));
  }
  return 1.0 / grow;
}

// Taylor coefficients 0..order of g(sum_p a_p e^p), where g(A) is a polynomial of degree <= deg in the entries
// of A; recovered exactly (up to rounding) by a DFT over deg*order + 1 points on a circle.
template <class G>
std::vector<CMatrix> polynomial_taylor(const std::vector<CMatrix>& a, int order, int deg, G&& g) {
  const int m = deg * std::max(order, 1) + 1;
  const double rho = taylor_radius(a);
  std::vector<CMatrix> samples;
  samples.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const cplx e = std::polar(rho, 2.0 * std::numbers::pi * j / m);
    CMatrix x = CMatrix::Zero(a.front().rows(), a.front().cols());
    cplx pw = 1.0;
    for (std::size_t p = 0; p < a.size() && static_cast<int>(p) <= order; ++p) {
      x += pw * a[p];
      pw *= e;
    }
    samples.push_back(g(x));
  }
  std::vector<CMatrix> out;
  for (int q = 0; q <= order; ++q) {
    CMatrix acc = CMatrix::Zero(samples.front().rows(), samples.front().cols());
    for (int j = 0; j < m; ++j) acc += std::polar(1.0, -2.0 * std::numbers::pi * j * q / m) * samples[static_cast<std::size_t>(j)];
    out.push_back(acc / (m * std::pow(rho, q)));
  }
  return out;
}

}  // namespace detail

// Taylor coefficients (d^k/de^k det A(e) / k!, k = 0..order) of det(sum_p a[p] e^p).
inline std::vector<cplx> det_taylor(const std::vector<CMatrix>& a, int order) {
  if (a.empty()) throw DimensionError("det_taylor: empty coefficient list");
  require_square(a.front(), "det_taylor");
  const int n = static_cast<int>(a.front().rows());
  const auto m = detail::polynomial_taylor(a, order, n, [](const CMatrix& x) {
    CMatrix d(1, 1);
    d(0, 0) = det(x);
    return d;
  });
  std::vector<cplx> out;
  for (const auto& c : m) out.push_back(c(0, 0));
  return out;
}

// Taylor coefficients of adj(sum_p a[p] e^p).
inline std::vector<CMatrix> adjugate_taylor(const std::vector<CMatrix>& a, int order) {
  if (a.empty()) throw DimensionError("adjugate_taylor: empty coefficient list");
  require_square(a.front(), "adjugate_taylor");
  const int n = static_cast<int>(a.front().rows());
  return detail::polynomial_taylor(a, order, std::max(n - 1, 1), [](const CMatrix& x) { return adjugate(x); });
}

}  // namespace birk
