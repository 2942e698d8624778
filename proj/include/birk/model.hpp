#pragma once

// Problem data: block weights b_j, potential Q(x), boundary pair (C, D).
// The system is -i B y' + Q(x) y = lambda y on [0,1], B = diag(b_j^{-1} I_{n_j}),
// with boundary conditions C y(0) + D y(1) = 0.

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "birk/numcore.hpp"

namespace birk {

struct BlockStructure {
  std::vector<int> sizes;
  std::vector<cplx> weights;  // b_j, the exponent coefficients

  int r() const { return static_cast<int>(sizes.size()); }
  int n() const {
    int s = 0;
    for (int v : sizes) s += v;
    return s;
  }
  // Block index of every coordinate.
  std::vector<int> coordinate_blocks() const {
    std::vector<int> out;
    for (int j = 0; j < r(); ++j) out.insert(out.end(), static_cast<std::size_t>(sizes[static_cast<std::size_t>(j)]), j);
    return out;
  }
  // b of the block holding each coordinate.
  CVector coordinate_weights() const {
    CVector w(n());
    int k = 0;
    for (int j = 0; j < r(); ++j)
      for (int c = 0; c < sizes[static_cast<std::size_t>(j)]; ++c) w(k++) = weights[static_cast<std::size_t>(j)];
    return w;
  }
  bool all_real(double tol = 1e-14) const {
    for (auto b : weights)
      if (std::abs(b.imag()) > tol * std::abs(b)) return false;
    return true;
  }
  double max_abs_weight() const {
    double m = 0.0;
    for (auto b : weights) m = std::max(m, std::abs(b));
    return m;
  }
  double min_abs_weight() const {
    double m = std::numeric_limits<double>::infinity();
    for (auto b : weights) m = std::min(m, std::abs(b));
    return m;
  }
  // B = diag(b_j^{-1}) expanded per coordinate.
  CMatrix B() const { return coordinate_weights().cwiseInverse().asDiagonal(); }
  CMatrix B_inverse() const { return coordinate_weights().asDiagonal(); }
  BlockStructure adjoint() const {
    BlockStructure a = *this;
    for (auto& b : a.weights) b = std::conj(b);
    return a;
  }
  bool operator==(const BlockStructure&) const = default;
};

struct ZeroPotential {
  int n = 0;
};
struct ConstantPotential {
  CMatrix value;
};
// Piecewise-linear interpolation between samples; abscissae start at 0 and end at 1.
struct GridPotential {
  std::vector<double> x;
  std::vector<CMatrix> values;
};
// coeffs[i * n + j] holds ascending-power coefficients of entry (i, j).
struct PolynomialPotential {
  int n = 0;
  std::vector<std::vector<cplx>> coeffs;
};

enum class PotentialKind { Zero, Constant, Grid, Polynomial };

class PotentialSpec {
 public:
  using Variant = std::variant<ZeroPotential, ConstantPotential, GridPotential, PolynomialPotential>;

  PotentialSpec() = default;
  PotentialSpec(Variant v) : v_(std::move(v)) {}

  static PotentialSpec zero(int n) { return PotentialSpec(ZeroPotential{n}); }
  static PotentialSpec constant(CMatrix m) { return PotentialSpec(ConstantPotential{std::move(m)}); }
  static PotentialSpec grid(std::vector<double> x, std::vector<CMatrix> values) {
    return PotentialSpec(GridPotential{std::move(x), std::move(values)});
  }
  static PotentialSpec polynomial(int n, std::vector<std::vector<cplx>> coeffs) {
    return PotentialSpec(PolynomialPotential{n, std::move(coeffs)});
  }

  const Variant& variant() const { return v_; }
  PotentialKind kind() const { return static_cast<PotentialKind>(v_.index()); }

  int dim() const {
    switch (kind()) {
      case PotentialKind::Zero: return std::get<ZeroPotential>(v_).n;
      case PotentialKind::Constant: return static_cast<int>(std::get<ConstantPotential>(v_).value.rows());
      case PotentialKind::Grid: {
        const auto& g = std::get<GridPotential>(v_);
        return g.values.empty() ? 0 : static_cast<int>(g.values.front().rows());
      }
      case PotentialKind::Polynomial: return std::get<PolynomialPotential>(v_).n;
    }
    return 0;
  }

  // Writes Q(x) into out (resized as needed). No domain check; see eval_potential.
  void eval_into(double x, CMatrix& out) const {
    const int n = dim();
    switch (kind()) {
      case PotentialKind::Zero: out.setZero(n, n); return;
      case PotentialKind::Constant: out = std::get<ConstantPotential>(v_).value; return;
      case PotentialKind::Grid: {
        const auto& g = std::get<GridPotential>(v_);
        auto it = std::upper_bound(g.x.begin(), g.x.end(), x);
        std::size_t hi = static_cast<std::size_t>(it - g.x.begin());
        if (hi == 0) hi = 1;
        if (hi >= g.x.size()) hi = g.x.size() - 1;
        const std::size_t lo = hi - 1;
        const double t = (x - g.x[lo]) / (g.x[hi] - g.x[lo]);
        out = (1.0 - t) * g.values[lo] + t * g.values[hi];
        return;
      }
      case PotentialKind::Polynomial: {
        const auto& p = std::get<PolynomialPotential>(v_);
        out.resize(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const auto& c = p.coeffs[static_cast<std::size_t>(i * n + j)];
            cplx acc = 0.0;
            for (auto k = c.rbegin(); k != c.rend(); ++k) acc = acc * x + *k;
            out(i, j) = acc;
          }
        return;
      }
    }
  }

  bool is_zero() const { return kind() == PotentialKind::Zero; }

  // Abscissae where Q is not smooth (interior grid nodes).
  std::vector<double> breakpoints() const {
    if (kind() != PotentialKind::Grid) return {};
    const auto& g = std::get<GridPotential>(v_);
    if (g.x.size() <= 2) return {};
    return std::vector<double>(g.x.begin() + 1, g.x.end() - 1);
  }

  // Pointwise conjugate transpose.
  PotentialSpec adjoint() const {
    switch (kind()) {
      case PotentialKind::Zero: return *this;
      case PotentialKind::Constant: return constant(std::get<ConstantPotential>(v_).value.adjoint());
      case PotentialKind::Grid: {
        auto g = std::get<GridPotential>(v_);
        for (auto& m : g.values) m = m.adjoint().eval();
        return PotentialSpec(std::move(g));
      }
      case PotentialKind::Polynomial: {
        const auto& p = std::get<PolynomialPotential>(v_);
        PolynomialPotential out{p.n, p.coeffs};
        for (int i = 0; i < p.n; ++i)
          for (int j = 0; j < p.n; ++j) {
            auto c = p.coeffs[static_cast<std::size_t>(j * p.n + i)];
            for (auto& v : c) v = std::conj(v);
            out.coeffs[static_cast<std::size_t>(i * p.n + j)] = std::move(c);
          }
        return PotentialSpec(std::move(out));
      }
    }
    return *this;
  }

 private:
  Variant v_{ZeroPotential{}};
};

inline CMatrix eval_potential(const PotentialSpec& spec, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("eval_potential: x = " + std::to_string(x) + " lies outside [0,1]");
  CMatrix out;
  spec.eval_into(x, out);
  return out;
}

struct BoundaryPair {
  CMatrix C;
  CMatrix D;
  // The n x 2n array (C D).
  CMatrix combined() const {
    CMatrix a(C.rows(), C.cols() + D.cols());
    a << C, D;
    return a;
  }
  static BoundaryPair from_combined(const CMatrix& a) {
    const Eigen::Index n = a.rows();
    return {a.leftCols(n), a.rightCols(n)};
  }
};

struct SystemProblem {
  BlockStructure blocks;
  PotentialSpec potential;
  BoundaryPair bc;
  int n() const { return blocks.n(); }
};

// Mask of entries (i, j) where both coordinates belong to the same block.
inline Eigen::MatrixXd block_diagonal_mask(const BlockStructure& blocks) {
  const auto cb = blocks.coordinate_blocks();
  const int n = blocks.n();
  Eigen::MatrixXd mask(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) mask(i, j) = cb[static_cast<std::size_t>(i)] == cb[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
  return mask;
}

inline CMatrix block_diagonal_part(const CMatrix& q, const BlockStructure& blocks) {
  return q.cwiseProduct(block_diagonal_mask(blocks).cast<cplx>());
}

inline bool has_zero_block_diagonal(const PotentialSpec& q, const BlockStructure& blocks, double tol = 0.0) {
  const auto mask = block_diagonal_mask(blocks);
  const int n = blocks.n();
  auto check = [&](const CMatrix& m) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (mask(i, j) != 0.0 && std::abs(m(i, j)) > tol) return false;
    return true;
  };
  switch (q.kind()) {
    case PotentialKind::Zero: return true;
    case PotentialKind::Constant: return check(std::get<ConstantPotential>(q.variant()).value);
    case PotentialKind::Grid:
      for (const auto& m : std::get<GridPotential>(q.variant()).values)
        if (!check(m)) return false;
      return true;
    case PotentialKind::Polynomial: {
      const auto& p = std::get<PolynomialPotential>(q.variant());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (mask(i, j) != 0.0)
            for (auto c : p.coeffs[static_cast<std::size_t>(i * n + j)])
              if (std::abs(c) > tol) return false;
      return true;
    }
  }
  return false;
}

struct ValidationReport {
  std::vector<std::string> violations;
  bool zero_block_diagonal = false;
  bool valid() const { return violations.empty(); }
};

inline ValidationReport validate(const SystemProblem& p, Tolerance tol = {}) {
  ValidationReport rep;
  auto fail = [&](std::string s) { rep.violations.push_back(std::move(s)); };
  const auto& bl = p.blocks;
  bool blocks_ok = true;
  if (bl.sizes.empty()) fail("blocks: at least one block is required"), blocks_ok = false;
  if (bl.sizes.size() != bl.weights.size()) fail("blocks: sizes and weights differ in length"), blocks_ok = false;
  for (std::size_t j = 0; j < bl.sizes.size(); ++j)
    if (bl.sizes[j] < 1) fail("blocks: size of block " + std::to_string(j) + " must be >= 1"), blocks_ok = false;
  for (std::size_t j = 0; j < bl.weights.size(); ++j) {
    const cplx b = bl.weights[j];
    if (!std::isfinite(b.real()) || !std::isfinite(b.imag()) || b == 0.0)
      fail("blocks: weight b_" + std::to_string(j) + " must be finite and nonzero"), blocks_ok = false;
    for (std::size_t k = 0; k < j; ++k)
      if (std::abs(b - bl.weights[k]) <= 1e-12 * std::max(std::abs(b), std::abs(bl.weights[k])))
        fail("blocks: weights b_" + std::to_string(k) + " and b_" + std::to_string(j) + " are not distinct"), blocks_ok = false;
  }
  if (!blocks_ok) return rep;
  const int n = bl.n();

  const auto& q = p.potential;
  if (q.dim() != n) fail("potential: dimension " + std::to_string(q.dim()) + " does not match n = " + std::to_string(n));
  bool q_ok = q.dim() == n;
  switch (q.kind()) {
    case PotentialKind::Zero: break;
    case PotentialKind::Constant:
      if (!all_finite(std::get<ConstantPotential>(q.variant()).value)) fail("potential: non-finite entries"), q_ok = false;
      break;
    case PotentialKind::Grid: {
      const auto& g = std::get<GridPotential>(q.variant());
      if (g.x.size() < 2) fail("potential: grid needs at least 2 abscissae"), q_ok = false;
      if (g.x.size() != g.values.size()) fail("potential: grid abscissae and values differ in length"), q_ok = false;
      if (!g.x.empty() && (g.x.front() != 0.0 || g.x.back() != 1.0)) fail("potential: grid must start at 0 and end at 1"), q_ok = false;
      for (std::size_t i = 1; i < g.x.size(); ++i)
        if (!(g.x[i] > g.x[i - 1])) {
          fail("potential: grid abscissae must be strictly increasing"), q_ok = false;
          break;
        }
      for (const auto& m : g.values)
        if (m.rows() != n || m.cols() != n || !all_finite(m)) {
          fail("potential: grid sample has wrong shape or non-finite entries"), q_ok = false;
          break;
        }
      break;
    }
    case PotentialKind::Polynomial: {
      const auto& pp = std::get<PolynomialPotential>(q.variant());
      if (pp.coeffs.size() != static_cast<std::size_t>(pp.n * pp.n)) fail("potential: polynomial needs n*n coefficient lists"), q_ok = false;
      for (const auto& c : pp.coeffs)
        for (auto v : c)
          if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) fail("potential: non-finite polynomial coefficient"), q_ok = false;
      break;
    }
  }
  if (q_ok) rep.zero_block_diagonal = has_zero_block_diagonal(q, bl);

  const auto& bc = p.bc;
  if (bc.C.rows() != n || bc.C.cols() != n || bc.D.rows() != n || bc.D.cols() != n) {
    fail("bc: C and D must both be " + std::to_string(n) + "x" + std::to_string(n));
    return rep;
  }
  if (!all_finite(bc.C) || !all_finite(bc.D)) {
    fail("bc: non-finite entries");
    return rep;
  }
  if (numerical_rank(bc.combined(), tol) < n) fail("bc: maximality violated, rank(C D) < n");
  return rep;
}

// 2x2 minor of columns j, k (1-based) of the 2x4 array (C D).
inline cplx j_minor(const BoundaryPair& bc, int j, int k) {
  if (bc.C.rows() != 2 || bc.C.cols() != 2 || bc.D.rows() != 2 || bc.D.cols() != 2)
    throw DimensionError("j_minors: only defined for n = 2");
  if (j < 1 || j > 4 || k < 1 || k > 4) throw DomainError("j_minor: column index out of range");
  const CMatrix a = bc.combined();
  return a(0, j - 1) * a(1, k - 1) - a(0, k - 1) * a(1, j - 1);
}

struct JMinors {
  cplx j12, j34, j32, j13, j42, j14;
};

inline JMinors j_minors(const BoundaryPair& bc) {
  return {j_minor(bc, 1, 2), j_minor(bc, 3, 4), j_minor(bc, 3, 2),
          j_minor(bc, 1, 3), j_minor(bc, 4, 2), j_minor(bc, 1, 4)};
}

}  // namespace birk
