#pragma once

// Algebraic classification of boundary conditions through the selection matrices T_z(C, D).
// All directions z live in the plane of lambda / i, so Re(i b_j lambda) = -Re(b_j z).

#include <algorithm>
#include <array>
#include <numbers>
#include <optional>
#include <vector>

#include "birk/model.hpp"

namespace birk {

// Which quantity decides the column source of T_z: Re(z b_k) (the default) or Re(z / b_k).
// The two rules realize mirror-image fans (z -> conj z), so verdicts always agree; the selection
// matrices at a fixed z can differ unless every b_k is real.
enum class ColumnRule { Exponent, Reciprocal };
enum class FanMode { Regularity, Ordering };
enum class ColumnSource { FromC, FromD };

inline cplx rule_weight(cplx b, ColumnRule rule) { return rule == ColumnRule::Exponent ? b : 1.0 / b; }

struct Sector {
  double lo = 0.0;  // open angular interval (lo, hi), hi may exceed 2*pi for the wrapping sector
  double hi = 0.0;
  cplx z;           // unit representative at the angular midpoint
  std::vector<int> order;  // Ordering mode: block indices sorted by Re(i b_j lambda) ascending
};

struct SectorFan {
  FanMode mode = FanMode::Regularity;
  std::vector<double> boundary_angles;  // sorted, in [0, 2*pi)
  std::vector<Sector> sectors;
};

namespace detail {

inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a < 0.0) a += two_pi;
  if (a >= two_pi) a -= two_pi;
  return a;
}

// Both rays of the line {z : Re(z w) = 0}.
inline void push_line(std::vector<double>& angles, cplx w) {
  const double th = std::numbers::pi / 2.0 - std::arg(w);
  angles.push_back(wrap_angle(th));
  angles.push_back(wrap_angle(th + std::numbers::pi));
}

inline std::vector<double> dedupe_angles(std::vector<double> a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::sort(a.begin(), a.end());
  std::vector<double> out;
  for (double v : a)
    if (out.empty() || v - out.back() > 1e-12) out.push_back(v);
  if (out.size() > 1 && out.front() + two_pi - out.back() <= 1e-12) out.pop_back();
  return out;
}

}  // namespace detail

inline SectorFan build_sector_fan(const BlockStructure& blocks, FanMode mode, ColumnRule rule = ColumnRule::Exponent) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  SectorFan fan;
  fan.mode = mode;
  std::vector<double> angles;
  const int r = blocks.r();
  if (mode == FanMode::Regularity) {
    for (auto b : blocks.weights) detail::push_line(angles, rule_weight(b, rule));
  } else {
    for (int j = 0; j < r; ++j)
      for (int k = j + 1; k < r; ++k)
        detail::push_line(angles, blocks.weights[static_cast<std::size_t>(j)] - blocks.weights[static_cast<std::size_t>(k)]);
  }
  fan.boundary_angles = detail::dedupe_angles(std::move(angles));
  const auto& a = fan.boundary_angles;
  if (a.empty()) {
    fan.sectors.push_back({0.0, two_pi, cplx(1.0, 0.0), {}});
  } else {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double lo = a[i];
      const double hi = (i + 1 < a.size()) ? a[i + 1] : a.front() + two_pi;
      fan.sectors.push_back({lo, hi, std::polar(1.0, detail::wrap_angle(0.5 * (lo + hi))), {}});
    }
  }
  if (mode == FanMode::Ordering) {
    for (auto& s : fan.sectors) {
      s.order.resize(static_cast<std::size_t>(r));
      for (int j = 0; j < r; ++j) s.order[static_cast<std::size_t>(j)] = j;
      // Re(i b_j lambda) with lambda = i z equals -Re(b_j z).
      std::sort(s.order.begin(), s.order.end(), [&](int x, int y) {
        return -(blocks.weights[static_cast<std::size_t>(x)] * s.z).real() <
               -(blocks.weights[static_cast<std::size_t>(y)] * s.z).real();
      });
    }
  }
  return fan;
}

struct SelectionMatrix {
  cplx z;
  std::vector<ColumnSource> picked;
  CMatrix matrix;
};

inline SelectionMatrix selection_matrix(const BoundaryPair& bc, const BlockStructure& blocks, cplx z,
                                        ColumnRule rule = ColumnRule::Exponent) {
  const int n = blocks.n();
  if (bc.C.rows() != n || bc.C.cols() != n || bc.D.rows() != n || bc.D.cols() != n)
    throw DimensionError("selection_matrix: boundary pair does not match the block structure");
  SelectionMatrix t{z, {}, CMatrix(n, n)};
  const auto cb = blocks.coordinate_blocks();
  std::vector<ColumnSource> per_block;
  for (int j = 0; j < blocks.r(); ++j) {
    const cplx w = rule_weight(blocks.weights[static_cast<std::size_t>(j)], rule);
    const double s = (z * w).real();
    if (std::abs(s) <= 1e-14 * std::abs(z) * std::abs(w))
      throw AdmissibilityError("selection_matrix: z lies on the line of block " + std::to_string(j), j);
    per_block.push_back(s > 0.0 ? ColumnSource::FromC : ColumnSource::FromD);
  }
  for (int k = 0; k < n; ++k) {
    const auto src = per_block[static_cast<std::size_t>(cb[static_cast<std::size_t>(k)])];
    t.picked.push_back(src);
    t.matrix.col(k) = (src == ColumnSource::FromC) ? bc.C.col(k) : bc.D.col(k);
  }
  return t;
}

enum class Verdict { RankDeficient, Regular, WeaklyRegularOnly, NotWeaklyRegular };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::RankDeficient: return "RankDeficient";
    case Verdict::Regular: return "Regular";
    case Verdict::WeaklyRegularOnly: return "WeaklyRegularOnly";
    case Verdict::NotWeaklyRegular: return "NotWeaklyRegular";
  }
  return "?";
}

inline bool is_weakly_regular(Verdict v) { return v == Verdict::Regular || v == Verdict::WeaklyRegularOnly; }

struct SectorRecord {
  cplx z;
  cplx det;
  double relative = 0.0;  // |det| / (|C|_F + |D|_F)^n
  bool nonzero = false;
};

struct ClassifyOptions {
  Tolerance rank_tol{1e-10};
  double det_rel = 1e-10;
  double orientation_tol = 1e-12;
  ColumnRule rule = ColumnRule::Exponent;
  bool compare_rules = true;
};

struct RegularityReport {
  Verdict verdict = Verdict::RankDeficient;
  ColumnRule rule = ColumnRule::Exponent;
  std::vector<SectorRecord> sectors;
  std::optional<std::array<cplx, 3>> witness;
  std::optional<Verdict> alternative_verdict;
  // Sector representatives where the other rule's T_z has a different zero/nonzero status.
  std::vector<cplx> rule_mismatch_directions;
  bool rules_disagree = false;
};

inline double bc_scale(const BoundaryPair& bc) {
  return std::pow(bc.C.norm() + bc.D.norm(), static_cast<double>(bc.C.rows()));
}

// Origin strictly inside the triangle (a, b, c).
inline bool origin_inside(cplx a, cplx b, cplx c, double tol = 1e-12) {
  auto orient = [](cplx p, cplx q) { return p.real() * q.imag() - p.imag() * q.real(); };  // sign of (q - p) x (0 - p)
  const double o1 = orient(a, b), o2 = orient(b, c), o3 = orient(c, a);
  return (o1 > tol && o2 > tol && o3 > tol) || (o1 < -tol && o2 < -tol && o3 < -tol);
}

namespace detail {

inline std::optional<std::array<cplx, 3>> find_triangle(const std::vector<cplx>& pts, double tol) {
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      for (std::size_t k = j + 1; k < pts.size(); ++k)
        if (origin_inside(pts[i], pts[j], pts[k], tol)) return std::array<cplx, 3>{pts[i], pts[j], pts[k]};
  return std::nullopt;
}

inline RegularityReport classify_with_rule(const BoundaryPair& bc, const BlockStructure& blocks, const ClassifyOptions& opt,
                                           ColumnRule rule) {
  RegularityReport rep;
  rep.rule = rule;
  const int n = blocks.n();
  if (numerical_rank(bc.combined(), opt.rank_tol) < n) {
    rep.verdict = Verdict::RankDeficient;
    return rep;
  }
  const double scale = bc_scale(bc);
  const auto fan = build_sector_fan(blocks, FanMode::Regularity, rule);
  bool all_nonzero = true;
  std::vector<cplx> mids, extended;
  for (const auto& s : fan.sectors) {
    const auto t = selection_matrix(bc, blocks, s.z, rule);
    const cplx d = det(t.matrix);
    const double relative = std::abs(d) / scale;
    const bool nz = relative > opt.det_rel;
    rep.sectors.push_back({s.z, d, relative, nz});
    all_nonzero = all_nonzero && nz;
    if (nz) {
      mids.push_back(s.z);
      const double w = s.hi - s.lo;
      extended.push_back(std::polar(1.0, s.lo + 0.05 * w));
      extended.push_back(s.z);
      extended.push_back(std::polar(1.0, s.hi - 0.05 * w));
    }
  }
  // The determinant is constant on each open sector, so any direction inside a good sector qualifies.
  // Representatives alone miss triangles when only two (opposite) sectors exist.
  rep.witness = find_triangle(mids, opt.orientation_tol);
  if (!rep.witness) rep.witness = find_triangle(extended, opt.orientation_tol);
  if (all_nonzero)
    rep.verdict = Verdict::Regular;
  else
    rep.verdict = rep.witness ? Verdict::WeaklyRegularOnly : Verdict::NotWeaklyRegular;
  return rep;
}

}  // namespace detail

inline RegularityReport classify(const BoundaryPair& bc, const BlockStructure& blocks, const ClassifyOptions& opt = {}) {
  auto rep = detail::classify_with_rule(bc, blocks, opt, opt.rule);
  if (opt.compare_rules && rep.verdict != Verdict::RankDeficient) {
    const ColumnRule other = opt.rule == ColumnRule::Exponent ? ColumnRule::Reciprocal : ColumnRule::Exponent;
    rep.alternative_verdict = detail::classify_with_rule(bc, blocks, opt, other).verdict;
    const double scale = bc_scale(bc);
    for (const auto& s : rep.sectors) {
      try {
        const bool nz = std::abs(det(selection_matrix(bc, blocks, s.z, other).matrix)) / scale > opt.det_rel;
        if (nz != s.nonzero) rep.rule_mismatch_directions.push_back(s.z);
      } catch (const AdmissibilityError&) {
        rep.rule_mismatch_directions.push_back(s.z);
      }
    }
    rep.rules_disagree = !rep.rule_mismatch_directions.empty() || *rep.alternative_verdict != rep.verdict;
  }
  return rep;
}

struct SplittingRecord {
  cplx z;
  int kappa_plus = 0;
  bool matches = false;  // false certifies det T_z = 0
  cplx det;
};

struct SplittingReport {
  int k = 0;  // number of conditions at x = 0
  std::vector<int> rows_at_zero;
  std::vector<int> rows_at_one;
  bool regular_possible = false;  // n == 2k
  std::vector<SplittingRecord> sectors;
};

inline SplittingReport splitting_check(const BoundaryPair& bc, const BlockStructure& blocks,
                                       ColumnRule rule = ColumnRule::Exponent) {
  const int n = blocks.n();
  const double tol = 1e-14 * std::max(1.0, bc.combined().norm());
  SplittingReport rep;
  for (int i = 0; i < n; ++i) {
    const bool c_zero = bc.C.row(i).norm() <= tol, d_zero = bc.D.row(i).norm() <= tol;
    if (!c_zero && d_zero)
      rep.rows_at_zero.push_back(i);
    else if (c_zero && !d_zero)
      rep.rows_at_one.push_back(i);
    else
      throw StructureError("splitting_check: row " + std::to_string(i) + " couples both endpoints or is zero");
  }
  rep.k = static_cast<int>(rep.rows_at_zero.size());
  rep.regular_possible = (n == 2 * rep.k);
  const auto fan = build_sector_fan(blocks, FanMode::Regularity, rule);
  const auto w = blocks.coordinate_weights();
  for (const auto& s : fan.sectors) {
    int kp = 0;
    for (int c = 0; c < n; ++c)
      if ((s.z * rule_weight(w(c), rule)).real() > 0.0) ++kp;
    rep.sectors.push_back({s.z, kp, kp == rep.k, det(selection_matrix(bc, blocks, s.z, rule).matrix)});
  }
  return rep;
}

struct TPlusMinus {
  CMatrix plus, minus;
  cplx det_plus, det_minus;
  std::optional<bool> j_identity_holds;  // n = 2, b1 < 0 < b2: det T+ = J32 and det T- = J14
};

inline void require_real_weights(const BlockStructure& blocks, const char* op) {
  if (!blocks.all_real()) throw ApplicabilityError(std::string(op) + ": requires real weights b_j");
}

inline TPlusMinus selfadjoint_T_pm(const BoundaryPair& bc, const BlockStructure& blocks) {
  require_real_weights(blocks, "selfadjoint_T_pm");
  const int n = blocks.n();
  const auto w = blocks.coordinate_weights();
  TPlusMinus t{CMatrix(n, n), CMatrix(n, n), 0.0, 0.0, std::nullopt};
  for (int k = 0; k < n; ++k) {
    const bool pos = w(k).real() > 0.0;
    t.plus.col(k) = pos ? bc.C.col(k) : bc.D.col(k);
    t.minus.col(k) = pos ? bc.D.col(k) : bc.C.col(k);
  }
  t.det_plus = det(t.plus);
  t.det_minus = det(t.minus);
  if (n == 2 && blocks.r() == 2 && w(0).real() < 0.0 && w(1).real() > 0.0) {
    const auto j = j_minors(bc);
    const double s = 1e-13 * std::max(1.0, bc_scale(bc));
    t.j_identity_holds = std::abs(t.det_plus - j.j32) <= s && std::abs(t.det_minus - j.j14) <= s;
  }
  return t;
}

// diag(B, -B) acting on the stacked boundary vector (y(0), y(1)).
inline CMatrix boundary_form(const BlockStructure& blocks) {
  const int n = blocks.n();
  const CMatrix b = blocks.B();
  CMatrix f = CMatrix::Zero(2 * n, 2 * n);
  f.topLeftCorner(n, n) = b;
  f.bottomRightCorner(n, n) = -b;
  return f;
}

// Boundary conditions of the adjoint problem, which carries weights conj(b_j) and potential Q^H.
inline BoundaryPair adjoint_bc(const BoundaryPair& bc, const BlockStructure& blocks, Tolerance tol = {}) {
  const int n = blocks.n();
  const CMatrix a = bc.combined();
  if (numerical_rank(a, tol) < n) throw ValidationError("adjoint_bc: maximality violated, rank(C D) < n");
  const CMatrix v = nullspace_matrix(a, tol);
  if (v.cols() != n) throw ValidationError("adjoint_bc: kernel of (C D) does not have dimension n");
  const CMatrix rows = (boundary_form(blocks) * v).adjoint();
  return BoundaryPair::from_combined(rows);
}

inline SystemProblem adjoint_problem(const SystemProblem& p, Tolerance tol = {}) {
  return {p.blocks.adjoint(), p.potential.adjoint(), adjoint_bc(p.bc, p.blocks, tol)};
}

enum class DissipativityKind { Dissipative, Accumulative, Selfadjoint, Neither };

inline const char* to_string(DissipativityKind k) {
  switch (k) {
    case DissipativityKind::Dissipative: return "Dissipative";
    case DissipativityKind::Accumulative: return "Accumulative";
    case DissipativityKind::Selfadjoint: return "Selfadjoint";
    case DissipativityKind::Neither: return "Neither";
  }
  return "?";
}

struct DissipativityReport {
  DissipativityKind kind = DissipativityKind::Neither;
  Eigen::VectorXd form_eigenvalues;  // of G = V^H diag(B,-B) V
  // Accumulative: det T+ != 0; Dissipative: det T- != 0. Empty otherwise.
  std::optional<bool> determinant_claim_holds;
};

inline DissipativityReport dissipativity(const BoundaryPair& bc, const BlockStructure& blocks, Tolerance tol = {}) {
  require_real_weights(blocks, "dissipativity");
  const int n = blocks.n();
  const CMatrix a = bc.combined();
  if (numerical_rank(a, tol) < n) throw ValidationError("dissipativity: maximality violated, rank(C D) < n");
  const CMatrix v = nullspace_matrix(a, tol);
  CMatrix g = v.adjoint() * boundary_form(blocks) * v;
  g = (0.5 * (g + g.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(g);
  DissipativityReport rep;
  rep.form_eigenvalues = es.eigenvalues();
  const double thr = tol.threshold(1.0 / blocks.min_abs_weight());
  const double lo = rep.form_eigenvalues.minCoeff(), hi = rep.form_eigenvalues.maxCoeff();
  const auto t = selfadjoint_T_pm(bc, blocks);
  const double scale = bc_scale(bc);
  if (std::max(std::abs(lo), std::abs(hi)) <= thr) {
    rep.kind = DissipativityKind::Selfadjoint;
  } else if (hi <= thr) {
    rep.kind = DissipativityKind::Accumulative;
    rep.determinant_claim_holds = std::abs(t.det_plus) / scale > 1e-10;
  } else if (lo >= -thr) {
    rep.kind = DissipativityKind::Dissipative;
    rep.determinant_claim_holds = std::abs(t.det_minus) / scale > 1e-10;
  }
  return rep;
}

}  // namespace birk
