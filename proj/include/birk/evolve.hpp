#pragma once

// Fundamental matrix Phi(x; lambda) of y' = i B^{-1} (lambda - Q(x)) y with Phi(0) = I, its lambda-derivatives,
// the block-diagonal gauge transform, and a numerical check of the Birkhoff-type asymptotics.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "birk/model.hpp"
#include "birk/regularity.hpp"

namespace birk {

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-14;
  int max_order = 4;  // cap on carried lambda-derivatives
  std::size_t max_steps = 20'000'000;
};

namespace detail {

// Dormand-Prince 5(4) with PI step control for a matrix-valued ODE y' = f(x, y).
// `stops` is sorted and lies in (x0, x_end]; the integrator lands exactly on each stop and calls on_stop(index, y).
template <class Rhs, class OnStop>
void dopri(Rhs&& f, double x0, CMatrix& y, const std::vector<double>& stops, double hmax, const IntegratorOptions& opt,
           cplx diag_lambda, OnStop&& on_stop) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  if (stops.empty()) return;
  const Eigen::Index r = y.rows(), c = y.cols();
  CMatrix k1(r, c), k2(r, c), k3(r, c), k4(r, c), k5(r, c), k6(r, c), k7(r, c), tmp(r, c), ynew(r, c), err(r, c);
  double x = x0;
  double h = std::min(hmax, 0.5 * (stops.back() - x0));
  double err_prev = 1e-4;
  f(x, y, k1);
  std::size_t steps = 0;
  for (std::size_t si = 0; si < stops.size(); ++si) {
    const double target = stops[si];
    while (x < target) {
      if (++steps > opt.max_steps) throw StiffnessError("integrator: step budget exhausted", diag_lambda);
      bool last = false;
      if (x + h >= target - 1e-13 * std::max(1.0, std::abs(target))) {
        h = target - x;
        last = true;
      }
      if (h < 1e-14 * std::max(1.0, std::abs(x))) throw StiffnessError("integrator: step size underflow", diag_lambda);
      tmp = y + h * (a21 * k1);
      f(x + c2 * h, tmp, k2);
      tmp = y + h * (a31 * k1 + a32 * k2);
      f(x + c3 * h, tmp, k3);
      tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      f(x + c4 * h, tmp, k4);
      tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      f(x + c5 * h, tmp, k5);
      tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      f(x + h, tmp, k6);
      ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      const double xnew = last ? target : x + h;
      f(xnew, ynew, k7);
      err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      // Column-wise scale: a tiny entry next to a large one in the same column is not held to its own size.
      double acc = 0.0;
      for (Eigen::Index j = 0; j < c; ++j) {
        const double sc = opt.atol + opt.rtol * std::max(y.col(j).cwiseAbs().maxCoeff(), ynew.col(j).cwiseAbs().maxCoeff());
        acc += err.col(j).squaredNorm() / (sc * sc);
      }
      const double e = std::sqrt(acc / static_cast<double>(r * c));
      if (!std::isfinite(e)) throw StiffnessError("integrator: non-finite state", diag_lambda);
      if (e <= 1.0) {
        x = xnew;
        y.swap(ynew);
        k1.swap(k7);
        double fac = 0.9 * std::pow(std::max(e, 1e-10), -0.14) * std::pow(err_prev, 0.08);
        fac = std::clamp(fac, 0.2, 5.0);
        err_prev = std::max(e, 1e-4);
        h = std::min(hmax, h * fac);
      } else {
        h *= std::max(0.2, 0.9 * std::pow(e, -0.2));
      }
    }
    on_stop(si, y);
  }
}

inline std::vector<double> merged_stops(double x0, const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> s;
  for (double v : a)
    if (v > x0) s.push_back(v);
  const double end = s.empty() ? x0 : *std::max_element(s.begin(), s.end());
  for (double v : b)
    if (v > x0 && v < end) s.push_back(v);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

inline double oscillation_step(const BlockStructure& blocks, cplx lambda) {
  return 0.1 / (1.0 + std::abs(lambda) * blocks.max_abs_weight());
}

}  // namespace detail

struct FundamentalSolution {
  cplx lambda;
  int order = 0;
  std::vector<double> grid;
  std::vector<std::vector<CMatrix>> values;  // values[i][p] = d^p/dlambda^p Phi(grid[i]; lambda)
  const CMatrix& at(std::size_t i, int p = 0) const { return values[i][static_cast<std::size_t>(p)]; }
};

inline std::vector<double> uniform_grid(std::size_t points) {
  if (points < 2) throw DomainError("uniform_grid: need at least 2 points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = static_cast<double>(i) / static_cast<double>(points - 1);
  g.back() = 1.0;
  return g;
}

namespace detail {

inline void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw DomainError("grid must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) throw DomainError("grid abscissae must lie in [0,1]");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("grid abscissae must be strictly increasing");
  }
}

inline void check_order(int order, const IntegratorOptions& opt) {
  if (order < 0 || order > opt.max_order)
    throw DomainError("derivative order " + std::to_string(order) + " outside [0, " + std::to_string(opt.max_order) + "]");
}

}  // namespace detail

// Integrates the augmented system Phi_p' = i B^{-1} [(lambda - Q) Phi_p + p Phi_{p-1}], p = 0..order.
inline FundamentalSolution integrate_fundamental(const SystemProblem& problem, cplx lambda, int order,
                                                 const std::vector<double>& grid, const IntegratorOptions& opt = {}) {
  detail::check_grid(grid);
  detail::check_order(order, opt);
  const int n = problem.n();
  const CVector ib = I_unit * problem.blocks.coordinate_weights();  // i B^{-1} is diagonal
  const int blocks = order + 1;
  CMatrix y = CMatrix::Zero(n, n * blocks);
  y.leftCols(n).setIdentity();
  FundamentalSolution out{lambda, order, grid, std::vector<std::vector<CMatrix>>(grid.size())};
  auto store = [&](std::size_t i, const CMatrix& state) {
    out.values[i].resize(static_cast<std::size_t>(blocks));
    for (int p = 0; p < blocks; ++p) out.values[i][static_cast<std::size_t>(p)] = state.middleCols(p * n, n);
  };
  std::size_t first = 0;
  if (grid.front() == 0.0) store(first++, y);
  CMatrix q(n, n), m(n, n);
  const bool zero_q = problem.potential.is_zero();
  const bool const_q = problem.potential.kind() == PotentialKind::Constant;
  if (const_q) problem.potential.eval_into(0.0, q);
  auto rhs = [&](double x, const CMatrix& s, CMatrix& ds) {
    if (zero_q) {
      for (int p = 0; p < blocks; ++p) {
        ds.middleCols(p * n, n) = (lambda * ib).asDiagonal() * s.middleCols(p * n, n);
        if (p > 0) ds.middleCols(p * n, n) += static_cast<double>(p) * ib.asDiagonal() * s.middleCols((p - 1) * n, n);
      }
      return;
    }
    if (!const_q) problem.potential.eval_into(std::clamp(x, 0.0, 1.0), q);
    m = -q;
    m.diagonal().array() += lambda;
    m = ib.asDiagonal() * m;
    for (int p = 0; p < blocks; ++p) {
      ds.middleCols(p * n, n).noalias() = m * s.middleCols(p * n, n);
      if (p > 0) ds.middleCols(p * n, n) += static_cast<double>(p) * ib.asDiagonal() * s.middleCols((p - 1) * n, n);
    }
  };
  std::vector<double> outputs(grid.begin() + static_cast<std::ptrdiff_t>(first), grid.end());
  const auto stops = detail::merged_stops(0.0, outputs, problem.potential.breakpoints());
  std::size_t next = first;
  detail::dopri(rhs, 0.0, y, stops, detail::oscillation_step(problem.blocks, lambda), opt, lambda,
                [&](std::size_t si, const CMatrix& state) {
                  if (next < grid.size() && stops[si] == grid[next]) store(next++, state);
                });
  return out;
}

// Solution of the order-0 system on [x0, x1] started from y0 at x0.
inline CMatrix propagate(const SystemProblem& problem, cplx lambda, double x0, double x1, const CMatrix& y0,
                         const IntegratorOptions& opt = {}) {
  if (!(x0 >= 0.0 && x1 <= 1.0 && x1 >= x0)) throw DomainError("propagate: need 0 <= x0 <= x1 <= 1");
  const int n = problem.n();
  const CVector ib = I_unit * problem.blocks.coordinate_weights();
  if (problem.potential.is_zero()) return (ib * lambda * (x1 - x0)).array().exp().matrix().asDiagonal() * y0;
  if (problem.potential.kind() == PotentialKind::Constant) {
    CMatrix m = -eval_potential(problem.potential, 0.0);
    m.diagonal().array() += lambda;
    return mat_exp((x1 - x0) * ib.asDiagonal() * m) * y0;
  }
  if (x1 == x0) return y0;
  CMatrix y = y0, q(n, n), m(n, n);
  auto rhs = [&](double x, const CMatrix& s, CMatrix& ds) {
    problem.potential.eval_into(std::clamp(x, 0.0, 1.0), q);
    m = -q;
    m.diagonal().array() += lambda;
    ds.noalias() = ib.asDiagonal() * m * s;
  };
  const auto stops = detail::merged_stops(x0, {x1}, problem.potential.breakpoints());
  detail::dopri(rhs, x0, y, stops, detail::oscillation_step(problem.blocks, lambda), opt, lambda,
                [](std::size_t, const CMatrix&) {});
  return y;
}

// Q = 0: Phi^{(p)}(x) = diag((i b_k x)^p exp(i b_k lambda x)).
inline FundamentalSolution fundamental_closed_form(const BlockStructure& blocks, cplx lambda, int order,
                                                   const std::vector<double>& grid) {
  detail::check_grid(grid);
  const CVector ib = I_unit * blocks.coordinate_weights();
  FundamentalSolution out{lambda, order, grid, std::vector<std::vector<CMatrix>>(grid.size())};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    const CVector e = (ib * lambda * x).array().exp().matrix();
    CVector d = e;
    for (int p = 0; p <= order; ++p) {
      out.values[i].push_back(d.asDiagonal());
      d = d.cwiseProduct(ib * x);
    }
  }
  return out;
}

// Constant Q: derivatives from the exponential of the block bidiagonal matrix with x M(lambda) on the diagonal
// and x dM/dlambda above it; block (0, p) equals Phi^{(p)} / p!.
inline FundamentalSolution fundamental_constant(const SystemProblem& problem, cplx lambda, int order,
                                                const std::vector<double>& grid) {
  detail::check_grid(grid);
  if (problem.potential.kind() != PotentialKind::Constant && !problem.potential.is_zero())
    throw ApplicabilityError("fundamental_constant: potential is not constant");
  const int n = problem.n();
  const CVector ib = I_unit * problem.blocks.coordinate_weights();
  CMatrix m = -eval_potential(problem.potential, 0.0);
  m.diagonal().array() += lambda;
  m = ib.asDiagonal() * m;
  const int nb = order + 1;
  CMatrix big = CMatrix::Zero(n * nb, n * nb);
  for (int p = 0; p < nb; ++p) {
    big.block(p * n, p * n, n, n) = m;
    if (p + 1 < nb) big.block(p * n, (p + 1) * n, n, n) = ib.asDiagonal();
  }
  FundamentalSolution out{lambda, order, grid, std::vector<std::vector<CMatrix>>(grid.size())};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const CMatrix e = mat_exp(grid[i] * big);
    double fact = 1.0;
    for (int p = 0; p < nb; ++p) {
      if (p > 0) fact *= p;
      out.values[i].push_back(fact * e.block(0, p * n, n, n));
    }
  }
  return out;
}

enum class EvalMethod { Auto, ClosedForm, Exponential, Integrate };

inline const char* to_string(EvalMethod m) {
  switch (m) {
    case EvalMethod::Auto: return "auto";
    case EvalMethod::ClosedForm: return "closed-form";
    case EvalMethod::Exponential: return "matrix-exponential";
    case EvalMethod::Integrate: return "integrate";
  }
  return "?";
}

inline EvalMethod resolve_method(const SystemProblem& p, EvalMethod m) {
  if (m != EvalMethod::Auto) {
    if (m == EvalMethod::ClosedForm && !p.potential.is_zero())
      throw ApplicabilityError("closed-form evaluation needs a zero potential");
    if (m == EvalMethod::Exponential && !(p.potential.is_zero() || p.potential.kind() == PotentialKind::Constant))
      throw ApplicabilityError("matrix-exponential evaluation needs a constant potential");
    return m;
  }
  if (p.potential.is_zero()) return EvalMethod::ClosedForm;
  if (p.potential.kind() == PotentialKind::Constant) return EvalMethod::Exponential;
  return EvalMethod::Integrate;
}

inline FundamentalSolution fundamental(const SystemProblem& p, cplx lambda, int order, const std::vector<double>& grid,
                                       EvalMethod method = EvalMethod::Auto, const IntegratorOptions& opt = {}) {
  switch (resolve_method(p, method)) {
    case EvalMethod::ClosedForm: return fundamental_closed_form(p.blocks, lambda, order, grid);
    case EvalMethod::Exponential: return fundamental_constant(p, lambda, order, grid);
    default: return integrate_fundamental(p, lambda, order, grid, opt);
  }
}

struct GaugeTransform {
  std::vector<double> grid;
  std::vector<CMatrix> W;
  CMatrix W1;
  PotentialSpec transformed;  // Q~ = W^{-1} (Q - Q_1) W, zero block-diagonal
  SystemProblem induced;      // (B, Q~, C, D W(1))
};

// Removes the block-diagonal part Q_1 of Q by W' = -i B^{-1} Q_1 W, W(0) = I.
inline GaugeTransform gauge_transform(const SystemProblem& problem, std::size_t grid_points = 1025,
                                      const IntegratorOptions& opt = {}) {
  const int n = problem.n();
  GaugeTransform g;
  g.grid = uniform_grid(grid_points);
  if (has_zero_block_diagonal(problem.potential, problem.blocks)) {
    g.W.assign(g.grid.size(), CMatrix::Identity(n, n));
    g.W1 = CMatrix::Identity(n, n);
    g.transformed = problem.potential;
    g.induced = problem;
    return g;
  }
  const CVector ib = I_unit * problem.blocks.coordinate_weights();
  const auto mask = block_diagonal_mask(problem.blocks).cast<cplx>().eval();
  CMatrix q(n, n);
  auto rhs = [&](double x, const CMatrix& w, CMatrix& dw) {
    problem.potential.eval_into(std::clamp(x, 0.0, 1.0), q);
    dw.noalias() = -(ib.asDiagonal() * q.cwiseProduct(mask)) * w;
  };
  CMatrix w = CMatrix::Identity(n, n);
  g.W.resize(g.grid.size());
  g.W[0] = w;
  std::vector<double> outputs(g.grid.begin() + 1, g.grid.end());
  const auto stops = detail::merged_stops(0.0, outputs, problem.potential.breakpoints());
  double qmax = 0.0;
  for (double x : {0.0, 0.5, 1.0}) qmax = std::max(qmax, eval_potential(problem.potential, x).norm());
  std::size_t next = 1;
  detail::dopri(rhs, 0.0, w, stops, 0.1 / (1.0 + qmax * problem.blocks.max_abs_weight()), opt, cplx(0.0),
                [&](std::size_t si, const CMatrix& state) {
                  if (next < g.grid.size() && stops[si] == g.grid[next]) g.W[next++] = state;
                });
  g.W1 = g.W.back();
  std::vector<CMatrix> qt(g.grid.size());
  for (std::size_t i = 0; i < g.grid.size(); ++i) {
    const CMatrix qi = eval_potential(problem.potential, g.grid[i]);
    const CMatrix off = qi - qi.cwiseProduct(mask);
    CMatrix t = solve(g.W[i], off * g.W[i]);
    t = t - t.cwiseProduct(mask);  // exact zeros on the block diagonal
    qt[i] = t;
  }
  g.transformed = PotentialSpec::grid(g.grid, std::move(qt));
  g.induced = SystemProblem{problem.blocks, g.transformed, BoundaryPair{problem.bc.C, problem.bc.D * g.W1}};
  return g;
}

struct AsymptoticSample {
  double t = 0.0;
  cplx lambda;
  double diagonal_deviation = 0.0;     // max |e^{-i b_k lambda x} y_kk(x) - 1|
  double offdiagonal_deviation = 0.0;  // max |e^{-i b_k lambda x} y_jk(x)|, j != k
  std::optional<cplx> normalized_determinant;  // Delta(i z t) e^{-beta t}
};

struct AsymptoticReport {
  cplx z;
  std::vector<int> order;  // block ordering on the ray
  std::vector<AsymptoticSample> samples;
  double burn_in = 0.0;
  bool diagonal_monotone = true;
  bool offdiagonal_monotone = true;
  std::optional<cplx> limit_determinant;  // det T_z(C, D) when z is admissible
  std::vector<std::string> warnings;
};

namespace detail {

inline double angular_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

}  // namespace detail

// Birkhoff-type solutions Y(x; lambda) on lambda = i z t by multiple shooting: for column k, coordinates whose
// exponential grows no faster than e^{i b_k lambda x} are pinned at x = 0 (to delta_jk), faster ones at x = 1 (to 0).
inline CMatrix birkhoff_solution_samples(const SystemProblem& problem, cplx lambda, const std::vector<int>& order,
                                         std::vector<double>& nodes, const IntegratorOptions& opt = {}) {
  const int n = problem.n();
  const CVector b = problem.blocks.coordinate_weights();
  const auto cb = problem.blocks.coordinate_blocks();
  std::vector<int> pos(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) pos[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
  const double rate = std::abs(lambda) * problem.blocks.max_abs_weight();
  const int segs = std::max(4, static_cast<int>(std::ceil(rate / 3.0)));
  nodes = uniform_grid(static_cast<std::size_t>(segs) + 1);
  std::vector<CMatrix> prop(static_cast<std::size_t>(segs));
  for (int s = 0; s < segs; ++s)
    prop[static_cast<std::size_t>(s)] = propagate(problem, lambda, nodes[static_cast<std::size_t>(s)],
                                                  nodes[static_cast<std::size_t>(s) + 1], CMatrix::Identity(n, n), opt);
  // Result columns: node-major blocks of n rows; entry (m*n + j, k) = e^{-i b_k lambda x_m} y_jk(x_m).
  CMatrix out(n * (segs + 1), n);
  const Eigen::Index dim = n * (segs + 1);
  for (int k = 0; k < n; ++k) {
    CMatrix sys = CMatrix::Zero(dim, dim);
    CVector rhs = CVector::Zero(dim);
    for (int s = 0; s < segs; ++s) {
      const double h = nodes[static_cast<std::size_t>(s) + 1] - nodes[static_cast<std::size_t>(s)];
      const cplx scale = std::exp(-I_unit * b(k) * lambda * h);
      sys.block(s * n, (s + 1) * n, n, n).setIdentity();
      sys.block(s * n, s * n, n, n) = -scale * prop[static_cast<std::size_t>(s)];
    }
    const int row0 = segs * n;
    for (int j = 0; j < n; ++j) {
      const bool at_zero = pos[static_cast<std::size_t>(cb[static_cast<std::size_t>(j)])] <=
                           pos[static_cast<std::size_t>(cb[static_cast<std::size_t>(k)])];
      if (at_zero) {
        sys(row0 + j, j) = 1.0;
        rhs(row0 + j) = (j == k) ? 1.0 : 0.0;
      } else {
        sys(row0 + j, segs * n + j) = 1.0;
      }
    }
    out.col(k) = Eigen::PartialPivLU<CMatrix>(sys).solve(rhs);
  }
  return out;
}

struct AsymptoticOptions {
  double burn_in = 0.0;
  double near_boundary_angle = 0.05;
  IntegratorOptions integrator{};
};

inline AsymptoticReport check_asymptotics(const SystemProblem& problem, cplx z, const std::vector<double>& ts,
                                          const AsymptoticOptions& aopt = {}) {
  if (!has_zero_block_diagonal(problem.potential, problem.blocks))
    throw ApplicabilityError("check_asymptotics: the potential must have zero block diagonal (apply gauge_transform first)");
  if (std::abs(z) == 0.0) throw DomainError("check_asymptotics: z must be nonzero");
  z /= std::abs(z);
  AsymptoticReport rep;
  rep.z = z;
  rep.burn_in = aopt.burn_in;
  const auto fan = build_sector_fan(problem.blocks, FanMode::Ordering);
  const double th = std::arg(z);
  for (double a : fan.boundary_angles) {
    const double d = detail::angular_distance(th, a);
    if (d < 1e-12) throw ApplicabilityError("check_asymptotics: z lies on an ordering boundary (tied exponentials)");
    if (d < aopt.near_boundary_angle)
      rep.warnings.push_back("ray is within " + std::to_string(d) + " rad of an ordering boundary; expect slow convergence");
  }
  const int r = problem.blocks.r();
  rep.order.resize(static_cast<std::size_t>(r));
  for (int j = 0; j < r; ++j) rep.order[static_cast<std::size_t>(j)] = j;
  std::sort(rep.order.begin(), rep.order.end(), [&](int x, int y) {
    return -(problem.blocks.weights[static_cast<std::size_t>(x)] * z).real() <
           -(problem.blocks.weights[static_cast<std::size_t>(y)] * z).real();
  });
  const int n = problem.n();
  const CVector b = problem.blocks.coordinate_weights();
  try {
    rep.limit_determinant = det(selection_matrix(problem.bc, problem.blocks, z).matrix);
  } catch (const AdmissibilityError&) {
  }
  cplx beta = 0.0;
  for (int k = 0; k < n; ++k)
    if ((b(k) * z).real() < 0.0) beta += -b(k) * z;
  for (double t : ts) {
    AsymptoticSample smp;
    smp.t = t;
    smp.lambda = I_unit * z * t;
    std::vector<double> nodes;
    const CMatrix y = birkhoff_solution_samples(problem, smp.lambda, rep.order, nodes, aopt.integrator);
    for (std::size_t m = 0; m < nodes.size(); ++m)
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) {
          const cplx v = y(static_cast<Eigen::Index>(m) * n + j, k);
          if (j == k)
            smp.diagonal_deviation = std::max(smp.diagonal_deviation, std::abs(v - 1.0));
          else
            smp.offdiagonal_deviation = std::max(smp.offdiagonal_deviation, std::abs(v));
        }
    if (rep.limit_determinant) {
      // Delta = det(C Y(0) + D Y(1)) / det Y(0), assembled from the scaled Birkhoff columns so that nothing overflows.
      const Eigen::Index last = static_cast<Eigen::Index>(nodes.size() - 1) * n;
      const CMatrix y0 = y.topRows(n), y1 = y.middleRows(last, n);
      CMatrix a(n, n);
      for (int k = 0; k < n; ++k) {
        const cplx e = std::exp(b(k) * z * t);  // e^{-i b_k lambda}
        if ((b(k) * z).real() < 0.0)
          a.col(k) = problem.bc.C * y0.col(k) * e + problem.bc.D * y1.col(k);
        else
          a.col(k) = problem.bc.C * y0.col(k) + problem.bc.D * y1.col(k) / e;
      }
      smp.normalized_determinant = det(a) / det(y0);
    }
    rep.samples.push_back(smp);
  }
  const AsymptoticSample* prev = nullptr;
  for (const auto& s : rep.samples) {
    if (s.t < aopt.burn_in) continue;
    if (prev) {
      rep.diagonal_monotone = rep.diagonal_monotone && s.diagonal_deviation <= prev->diagonal_deviation;
      rep.offdiagonal_monotone = rep.offdiagonal_monotone && s.offdiagonal_deviation <= prev->offdiagonal_deviation;
    }
    prev = &s;
  }
  return rep;
}

}  // namespace birk
