#pragma once

// Root-function chains, biorthogonality and minimality diagnostics, completeness residuals, explicit incompleteness
// witnesses and the completeness criteria for 2x2 systems.
//
// Grid functions are stored as n x points matrices on a uniform grid with an odd number of points, so inner
// products can use composite Simpson weights.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "birk/regularity.hpp"
#include "birk/spectrum.hpp"

namespace birk {

using GridFunction = CMatrix;

inline std::vector<double> simpson_weights(const std::vector<double>& grid) {
  const std::size_t m = grid.size();
  if (m < 3 || m % 2 == 0) throw DomainError("simpson_weights: need an odd number (>= 3) of grid points");
  const double h = (grid.back() - grid.front()) / static_cast<double>(m - 1);
  for (std::size_t i = 1; i < m; ++i)
    if (std::abs(grid[i] - grid[i - 1] - h) > 1e-9 * h) throw DomainError("simpson_weights: grid is not uniform");
  std::vector<double> w(m);
  for (std::size_t i = 0; i < m; ++i) w[i] = (i == 0 || i + 1 == m) ? h / 3.0 : (i % 2 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
  return w;
}

// <f, g> = int g^H f.
inline cplx inner(const GridFunction& f, const GridFunction& g, const std::vector<double>& w) {
  if (f.rows() != g.rows() || f.cols() != g.cols() || static_cast<std::size_t>(f.cols()) != w.size())
    throw DimensionError("inner: grid functions do not match the quadrature");
  cplx s = 0.0;
  for (Eigen::Index i = 0; i < f.cols(); ++i) s += w[static_cast<std::size_t>(i)] * g.col(i).dot(f.col(i));
  return s;
}

inline double l2_norm(const GridFunction& f, const std::vector<double>& w) {
  return std::sqrt(std::max(0.0, inner(f, f, w).real()));
}

struct RootChain {
  cplx lambda;
  int multiplicity = 1;  // algebraic multiplicity of lambda
  int j_index = 0;       // adjugate column that generated the chain
  int shift = 0;         // index s of the first nonvanishing Taylor element
  std::vector<GridFunction> chain;  // u^s, ..., normalised so that the eigenfunction has unit norm
  std::vector<double> norms;
  std::vector<double> bc_residuals;  // |C u(0) + D u(1)| / |u|
};

struct ChainOptions {
  EvalMethod method = EvalMethod::Auto;
  IntegratorOptions integrator{};
  double vanish_tol = 1e-6;  // Taylor element counts as zero below this fraction of the largest one
  double gram_tol = 1e-8;    // squared distance of a normalised eigenfunction from the kept ones
  double bc_tol = 1e-8;
};

struct RootSystem {
  std::vector<double> grid;
  std::vector<double> weights;
  std::vector<RootChain> chains;  // ordered by |lambda|, then argument
  std::vector<std::string> warnings;

  // All chain elements in chain order.
  std::vector<GridFunction> functions() const {
    std::vector<GridFunction> out;
    for (const auto& c : chains)
      for (const auto& u : c.chain) out.push_back(u);
    return out;
  }
  std::size_t size() const {
    std::size_t s = 0;
    for (const auto& c : chains) s += c.chain.size();
    return s;
  }
};

namespace detail {

inline double factorial(int p) {
  double f = 1.0;
  for (int k = 2; k <= p; ++k) f *= k;
  return f;
}

inline std::vector<double> odd_uniform_grid(std::size_t points) {
  if (points < 3 || points % 2 == 0) throw DomainError("grid must have an odd number (>= 3) of points");
  if (points > 1000001) throw DomainError("grid larger than 10^6 points");
  return uniform_grid(points);
}

inline double bc_residual(const BoundaryPair& bc, const GridFunction& u) {
  const double un = u.norm() / std::sqrt(static_cast<double>(u.cols()));
  const double r = (bc.C * u.col(0) + bc.D * u.col(u.cols() - 1)).norm();
  return un > 0.0 ? r / un : r;
}

// Distance of f from span(basis) for orthonormal basis entries (two Gram-Schmidt passes); f is overwritten by the
// orthogonal remainder.
inline double orthogonalize(GridFunction& f, const std::vector<GridFunction>& basis, const std::vector<double>& w) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : basis) f -= inner(f, q, w) * q;
  return l2_norm(f, w);
}

}  // namespace detail

// Taylor elements u^p_j(x) = (1/p!) d^p/dlambda^p Phi(x; lambda) adj(A(lambda)) e_j at one eigenvalue, p < m,
// as out[p][j].
inline std::vector<std::vector<GridFunction>> taylor_elements(const SystemProblem& p, cplx lambda, int m,
                                                              const std::vector<double>& grid,
                                                              const ChainOptions& opt = {}) {
  const int n = p.n();
  IntegratorOptions io = opt.integrator;
  io.max_order = std::max(io.max_order, m - 1);
  const auto f = fundamental(p, lambda, m - 1, grid, opt.method, io);
  const std::size_t last = grid.size() - 1;
  std::vector<CMatrix> a;
  for (int q = 0; q < m; ++q) a.push_back(p.bc.D * f.at(last, q) / detail::factorial(q));
  a[0] += p.bc.C;
  const auto adj = adjugate_taylor(a, m - 1);
  std::vector<std::vector<GridFunction>> out(static_cast<std::size_t>(m),
                                             std::vector<GridFunction>(static_cast<std::size_t>(n)));
  for (int q = 0; q < m; ++q) {
    for (int j = 0; j < n; ++j) out[q][j] = GridFunction::Zero(n, static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CMatrix u = CMatrix::Zero(n, n);
      for (int s = 0; s <= q; ++s) u += f.at(i, s) / detail::factorial(s) * adj[static_cast<std::size_t>(q - s)];
      for (int j = 0; j < n; ++j) out[q][j].col(static_cast<Eigen::Index>(i)) = u.col(j);
    }
  }
  return out;
}

inline RootSystem build_chains(const SystemProblem& p, const SpectrumReport& spectrum, std::size_t points = 2001,
                               const ChainOptions& opt = {}) {
  if (spectrum.degenerate) throw ApplicabilityError("build_chains: characteristic determinant vanishes identically");
  RootSystem sys;
  sys.grid = detail::odd_uniform_grid(points);
  sys.weights = simpson_weights(sys.grid);
  const auto& w = sys.weights;
  const int n = p.n();
  auto eigen = spectrum.eigenvalues;
  std::sort(eigen.begin(), eigen.end(), spectrum_order);
  for (const auto& ev : eigen) {
    const int m = ev.multiplicity;
    const auto elems = taylor_elements(p, ev.lambda, m, sys.grid, opt);
    struct Candidate {
      int j, s;
      double scale;
    };
    std::vector<std::vector<double>> norms(static_cast<std::size_t>(n));
    double top = 0.0;
    for (int j = 0; j < n; ++j)
      for (int q = 0; q < m; ++q) {
        norms[j].push_back(l2_norm(elems[q][j], w));
        top = std::max(top, norms[j].back());
      }
    std::vector<Candidate> cands;
    for (int j = 0; j < n && top > 0.0; ++j) {
      int s = 0;
      while (s < m && norms[j][s] <= opt.vanish_tol * top) ++s;
      if (s < m) cands.push_back({j, s, norms[j][s]});
    }
    // Longest chains first; among equals, the largest leading element.
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return a.s != b.s ? a.s < b.s : a.scale > b.scale;
    });
    std::vector<GridFunction> kept_heads;
    std::vector<RootChain> kept;
    int total = 0;
    for (const auto& c : cands) {
      if (total >= m) break;
      GridFunction head = elems[c.s][c.j] / c.scale;
      GridFunction rem = head;
      const double d = detail::orthogonalize(rem, kept_heads, w);
      if (d * d <= opt.gram_tol) continue;
      kept_heads.push_back(rem / d);
      RootChain rc;
      rc.lambda = ev.lambda;
      rc.multiplicity = m;
      rc.j_index = c.j;
      rc.shift = c.s;
      const int len = std::min(m - c.s, m - total);
      for (int q = c.s; q < c.s + len; ++q) {
        GridFunction u = elems[q][c.j] / c.scale;
        rc.norms.push_back(l2_norm(u, w));
        rc.bc_residuals.push_back(detail::bc_residual(p.bc, u));
        rc.chain.push_back(std::move(u));
      }
      total += len;
      kept.push_back(std::move(rc));
    }
    if (total != m) {
      std::string msg = "build_chains: at lambda = (" + std::to_string(ev.lambda.real()) + ", " +
                        std::to_string(ev.lambda.imag()) + ") kept " + std::to_string(total) + " root functions, " +
                        "multiplicity " + std::to_string(m) + "; candidate shifts:";
      for (const auto& c : cands) msg += " j" + std::to_string(c.j) + "/s" + std::to_string(c.s);
      throw ConstructionError(msg);
    }
    for (auto& rc : kept) {
      for (std::size_t q = 0; q < rc.bc_residuals.size(); ++q)
        if (rc.bc_residuals[q] > opt.bc_tol)
          sys.warnings.push_back("boundary residual " + std::to_string(rc.bc_residuals[q]) + " at lambda = (" +
                                 std::to_string(rc.lambda.real()) + ", " + std::to_string(rc.lambda.imag()) + ")");
      sys.chains.push_back(std::move(rc));
    }
  }
  return sys;
}

// Relative residual of the chain relation -iB u_p' + Q u_p - lambda u_p = u_{p-1} (u_{-1} = 0), with u' from
// sixth-order central differences at interior nodes.
inline std::vector<double> chain_ode_residuals(const SystemProblem& p, const RootChain& c,
                                               const std::vector<double>& grid) {
  const int n = p.n();
  const auto m = static_cast<Eigen::Index>(grid.size());
  if (m < 9) throw DomainError("chain_ode_residuals: grid too coarse");
  const double h = grid[1] - grid[0];
  const CMatrix b = p.blocks.B();
  std::vector<double> out;
  CMatrix q;
  for (std::size_t k = 0; k < c.chain.size(); ++k) {
    const auto& u = c.chain[k];
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 3; i + 3 < m; ++i) {
      const CVector du = (-u.col(i - 3) + 9.0 * u.col(i - 2) - 45.0 * u.col(i - 1) + 45.0 * u.col(i + 1) -
                          9.0 * u.col(i + 2) + u.col(i + 3)) /
                         (60.0 * h);
      p.potential.eval_into(grid[static_cast<std::size_t>(i)], q);
      if (q.size() == 0) q = CMatrix::Zero(n, n);
      CVector r = -I_unit * (b * du) + q * u.col(i) - c.lambda * u.col(i);
      if (k > 0) r -= c.chain[k - 1].col(i);
      num = std::max(num, r.norm());
      den = std::max(den, (std::abs(c.lambda) + 1.0) * u.col(i).norm());
    }
    out.push_back(den > 0.0 ? num / den : num);
  }
  return out;
}

// Solutions Phi(x; lambda) v, v in ker A(lambda), normalised; for degenerate problems every lambda contributes.
inline std::vector<GridFunction> solution_family(const SystemProblem& p, const std::vector<cplx>& lambdas,
                                                 const std::vector<double>& grid, EvalMethod method = EvalMethod::Auto,
                                                 const IntegratorOptions& io = {}, Tolerance tol = {1e-8}) {
  const auto w = simpson_weights(grid);
  std::vector<GridFunction> out;
  for (cplx l : lambdas) {
    const auto f = fundamental(p, l, 0, grid, method, io);
    const CMatrix a = p.bc.C + p.bc.D * f.at(grid.size() - 1);
    for (const auto& v : nullspace(a, tol)) {
      GridFunction u(p.n(), static_cast<Eigen::Index>(grid.size()));
      for (std::size_t i = 0; i < grid.size(); ++i) u.col(static_cast<Eigen::Index>(i)) = f.at(i) * v;
      out.push_back(u / l2_norm(u, w));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------------------------
// Adjoint pipeline and minimality

struct VolterraRow {
  int component = 0;  // 0-based
  int endpoint = 0;   // 0 or 1
};

// Conditions y_k(e) = 0 contained in the row space of (C D).
inline std::vector<VolterraRow> volterra_rows(const BoundaryPair& bc, double tol = 1e-10) {
  const CMatrix a = bc.combined();
  const int n = static_cast<int>(a.rows());
  Eigen::JacobiSVD<CMatrix> svd(a.transpose(), Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * std::max(1.0, s(0))) ++rank;
  const CMatrix u = svd.matrixU().leftCols(rank);
  std::vector<VolterraRow> out;
  for (int k = 0; k < 2 * n; ++k)
    if (1.0 - u.row(k).squaredNorm() <= tol) out.push_back({k % n, k / n});
  return out;
}

inline std::string to_string(const VolterraRow& v) {
  return "y" + std::to_string(v.component + 1) + "(" + std::to_string(v.endpoint) + ") = 0";
}

struct AdjointResult {
  SystemProblem problem;
  SpectrumReport spectrum;
  RootSystem roots;
  bool degenerate = false;
  bool paired = true;                 // eigenvalues are conjugates of the primary ones
  std::vector<std::string> unpaired;  // description of each mismatch
  std::vector<std::string> incompleteness;  // reasons the adjoint root system is known to be incomplete
};

struct AdjointOptions {
  ChainOptions chains{};
  SearchOptions search{};
  double pair_tol = 1e-6;
};

inline std::string format_lambda(cplx l) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%.10g, %.10g)", l.real(), l.imag());
  return buf;
}

inline AdjointResult adjoint_chains(const SystemProblem& p, const SpectrumReport& primary, std::size_t points = 2001,
                                    const AdjointOptions& opt = {}) {
  AdjointResult res{adjoint_problem(p), {}, {}, false, true, {}, {}};
  const CharFunction cf(res.problem, opt.chains.method, opt.chains.integrator);
  const Window win{primary.window.re_lo, primary.window.re_hi, -primary.window.im_hi, -primary.window.im_lo};
  res.degenerate = detect_degenerate(cf).degenerate;
  if (res.problem.potential.is_zero()) {
    for (const auto& v : volterra_rows(res.problem.bc))
      res.incompleteness.push_back("adjoint condition " + to_string(v) + " with zero potential");
  }
  if (res.degenerate) {
    res.spectrum.window = win;
    res.spectrum.degenerate = true;
    res.incompleteness.push_back("adjoint characteristic determinant vanishes identically");
    return res;
  }
  res.spectrum = find_eigenvalues(cf, win, opt.search);
  res.roots = build_chains(res.problem, res.spectrum, points, opt.chains);
  auto match = [&](const std::vector<Eigenvalue>& from, const std::vector<Eigenvalue>& to, const char* side) {
    for (const auto& e : from) {
      const auto it = std::find_if(to.begin(), to.end(), [&](const Eigenvalue& f) {
        return std::abs(std::conj(f.lambda) - e.lambda) <= opt.pair_tol && f.multiplicity == e.multiplicity;
      });
      if (it == to.end()) {
        res.paired = false;
        res.unpaired.push_back(std::string(side) + " eigenvalue " + format_lambda(e.lambda) + " (multiplicity " +
                               std::to_string(e.multiplicity) + ") has no conjugate partner");
      }
    }
  };
  match(primary.eigenvalues, res.spectrum.eigenvalues, "primary");
  match(res.spectrum.eigenvalues, primary.eigenvalues, "adjoint");
  return res;
}

struct ClusterGram {
  cplx lambda;
  int dimension = 0;
  CMatrix gram;  // <u_p, v_q> for unit-normalised elements
  double sigma_min = 0.0;
  double condition = 0.0;
};

struct MinimalityReport {
  std::vector<ClusterGram> clusters;
  double max_cross = 0.0;  // largest |<u, v>| between different clusters, unit-normalised
  double tolerance = 1e-6;
  bool minimal = true;     // every cluster Gram has sigma_min above tolerance
};

inline MinimalityReport minimality_metric(const RootSystem& primary, const RootSystem& adjoint, double pair_tol = 1e-6,
                                          double sigma_tol = 1e-6) {
  if (primary.grid.size() != adjoint.grid.size())
    throw PairingError("minimality_metric: primary and adjoint grids differ");
  const auto& w = primary.weights;
  struct Cluster {
    cplx lambda;
    std::vector<GridFunction> fns;
  };
  auto gather = [&](const RootSystem& s, bool conj) {
    std::vector<Cluster> out;
    for (const auto& c : s.chains) {
      const cplx l = conj ? std::conj(c.lambda) : c.lambda;
      auto it = std::find_if(out.begin(), out.end(), [&](const Cluster& k) { return std::abs(k.lambda - l) <= pair_tol; });
      if (it == out.end()) {
        out.push_back({l, {}});
        it = out.end() - 1;
      }
      for (const auto& u : c.chain) it->fns.push_back(u / l2_norm(u, w));
    }
    return out;
  };
  const auto pc = gather(primary, false);
  const auto ac = gather(adjoint, true);
  if (pc.size() != ac.size())
    throw PairingError("minimality_metric: " + std::to_string(pc.size()) + " primary clusters vs " +
                       std::to_string(ac.size()) + " adjoint clusters");
  MinimalityReport rep;
  rep.tolerance = sigma_tol;
  std::vector<int> partner(pc.size(), -1);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    for (std::size_t k = 0; k < ac.size(); ++k)
      if (std::abs(pc[i].lambda - ac[k].lambda) <= pair_tol) partner[i] = static_cast<int>(k);
    if (partner[i] < 0 || ac[static_cast<std::size_t>(partner[i])].fns.size() != pc[i].fns.size())
      throw PairingError("minimality_metric: no adjoint cluster of matching dimension at lambda = " +
                         format_lambda(pc[i].lambda));
  }
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const auto& u = pc[i].fns;
    const auto& v = ac[static_cast<std::size_t>(partner[i])].fns;
    ClusterGram g{pc[i].lambda, static_cast<int>(u.size()), CMatrix(u.size(), v.size()), 0.0, 0.0};
    for (std::size_t a = 0; a < u.size(); ++a)
      for (std::size_t b = 0; b < v.size(); ++b)
        g.gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = inner(u[a], v[b], w);
    const Eigen::VectorXd s = singular_values(g.gram);
    g.sigma_min = s(s.size() - 1);
    g.condition = g.sigma_min > 0.0 ? s(0) / g.sigma_min : std::numeric_limits<double>::infinity();
    rep.minimal = rep.minimal && g.sigma_min > sigma_tol;
    rep.clusters.push_back(std::move(g));
    for (std::size_t k = 0; k < ac.size(); ++k) {
      if (static_cast<int>(k) == partner[i]) continue;
      for (const auto& a : u)
        for (const auto& b : ac[k].fns) rep.max_cross = std::max(rep.max_cross, std::abs(inner(a, b, w)));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------------------------------------------
// Completeness residuals

struct Probe {
  std::string name;
  GridFunction values;
};

// col(1, 0, ...), col(x(1-x), 0, ...) and a smooth trigonometric vector with random coefficients.
inline std::vector<Probe> default_probes(int n, const std::vector<double>& grid, unsigned seed = 20240917) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  std::vector<Probe> out;
  GridFunction unit = GridFunction::Zero(n, m), poly = GridFunction::Zero(n, m), trig = GridFunction::Zero(n, m);
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<cplx> coef(static_cast<std::size_t>(n * 4 * 2));
  for (auto& c : coef) c = {nd(rng), nd(rng)};
  for (Eigen::Index i = 0; i < m; ++i) {
    const double x = grid[static_cast<std::size_t>(i)];
    unit(0, i) = 1.0;
    poly(0, i) = x * (1.0 - x);
    for (int r = 0; r < n; ++r)
      for (int k = 0; k < 4; ++k) {
        const double t = 2.0 * std::numbers::pi * k * x;
        trig(r, i) += coef[static_cast<std::size_t>((r * 4 + k) * 2)] * std::cos(t) / (1.0 + k * k) +
                      coef[static_cast<std::size_t>((r * 4 + k) * 2 + 1)] * std::sin(t) / (1.0 + k * k);
      }
  }
  out.push_back({"unit", unit});
  out.push_back({"poly", poly});
  out.push_back({"trig", trig});
  return out;
}

struct ResidualTable {
  std::vector<int> schedule;
  std::vector<std::string> probes;
  std::vector<std::vector<double>> residual;  // residual[probe][k] at N = schedule[k]
  std::vector<int> rank;                      // numerical rank of the first N functions
  std::vector<std::string> warnings;
};

// Residual of each probe after least-squares projection onto the span of the first N functions, for N in the
// schedule. Orthonormalisation is incremental, so the spans are nested and residuals nonincreasing.
inline ResidualTable completeness_residuals(const std::vector<GridFunction>& functions, const std::vector<Probe>& probes,
                                            std::vector<int> schedule, const std::vector<double>& weights,
                                            double rank_tol = 1e-10) {
  if (functions.empty()) throw DomainError("completeness_residuals: no root functions");
  std::sort(schedule.begin(), schedule.end());
  schedule.erase(std::unique(schedule.begin(), schedule.end()), schedule.end());
  ResidualTable t;
  t.schedule = schedule;
  std::vector<GridFunction> basis;
  std::vector<GridFunction> rem;
  std::vector<double> pn;
  for (const auto& p : probes) {
    t.probes.push_back(p.name);
    rem.push_back(p.values);
    pn.push_back(l2_norm(p.values, weights));
    t.residual.emplace_back();
  }
  std::size_t next = 0;
  int deficient = 0;
  for (int target : schedule) {
    if (target < 0) throw DomainError("completeness_residuals: negative N");
    if (static_cast<std::size_t>(target) > functions.size()) {
      t.warnings.push_back("N = " + std::to_string(target) + " exceeds the " + std::to_string(functions.size()) +
                           " available root functions; using all");
    }
    const std::size_t upto = std::min(functions.size(), static_cast<std::size_t>(target));
    for (; next < upto; ++next) {
      GridFunction f = functions[next];
      const double f0 = l2_norm(f, weights);
      const double d = detail::orthogonalize(f, basis, weights);
      if (!(d > rank_tol * f0)) {
        ++deficient;
        continue;
      }
      basis.push_back(f / d);
      for (auto& r : rem) {
        r -= inner(r, basis.back(), weights) * basis.back();
      }
    }
    t.rank.push_back(static_cast<int>(basis.size()));
    if (deficient > 0 && static_cast<int>(basis.size()) < static_cast<int>(upto))
      t.warnings.push_back("rank-deficient span at N = " + std::to_string(target) + " (rank " +
                           std::to_string(basis.size()) + ")");
    for (std::size_t k = 0; k < rem.size(); ++k) {
      GridFunction r = rem[k];
      detail::orthogonalize(r, basis, weights);  // re-project against the full basis to suppress drift
      t.residual[k].push_back(pn[k] > 0.0 ? l2_norm(r, weights) / pn[k] : 0.0);
    }
  }
  return t;
}

// ---------------------------------------------------------------------------------------------------------------
// Incompleteness witnesses

struct Witness {
  std::vector<double> grid;
  GridFunction values;
  CVector row;                 // coefficients gamma_k of the boundary functional sum gamma_k y_k(xi_k)
  std::vector<int> anchors;    // xi_k
  double alpha = 0.0;
  bool jumps_on_even_nodes = true;
  double norm = 0.0;
};

// For B = B*, Q = 0 and det T_- = 0: some condition of the system only involves y_k(0) for b_k > 0 and y_k(1) for
// b_k < 0. The step function phi_k = conj(gamma_k)|b_k| on an interval of length alpha/|b_k| at that endpoint is
// orthogonal to every solution satisfying this one condition, whatever lambda.
inline Witness witness_T_minus(const SystemProblem& p, std::size_t points = 2001, double det_tol = 1e-12) {
  require_real_weights(p.blocks, "witness_T_minus");
  if (!p.potential.is_zero()) throw ApplicabilityError("witness_T_minus: only certified for a zero potential");
  const auto t = selfadjoint_T_pm(p.bc, p.blocks);
  double cols = 1.0;
  for (Eigen::Index k = 0; k < t.minus.cols(); ++k) cols *= std::max(t.minus.col(k).norm(), 1e-300);
  if (std::abs(t.det_minus) > det_tol * cols)
    throw ApplicabilityError("witness_T_minus: det T_- = " + std::to_string(std::abs(t.det_minus)) + " is not zero");
  const auto left = nullspace(t.minus.adjoint(), Tolerance{1e-10});
  if (left.empty()) throw ApplicabilityError("witness_T_minus: T_- has no numerical left null vector");
  const CVector c = left.front();
  const int n = p.n();
  const CVector b = p.blocks.coordinate_weights();
  Witness wt;
  wt.grid = detail::odd_uniform_grid(points);
  const auto m = static_cast<Eigen::Index>(points);
  wt.values = GridFunction::Zero(n, m);
  wt.row = CVector(n);
  double bmin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) bmin = std::min(bmin, std::abs(b(k).real()));
  wt.alpha = 0.9 * bmin;
  const CMatrix rc = c.adjoint() * p.bc.C, rd = c.adjoint() * p.bc.D;
  const double h = 1.0 / static_cast<double>(points - 1);
  for (int k = 0; k < n; ++k) {
    const double bk = b(k).real();
    const bool pos = bk > 0.0;
    wt.row(k) = pos ? rc(0, k) : rd(0, k);
    wt.anchors.push_back(pos ? 0 : 1);
    const double len = wt.alpha / std::abs(bk);
    const double lo = pos ? 0.0 : 1.0 - len, hi = pos ? len : 1.0;
    const double jump = pos ? hi : lo;
    const double idx = jump / h;
    if (std::abs(idx - std::round(idx)) > 1e-9 || static_cast<long long>(std::round(idx)) % 2 != 0)
      wt.jumps_on_even_nodes = false;
    const cplx v = std::conj(wt.row(k)) * std::abs(bk);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double x = wt.grid[static_cast<std::size_t>(i)];
      if (std::abs(x - jump) <= 1e-12)
        wt.values(k, i) = 0.5 * v;
      else if (x > lo && x < hi)
        wt.values(k, i) = v;
      else if ((pos && i == 0) || (!pos && i == m - 1))
        wt.values(k, i) = v;
    }
  }
  wt.norm = l2_norm(wt.values, simpson_weights(wt.grid));
  return wt;
}

struct MirrorSupport {
  cplx alpha1, alpha2;       // y1(0) = -alpha1 y2(1), y2(0) = -alpha2 y1(1)
  double epsilon = 0.0;      // P1 = P2 = 0 on [0, eps] and [1 - eps, 1], on the grid
  double max_p_endpoint = 0.0;  // max |P_i| on the first and last 1% of the interval
};

namespace detail {

inline void require_mirror_pair(const SystemProblem& p, const char* op) {
  if (p.n() != 2) throw DimensionError(std::string(op) + ": needs n = 2");
  const CVector b = p.blocks.coordinate_weights();
  if (!p.blocks.all_real() || !(b(0).real() < 0.0) || std::abs(b(0) + b(1)) > 1e-12 * std::abs(b(1)))
    throw ApplicabilityError(std::string(op) + ": needs real weights with b2 = -b1 > 0");
}

}  // namespace detail

inline MirrorSupport mirror_support(const SystemProblem& p, const std::vector<double>& grid, double rel_tol = 1e-12) {
  detail::require_mirror_pair(p, "mirror_support");
  const auto j = j_minors(p.bc);
  const double js = std::max({std::abs(j.j12), std::abs(j.j34), std::abs(j.j13), std::abs(j.j42), 1e-300});
  if (std::abs(j.j14) > 1e-12 * js || std::abs(j.j32) > 1e-12 * js)
    throw ApplicabilityError("mirror_support: needs J14 = J32 = 0");
  if (std::abs(j.j13 * j.j42) <= 1e-24 * js * js) throw ApplicabilityError("mirror_support: needs J13 J42 != 0");
  const CMatrix nf = solve(p.bc.C, p.bc.D);
  MirrorSupport ms{nf(0, 1), nf(1, 0), 0.0, 0.0};
  CMatrix q0, q1;
  double qmax = 0.0;
  std::vector<double> pm(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    p.potential.eval_into(x, q0);
    p.potential.eval_into(1.0 - x, q1);
    if (q0.size() == 0) q0 = q1 = CMatrix::Zero(2, 2);
    if (std::abs(q0(0, 0)) + std::abs(q0(1, 1)) > 0.0)
      throw ApplicabilityError("mirror_support: potential must be off-diagonal");
    qmax = std::max({qmax, std::abs(q0(0, 1)), std::abs(q0(1, 0))});
    const cplx p1 = j.j13 * q0(0, 1) - j.j42 * q1(1, 0);
    const cplx p2 = j.j13 * q1(0, 1) - j.j42 * q0(1, 0);
    pm[i] = std::max(std::abs(p1), std::abs(p2));
  }
  const double tol = rel_tol * std::max(1.0, std::max(std::abs(j.j13), std::abs(j.j42)) * qmax);
  const std::size_t m = grid.size();
  std::size_t k = 0;
  while (k < m / 2 && pm[k] <= tol && pm[m - 1 - k] <= tol) ++k;
  ms.epsilon = k == 0 ? 0.0 : grid[k - 1];
  for (std::size_t i = 0; i < m; ++i)
    if (grid[i] <= 0.01 || grid[i] >= 0.99) ms.max_p_endpoint = std::max(ms.max_p_endpoint, pm[i]);
  return ms;
}

struct DiracWitness {
  Witness witness;
  cplx alpha1, alpha2;
  double epsilon = 0.0;
  double self_consistency = 0.0;  // max of |f1(x) - conj(1/alpha1) f2(1-x)|, |f2(x) - conj(1/alpha2) f1(1-x)| on [0,eps]
};

// For b = (-1, 1)c, J14 = J32 = 0 and P1 = P2 = 0 near both endpoints: f supported in [0,eps] and [1-eps,1] with
// f1(x) = conj(1/alpha1) f2(1-x), f2(x) = conj(1/alpha2) f1(1-x) is orthogonal to every root function. The profile
// on [0, eps] is a C^1 piecewise-cubic hat.
inline DiracWitness witness_dirac_degenerate(const SystemProblem& p, std::size_t points = 2001, double max_eps = 0.25) {
  const auto grid = detail::odd_uniform_grid(points);
  const auto ms = mirror_support(p, grid);
  const double h = grid[1] - grid[0];
  auto idx = static_cast<std::size_t>(std::floor(std::min(ms.epsilon, max_eps) / h + 1e-9));
  idx -= idx % 2;
  if (idx < 4)
    throw ApplicabilityError("witness_dirac_degenerate: P1/P2 do not vanish near the endpoints (max |P| = " +
                             std::to_string(ms.max_p_endpoint) + ")");
  const double eps = grid[idx];
  auto hat = [eps](double x) {
    if (x <= 0.0 || x >= eps) return 0.0;
    const double t = x <= 0.5 * eps ? 2.0 * x / eps : 2.0 * (eps - x) / eps;
    return t * t * (3.0 - 2.0 * t);
  };
  DiracWitness dw;
  dw.alpha1 = ms.alpha1;
  dw.alpha2 = ms.alpha2;
  dw.epsilon = eps;
  auto& w = dw.witness;
  w.grid = grid;
  w.alpha = eps;
  const auto m = static_cast<Eigen::Index>(points);
  w.values = GridFunction::Zero(2, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double x = grid[static_cast<std::size_t>(i)];
    const double xm = grid[static_cast<std::size_t>(m - 1 - i)];  // 1 - x on the grid
    if (x <= eps) {
      w.values(0, i) = hat(x);
      w.values(1, i) = hat(x);
    } else if (xm <= eps) {
      w.values(0, i) = std::conj(ms.alpha2) * hat(xm);
      w.values(1, i) = std::conj(ms.alpha1) * hat(xm);
    }
  }
  double top = w.values.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i <= static_cast<Eigen::Index>(idx); ++i) {
    const Eigen::Index r = m - 1 - i;
    dw.self_consistency =
        std::max({dw.self_consistency, std::abs(w.values(0, i) - std::conj(1.0 / ms.alpha1) * w.values(1, r)),
                  std::abs(w.values(1, i) - std::conj(1.0 / ms.alpha2) * w.values(0, r))});
  }
  dw.self_consistency /= top;
  w.norm = l2_norm(w.values, simpson_weights(grid));
  return dw;
}

// Largest |<u, f>| / (|u| |f|) over the given functions.
inline double max_normalized_inner(const std::vector<GridFunction>& fns, const GridFunction& f,
                                   const std::vector<double>& weights) {
  const double fn = l2_norm(f, weights);
  double best = 0.0;
  for (const auto& u : fns) best = std::max(best, std::abs(inner(u, f, weights)) / (l2_norm(u, weights) * fn));
  return best;
}

// ---------------------------------------------------------------------------------------------------------------
// 2x2 completeness criteria

enum class Prediction { Complete, CompleteAdjointIncomplete, Incomplete, Unclassified };

inline const char* to_string(Prediction p) {
  switch (p) {
    case Prediction::Complete: return "complete";
    case Prediction::CompleteAdjointIncomplete: return "complete-adjoint-incomplete";
    case Prediction::Incomplete: return "incomplete";
    case Prediction::Unclassified: return "unclassified";
  }
  return "?";
}

struct CriterionResult {
  std::string name;
  bool applicable = false;
  bool passed = false;
  double value = 0.0;
  std::string detail;
};

struct CriteriaReport {
  std::vector<CriterionResult> criteria;
  Prediction prediction = Prediction::Unclassified;
  std::string basis;  // name of the deciding criterion
  const CriterionResult* find(const std::string& name) const {
    for (const auto& c : criteria)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct NonrealPattern {
  int p = 0, endpoint = 0;  // y_p(e) = h0 y_q(e), y_p(1-e) = h1 y_q(e)
  cplx h0, h1;
};

// Recognises conditions equivalent to y_p(e) - h0 y_q(e) = 0, y_p(1-e) - h1 y_q(e) = 0 with h0 h1 != 0.
inline std::optional<NonrealPattern> match_nonreal_pattern(const BoundaryPair& bc, double tol = 1e-10) {
  if (bc.C.rows() != 2) return std::nullopt;
  const CMatrix a = bc.combined();
  const double s = std::max(a.norm(), 1e-300);
  for (int pi = 0; pi < 2; ++pi)
    for (int e = 0; e < 2; ++e) {
      const int q = 1 - pi;
      const auto col = [&](int comp, int end) { return a.col(comp + 2 * end); };
      if (col(q, 1 - e).norm() > tol * s) continue;
      CMatrix m(2, 2);
      m << col(pi, e), col(pi, 1 - e);
      if (std::abs(det(m)) <= tol * s * s) continue;
      const CVector hv = solve(m, CMatrix(col(q, e)));
      const cplx h0 = -hv(0), h1 = -hv(1);
      if (std::abs(h0) <= tol || std::abs(h1) <= tol) continue;
      return NonrealPattern{pi, e, h0, h1};
    }
  return std::nullopt;
}

struct CriteriaOptions {
  double det_tol = 1e-12;
  double continuity_jump = 1e-3;
  std::size_t sample_points = 2001;
};

inline CriteriaReport criteria_2x2(const SystemProblem& p, const CriteriaOptions& opt = {}) {
  if (p.n() != 2) throw DimensionError("criteria_2x2: needs n = 2");
  CriteriaReport rep;
  const auto j = j_minors(p.bc);
  const CVector b = p.blocks.coordinate_weights();
  const bool q_zero = p.potential.is_zero();
  const bool real_split = p.blocks.all_real() && b(0).real() < 0.0 && b(1).real() > 0.0;
  const double js = std::max({std::abs(j.j12), std::abs(j.j34), std::abs(j.j13), std::abs(j.j42), std::abs(j.j14),
                              std::abs(j.j32), 1e-300});

  // Degenerate Delta for Q = 0.
  {
    CriterionResult c{"degenerate", q_zero, false, 0.0, ""};
    if (q_zero) {
      const auto sum = closed_form_delta0(p);
      double top = 0.0;
      for (const auto& t : sum.terms) top = std::max(top, std::abs(t.coefficient));
      c.value = top / js;
      c.passed = c.value <= opt.det_tol;
      c.detail = "largest exponential coefficient of Delta_0 relative to the J-minors";
    } else {
      c.detail = "only decided for a zero potential";
    }
    rep.criteria.push_back(c);
  }
  // Weak regularity.
  const auto reg = classify(p.bc, p.blocks);
  {
    CriterionResult c{"weak-regularity", true, is_weakly_regular(reg.verdict), 0.0, to_string(reg.verdict)};
    if (real_split) c.value = std::abs(j.j32 * j.j14) / (js * js);
    rep.criteria.push_back(c);
  }
  // Endpoint values of the off-diagonal potential (real weights b1 < 0 < b2).
  {
    CriterionResult c{"endpoint-coupling", false, false, 0.0, ""};
    const auto grid = uniform_grid(opt.sample_points);
    bool offdiag = true;
    double jump = 0.0;
    CMatrix q;
    for (double x : grid) {
      p.potential.eval_into(x, q);
      if (q.size() == 0) q = CMatrix::Zero(2, 2);
      if (std::abs(q(0, 0)) + std::abs(q(1, 1)) > 0.0) offdiag = false;
    }
    // Sampled data may encode jumps; the criterion presumes continuous Q12, Q21.
    if (p.potential.kind() == PotentialKind::Grid) {
      const auto& g = std::get<GridPotential>(p.potential.variant());
      for (std::size_t i = 1; i < g.values.size(); ++i)
        jump = std::max({jump, std::abs(g.values[i](0, 1) - g.values[i - 1](0, 1)),
                         std::abs(g.values[i](1, 0) - g.values[i - 1](1, 0))});
    }
    if (!real_split) {
      c.detail = "needs real weights b1 < 0 < b2";
    } else if (!offdiag) {
      c.detail = "needs a zero diagonal potential";
    } else if (jump >= opt.continuity_jump) {
      c.detail = "continuity unverified: adjacent-sample jump " + std::to_string(jump);
    } else {
      const CMatrix q0 = eval_potential(p.potential, 0.0), q1 = eval_potential(p.potential, 1.0);
      const cplx a = b(0) * j.j13 * q0(0, 1) + b(1) * j.j42 * q1(1, 0);
      const cplx bb = b(0) * j.j13 * q1(0, 1) + b(1) * j.j42 * q0(1, 0);
      const double qs = std::max({1.0, q0.norm(), q1.norm()}) * js * std::abs(b(1));
      const double v1 = std::abs(j.j32) + std::abs(a), v2 = std::abs(j.j14) + std::abs(bb);
      c.applicable = true;
      c.value = std::min(v1, v2) / qs;
      c.passed = v1 > opt.det_tol * qs && v2 > opt.det_tol * qs;
      c.detail = "min(|J32| + |b1 J13 Q12(0) + b2 J42 Q21(1)|, |J14| + |b1 J13 Q12(1) + b2 J42 Q21(0)|)";
    }
    rep.criteria.push_back(c);
  }
  // Nonreal weight ratio with conditions y_p(e) = h0 y_q(e), y_p(1-e) = h1 y_q(e).
  {
    CriterionResult c{"nonreal-ratio-pair", false, false, 0.0, ""};
    const cplx ratio = b(0) / b(1);
    if (std::abs(ratio.imag()) > 1e-12 * std::abs(ratio)) {
      c.applicable = true;
      const auto m = match_nonreal_pattern(p.bc);
      c.passed = m.has_value();
      if (m) {
        c.value = std::abs(m->h0 * m->h1);
        c.detail = "y" + std::to_string(m->p + 1) + "(" + std::to_string(m->endpoint) + ") = h0 y" +
                   std::to_string(2 - m->p) + "(" + std::to_string(m->endpoint) + "), y" + std::to_string(m->p + 1) +
                   "(" + std::to_string(1 - m->endpoint) + ") = h1 y" + std::to_string(2 - m->p) + "(" +
                   std::to_string(m->endpoint) + ")";
      } else {
        c.detail = "conditions do not reduce to the two-point pattern with h0 h1 != 0";
      }
    } else {
      c.detail = "needs b1 / b2 not real";
    }
    rep.criteria.push_back(c);
  }
  // Volterra condition with Q = 0.
  {
    CriterionResult c{"volterra-row", q_zero, false, 0.0, ""};
    const auto rows = volterra_rows(p.bc);
    for (const auto& r : rows) c.detail += (c.detail.empty() ? "" : ", ") + to_string(r);
    if (q_zero) c.passed = !rows.empty();
    if (c.detail.empty()) c.detail = "none";
    c.value = static_cast<double>(rows.size());
    rep.criteria.push_back(c);
  }
  // B = B*, Q = 0 and an irregular pair: T_+ or T_- singular.
  {
    CriterionResult c{"selfadjoint-irregular", q_zero && p.blocks.all_real(), false, 0.0, ""};
    if (c.applicable) {
      const auto t = selfadjoint_T_pm(p.bc, p.blocks);
      const double s = std::max(bc_scale(p.bc), 1e-300);
      c.value = std::min(std::abs(t.det_plus), std::abs(t.det_minus)) / s;
      c.passed = c.value <= opt.det_tol;
      c.detail = "min(|det T+|, |det T-|) relative to the boundary scale";
    } else {
      c.detail = "needs real weights and a zero potential";
    }
    rep.criteria.push_back(c);
  }
  // b2 = -b1, J14 = J32 = 0 and P1 = P2 = 0 near both endpoints.
  {
    CriterionResult c{"mirror-support", false, false, 0.0, ""};
    try {
      const auto ms = mirror_support(p, uniform_grid(opt.sample_points));
      c.applicable = true;
      c.value = ms.epsilon;
      c.passed = ms.epsilon > 0.0;
      c.detail = c.passed ? "P1 = P2 = 0 within eps of both endpoints"
                          : "P1/P2 nonzero at an endpoint (max |P| = " + std::to_string(ms.max_p_endpoint) + ")";
    } catch (const Error& e) {
      c.detail = e.what();
    }
    rep.criteria.push_back(c);
  }

  auto passed = [&](const char* name) {
    const auto* c = rep.find(name);
    return c && c->applicable && c->passed;
  };
  const std::pair<const char*, Prediction> order[] = {
      {"degenerate", Prediction::Incomplete},
      {"weak-regularity", Prediction::Complete},
      {"nonreal-ratio-pair", Prediction::CompleteAdjointIncomplete},
      {"endpoint-coupling", Prediction::Complete},
      {"volterra-row", Prediction::Incomplete},
      {"selfadjoint-irregular", Prediction::Incomplete},
      {"mirror-support", Prediction::Incomplete},
  };
  for (const auto& [name, pred] : order)
    if (passed(name)) {
      rep.prediction = pred;
      rep.basis = name;
      break;
    }
  return rep;
}

// ---------------------------------------------------------------------------------------------------------------
// Aggregate report

struct WitnessRecord {
  std::string kind;
  GridFunction values;
  double norm = 0.0;
  double max_inner = 0.0;  // largest normalised |<u, witness>| over the computed root functions
};

struct CompletenessReport {
  ResidualTable residuals;
  std::vector<ClusterGram> grams;
  std::optional<CriteriaReport> criteria;
  std::optional<WitnessRecord> witness;
  std::string verdict;
  std::vector<std::string> warnings;
};

}  // namespace birk
