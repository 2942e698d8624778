#pragma once

// Characteristic determinant Delta(lambda) = det(C + D Phi(1; lambda)), degeneracy detection, eigenvalue
// enumeration by the argument principle, and the exponential-sum form of Delta when Q = 0.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "birk/evolve.hpp"

namespace birk {

struct CharValue {
  cplx delta;
  cplx derivative;
  double scale = 1.0;
  double relative() const { return std::abs(delta) / scale; }
};

class CharFunction {
 public:
  explicit CharFunction(SystemProblem p, EvalMethod method = EvalMethod::Auto, IntegratorOptions opt = {})
      : p_(std::move(p)), method_(resolve_method(p_, method)), opt_(opt) {
    build_scale_terms();
  }

  const SystemProblem& problem() const { return p_; }
  EvalMethod method() const { return method_; }
  const IntegratorOptions& integrator() const { return opt_; }
  std::size_t evaluations() const { return evals_; }

  struct Evaluation {
    std::vector<CMatrix> a;  // Taylor coefficients of A(lambda + e): A_0 = C + D Phi(1), A_p = D Phi^{(p)}(1) / p!
    double scale = 1.0;      // sum over Cauchy-Binet terms of |det [C D]_S| times a Hadamard bound of the Phi minor
  };

  Evaluation evaluate(cplx lambda, int order) const {
    ++evals_;
    const auto f = fundamental(p_, lambda, order, {1.0}, method_, opt_);
    Evaluation e;
    double fact = 1.0;
    for (int q = 0; q <= order; ++q) {
      if (q > 0) fact *= q;
      e.a.push_back(p_.bc.D * f.at(0, q) / fact);
    }
    e.a[0] += p_.bc.C;
    e.scale = scale_from(f.at(0, 0));
    return e;
  }

  std::vector<CMatrix> a_taylor(cplx lambda, int order) const { return evaluate(lambda, order).a; }
  CMatrix matrix(cplx lambda) const { return a_taylor(lambda, 0).front(); }

  // Delta and Delta' by Jacobi's formula.
  CharValue operator()(cplx lambda) const {
    const auto e = evaluate(lambda, 1);
    CharValue v;
    v.delta = det(e.a[0]);
    v.derivative = (adjugate(e.a[0]) * e.a[1]).trace();
    v.scale = e.scale;
    return v;
  }

  // Delta(lambda) together with its scale.
  CharValue value(cplx lambda) const {
    const auto e = evaluate(lambda, 0);
    return {det(e.a[0]), 0.0, e.scale};
  }

  cplx delta(cplx lambda) const { return det(matrix(lambda)); }

  // Delta^{(k)}(lambda) / k! for k = 0..order.
  std::vector<cplx> taylor(cplx lambda, int order) const { return det_taylor(a_taylor(lambda, order), order); }

 private:
  // Delta = det([C D] [I; Phi]) = sum_S det([C D]_S) det([I; Phi]_S) over n-subsets S of the 2n columns. Summing the
  // magnitudes, with Hadamard's bound for the Phi minors, measures Delta without the cancellation that makes it small.
  void build_scale_terms() {
    const int n = p_.n();
    const CMatrix cd = p_.bc.combined();
    if (n > 8) return;
    std::vector<int> pick(static_cast<std::size_t>(n));
    CMatrix m(n, n);
    for (std::uint32_t mask = 0; mask < (1u << (2 * n)); ++mask) {
      if (std::popcount(mask) != n) continue;
      int c = 0;
      std::vector<int> rows;
      for (int j = 0; j < 2 * n; ++j)
        if ((mask >> j) & 1u) {
          m.col(c++) = cd.col(j);
          if (j >= n) rows.push_back(j - n);
        }
      const double d = std::abs(det(m));
      if (d > 0.0) terms_.push_back({d, std::move(rows)});
    }
  }

  double scale_from(const CMatrix& phi) const {
    const Eigen::VectorXd rn = phi.rowwise().norm();
    if (p_.n() > 8) {
      double s = 1.0;
      const double dn = p_.bc.D.norm();
      for (Eigen::Index j = 0; j < phi.cols(); ++j) s *= p_.bc.C.col(j).norm() + dn * phi.col(j).norm();
      return std::max(s, std::numeric_limits<double>::min());
    }
    double s = 0.0;
    for (const auto& t : terms_) {
      double h = t.first;
      for (int r : t.second) h *= rn(r);
      s += h;
    }
    return std::max(s, std::numeric_limits<double>::min());
  }

  std::vector<std::pair<double, std::vector<int>>> terms_;
  SystemProblem p_;
  EvalMethod method_;
  IntegratorOptions opt_;
  mutable std::size_t evals_ = 0;
};

inline CharValue char_det(const CharFunction& cf, cplx lambda) { return cf(lambda); }

// Delta_0(lambda) = sum_S c_S exp(i lambda omega_S) for Q = 0, S ranging over coordinate subsets taken from D.
struct ExpTerm {
  cplx coefficient;
  cplx frequency;
};

struct ExponentialSum {
  std::vector<ExpTerm> terms;
  cplx operator()(cplx lambda) const {
    cplx s = 0.0;
    for (const auto& t : terms) s += t.coefficient * std::exp(I_unit * t.frequency * lambda);
    return s;
  }
  cplx derivative(cplx lambda) const {
    cplx s = 0.0;
    for (const auto& t : terms) s += I_unit * t.frequency * t.coefficient * std::exp(I_unit * t.frequency * lambda);
    return s;
  }
  // Term dominating along lambda = i z t, t -> +infinity (smallest Re(omega z)); nullopt if no term survives.
  std::optional<ExpTerm> dominant(cplx z, double tol = 1e-12) const {
    std::optional<ExpTerm> best;
    for (const auto& t : terms) {
      if (std::abs(t.coefficient) <= tol) continue;
      if (!best || (t.frequency * z).real() < (best->frequency * z).real()) best = t;
    }
    return best;
  }
};

inline ExponentialSum closed_form_delta0(const SystemProblem& p) {
  if (!p.potential.is_zero()) throw ApplicabilityError("closed_form_delta0: potential is not identically zero");
  const int n = p.n();
  if (n > 20) throw DimensionError("closed_form_delta0: n too large for subset enumeration");
  const CVector b = p.blocks.coordinate_weights();
  ExponentialSum sum;
  CMatrix m(n, n);
  for (std::uint32_t s = 0; s < (1u << n); ++s) {
    cplx omega = 0.0;
    for (int j = 0; j < n; ++j) {
      const bool from_d = (s >> j) & 1u;
      m.col(j) = from_d ? p.bc.D.col(j) : p.bc.C.col(j);
      if (from_d) omega += b(j);
    }
    const cplx c = det(m);
    auto it = std::find_if(sum.terms.begin(), sum.terms.end(),
                           [&](const ExpTerm& t) { return std::abs(t.frequency - omega) <= 1e-12 * (1.0 + std::abs(omega)); });
    if (it == sum.terms.end())
      sum.terms.push_back({c, omega});
    else
      it->coefficient += c;
  }
  return sum;
}

struct DegeneracyReport {
  bool degenerate = false;
  std::optional<cplx> witness;  // lambda with the largest relative |Delta|
  double max_relative = 0.0;
  double tolerance = 0.0;
  std::size_t samples = 0;
};

namespace detail {

inline double halton(std::size_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<std::size_t>(base));
    i /= static_cast<std::size_t>(base);
  }
  return r;
}

}  // namespace detail

// Default tolerance: 1e-12 when Phi is exact, 1e-7 when it is integrated.
inline double default_degeneracy_tol(const CharFunction& cf) {
  return cf.method() == EvalMethod::Integrate ? 1e-7 : 1e-12;
}

inline DegeneracyReport detect_degenerate(const CharFunction& cf, std::optional<double> tol = std::nullopt) {
  DegeneracyReport rep;
  rep.tolerance = tol.value_or(default_degeneracy_tol(cf));
  std::vector<cplx> pts;
  for (std::size_t i = 1; i <= 32; ++i)
    pts.push_back(std::polar(20.0 * std::sqrt(detail::halton(i, 2)), 2.0 * std::numbers::pi * detail::halton(i, 3)));
  for (double r : {5.0, 10.0, 15.0, 20.0})
    for (double s : {-1.0, 1.0}) {
      pts.emplace_back(s * r, 0.0);
      pts.emplace_back(0.0, s * r);
    }
  for (cplx l : pts) {
    const double rel = cf.value(l).relative();
    if (!rep.witness || rel > rep.max_relative) {
      rep.max_relative = rel;
      rep.witness = l;
    }
  }
  rep.samples = pts.size();
  rep.degenerate = rep.max_relative < rep.tolerance;
  if (rep.degenerate) rep.witness.reset();
  return rep;
}

struct Window {
  double re_lo = -10.0, re_hi = 10.0, im_lo = -1.0, im_hi = 1.0;
  bool contains(cplx z, double margin = 0.0) const {
    return z.real() >= re_lo - margin && z.real() <= re_hi + margin && z.imag() >= im_lo - margin &&
           z.imag() <= im_hi + margin;
  }
  double diameter() const { return std::hypot(re_hi - re_lo, im_hi - im_lo); }
  cplx center() const { return {0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi)}; }
};

struct Eigenvalue {
  cplx lambda;
  int multiplicity = 1;
  double residual = 0.0;  // |Delta(lambda)| / scale
};

struct CellRecord {
  Window cell;
  int winding = 0;
  int depth = 0;
  std::string outcome;
};

struct SpectrumReport {
  Window window;
  std::vector<Eigenvalue> eigenvalues;
  int total_winding = 0;
  bool degenerate = false;
  std::vector<CellRecord> cells;
  std::vector<std::string> warnings;
  std::size_t evaluations = 0;
  int nudges = 0;
  int multiplicity_sum() const {
    int s = 0;
    for (const auto& e : eigenvalues) s += e.multiplicity;
    return s;
  }
};

class SearchError : public Error {
 public:
  SearchError(const std::string& what, SpectrumReport partial) : Error(what), partial_(std::move(partial)) {}
  const SpectrumReport& partial() const noexcept { return partial_; }

 private:
  SpectrumReport partial_;
};

struct SearchOptions {
  double newton_tol = 1e-9;          // accepted |Delta| / scale at a refined root
  double leaf_diameter = 0.1;
  double min_diameter = 1e-7;
  std::size_t max_cells = 100000;
  double merge_radius = 1e-6;
  double multiplicity_radius = 1e-3;
  int max_edge_samples = 1 << 14;
  double boundary_clearance = 1e-9;  // relative |Delta| below this on a contour counts as a zero on it
  int max_nudges = 8;
  bool keep_cell_log = true;
};

namespace detail {

struct PhaseResult {
  double phase = 0.0;
  bool hit = false;  // a sample came too close to a zero, or bisection hit its cap
  double min_relative = std::numeric_limits<double>::infinity();
};

class PhaseTracker {
 public:
  PhaseTracker(const CharFunction& cf, const SearchOptions& opt) : cf_(cf), opt_(opt) {
    double fb = 0.0;
    const CVector b = cf.problem().blocks.coordinate_weights();
    for (Eigen::Index j = 0; j < b.size(); ++j) fb += std::abs(b(j));
    rate_ = std::max(fb, 1.0);
  }

  // Accumulated arg Delta along a -> b. A piece [t0, t1] is accepted when the arg increment is below pi/2 and the
  // derivative bound h max|dDelta/dt| < 0.7 min|Delta| rules out a hidden loop around zero; otherwise it is bisected.
  PhaseResult segment(cplx a, cplx b) {
    const std::array<double, 4> key{a.real(), a.imag(), b.real(), b.imag()};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const std::array<double, 4> rkey{b.real(), b.imag(), a.real(), a.imag()};
    if (auto it = memo_.find(rkey); it != memo_.end()) {
      PhaseResult r = it->second;
      r.phase = -r.phase;
      return r;
    }
    const double len = std::abs(b - a);
    const int n0 = std::max(4, static_cast<int>(std::ceil(len * rate_ / (std::numbers::pi / 4))));
    const auto res = track([&](double t) { return a + t * (b - a); }, len, n0, false);
    memo_[key] = res;
    return res;
  }

  PhaseResult circle(cplx c, double r) {
    return track([&](double t) { return c + std::polar(r, 2.0 * std::numbers::pi * t); }, 2.0 * std::numbers::pi * r, 16,
                 true);
  }

  PhaseResult rectangle(const Window& w) {
    const cplx p0(w.re_lo, w.im_lo), p1(w.re_hi, w.im_lo), p2(w.re_hi, w.im_hi), p3(w.re_lo, w.im_hi);
    PhaseResult total;
    for (auto [a, b] : {std::pair{p0, p1}, std::pair{p1, p2}, std::pair{p2, p3}, std::pair{p3, p0}}) {
      const auto r = segment(a, b);
      total.phase += r.phase;
      total.hit = total.hit || r.hit;
      total.min_relative = std::min(total.min_relative, r.min_relative);
    }
    return total;
  }

  static int winding(const PhaseResult& r) { return static_cast<int>(std::lround(r.phase / (2.0 * std::numbers::pi))); }

 private:
  struct Sample {
    cplx f;
    double slope;  // |Delta'| times |dz/dt|
  };

  template <class P>
  PhaseResult track(P&& point, double speed, int n0, bool closed) {
    PhaseResult res;
    int budget = opt_.max_edge_samples;
    double t0 = 0.0;
    Sample s0 = sample(point(0.0), speed, res);
    const Sample first = s0;
    for (int i = 1; i <= n0; ++i) {
      const double t1 = static_cast<double>(i) / n0;
      const Sample s1 = (closed && i == n0) ? first : sample(point(t1), speed, res);
      res.phase += refine(point, speed, t0, s0, t1, s1, res, budget, 0);
      t0 = t1;
      s0 = s1;
    }
    return res;
  }

  Sample sample(cplx z, double speed, PhaseResult& res) {
    const CharValue v = cf_(z);
    const double rel = v.relative();
    res.min_relative = std::min(res.min_relative, rel);
    if (!(rel > opt_.boundary_clearance)) res.hit = true;
    return {v.delta, std::abs(v.derivative) * speed};
  }

  template <class P>
  double refine(P& point, double speed, double t0, const Sample& s0, double t1, const Sample& s1, PhaseResult& res,
                int& budget, int depth) {
    const double dphi = (s0.f == 0.0 || s1.f == 0.0) ? 0.0 : std::arg(s1.f / s0.f);
    const double h = t1 - t0;
    const bool safe = h * std::max(s0.slope, s1.slope) < 0.7 * std::min(std::abs(s0.f), std::abs(s1.f));
    if (std::abs(dphi) < std::numbers::pi / 2 && safe) return dphi;
    if (budget <= 0 || depth > 40) {
      if (std::abs(dphi) >= std::numbers::pi / 2) res.hit = true;
      return dphi;
    }
    --budget;
    const double tm = 0.5 * (t0 + t1);
    const Sample sm = sample(point(tm), speed, res);
    return refine(point, speed, t0, s0, tm, sm, res, budget, depth + 1) +
           refine(point, speed, tm, sm, t1, s1, res, budget, depth + 1);
  }

  const CharFunction& cf_;
  const SearchOptions& opt_;
  double rate_ = 1.0;
  std::map<std::array<double, 4>, PhaseResult> memo_;
};

struct Refined {
  cplx lambda;
  int multiplicity = 0;
  double residual = 0.0;
  bool converged = false;
};

inline Refined refine_root(const CharFunction& cf, PhaseTracker& tracker, cplx start, int m_hint,
                           const SearchOptions& opt) {
  Refined out;
  cplx lambda = start;
  cplx best = start;
  double best_rel = std::numeric_limits<double>::infinity();
  const int m0 = std::max(1, m_hint);
  for (int it = 0; it < 80; ++it) {
    const CharValue v = cf(lambda);
    const double rel = v.relative();
    if (rel < best_rel) {
      best_rel = rel;
      best = lambda;
    }
    if (v.delta == 0.0 || v.derivative == 0.0) break;
    const cplx step = static_cast<double>(m0) * v.delta / v.derivative;
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
    lambda -= step;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(lambda))) {
      const CharValue w = cf(lambda);
      if (w.relative() < best_rel) {
        best_rel = w.relative();
        best = lambda;
      }
      break;
    }
  }
  lambda = best;
  out.multiplicity = PhaseTracker::winding(tracker.circle(lambda, opt.multiplicity_radius));
  const int m = out.multiplicity;
  // A root of multiplicity m is a simple root of Delta^{(m-1)}.
  if (m >= 2 && m <= cf.integrator().max_order) {
    cplx mu = lambda;
    for (int it = 0; it < 12; ++it) {
      const auto t = cf.taylor(mu, m);
      if (t[static_cast<std::size_t>(m)] == 0.0) break;
      const cplx step = t[static_cast<std::size_t>(m - 1)] / (static_cast<double>(m) * t[static_cast<std::size_t>(m)]);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
      mu -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(mu))) break;
    }
    if (std::abs(mu - lambda) < 0.5 * opt.multiplicity_radius) lambda = mu;
  }
  const CharValue v = cf(lambda);
  out.lambda = lambda;
  out.residual = v.relative();
  out.converged = m >= 1 && std::isfinite(lambda.real()) && std::isfinite(lambda.imag());
  return out;
}

// Split positions tried in turn so that cuts avoid zeros lying on the natural midlines.
inline constexpr std::array<double, 8> kSplitRatios{0.5 + 0.0137, 0.5 - 0.0219, 0.5 + 0.0371, 0.5 - 0.0497,
                                                    0.5 + 0.0613, 0.5 - 0.0789, 0.5 + 0.0931, 0.5 - 0.1103};

}  // namespace detail

inline bool spectrum_order(const Eigenvalue& a, const Eigenvalue& b) {
  const double ma = std::abs(a.lambda), mb = std::abs(b.lambda);
  if (std::abs(ma - mb) > 1e-9 * std::max(1.0, std::max(ma, mb))) return ma < mb;
  return std::arg(a.lambda) < std::arg(b.lambda);
}

inline SpectrumReport find_eigenvalues(const CharFunction& cf, Window window, const SearchOptions& opt = {}) {
  if (!(window.re_hi > window.re_lo && window.im_hi > window.im_lo)) throw DomainError("find_eigenvalues: empty window");
  SpectrumReport rep;
  const std::size_t evals0 = cf.evaluations();
  detail::PhaseTracker tracker(cf, opt);

  // Nudge the outer contour off any zero lying on it.
  detail::PhaseResult outer = tracker.rectangle(window);
  const double w0 = window.re_hi - window.re_lo, h0 = window.im_hi - window.im_lo;
  for (int k = 1; outer.hit && k <= opt.max_nudges; ++k) {
    const double d = 1e-3 * k * (1.0 + 0.173 * k);
    window = Window{window.re_lo - d * w0 * 0.61, window.re_hi + d * w0 * 0.47, window.im_lo - d * h0 * 0.53,
                    window.im_hi + d * h0 * 0.59};
    outer = tracker.rectangle(window);
    rep.nudges = k;
  }
  rep.window = window;
  if (outer.hit) rep.warnings.push_back("window boundary passes through or very near a zero after nudging");
  rep.total_winding = detail::PhaseTracker::winding(outer);
  if (rep.total_winding < 0) rep.warnings.push_back("negative winding on the window boundary");

  struct Task {
    Window w;
    int winding;
    int depth;
  };
  std::vector<Task> stack{{window, rep.total_winding, 0}};
  std::vector<Eigenvalue> found;
  std::size_t cells = 0;
  auto log = [&](const Window& w, int wind, int depth, std::string what) {
    if (opt.keep_cell_log) rep.cells.push_back({w, wind, depth, std::move(what)});
  };
  while (!stack.empty()) {
    const Task t = stack.back();
    stack.pop_back();
    if (++cells > opt.max_cells) {
      rep.eigenvalues = found;
      rep.evaluations = cf.evaluations() - evals0;
      rep.warnings.push_back("cell budget exhausted");
      throw SearchError("find_eigenvalues: cell budget of " + std::to_string(opt.max_cells) + " exceeded", rep);
    }
    if (t.winding <= 0) {
      log(t.w, t.winding, t.depth, "empty");
      continue;
    }
    const double wid = t.w.re_hi - t.w.re_lo, hei = t.w.im_hi - t.w.im_lo;
    const double diam = std::max(wid, hei);
    if (diam < opt.leaf_diameter && t.winding <= 2) {
      const auto r = detail::refine_root(cf, tracker, t.w.center(), t.winding, opt);
      const bool inside = t.w.contains(r.lambda, 1e-12 * (1.0 + std::abs(r.lambda)));
      if (r.converged && inside && r.multiplicity == t.winding) {
        found.push_back({r.lambda, r.multiplicity, r.residual});
        if (r.residual > opt.newton_tol)
          rep.warnings.push_back("root near " + std::to_string(r.lambda.real()) + "+" + std::to_string(r.lambda.imag()) +
                                 "i refined only to relative residual " + std::to_string(r.residual));
        log(t.w, t.winding, t.depth, "root");
        continue;
      }
      if (diam < opt.min_diameter) {
        found.push_back({t.w.center(), t.winding, std::abs(cf.delta(t.w.center()))});
        rep.warnings.push_back("unresolved cluster accepted at cell centre");
        log(t.w, t.winding, t.depth, "unresolved");
        continue;
      }
    }
    // Quadrisect (bisect elongated cells) with cut positions that keep the new interior edges clear of zeros.
    const bool cut_x = wid >= 0.5 * hei, cut_y = hei >= 0.5 * wid;
    std::vector<std::pair<double, double>> cuts;
    for (double rx : detail::kSplitRatios)
      for (double ry : detail::kSplitRatios) {
        cuts.emplace_back(rx, ry);
        if (!cut_x || !cut_y) break;
      }
    if (!cut_x)
      for (auto& c : cuts) std::swap(c.first, c.second);
    std::optional<std::vector<Task>> kids;
    for (auto [rx, ry] : cuts) {
      const double xm = t.w.re_lo + rx * wid, ym = t.w.im_lo + ry * hei;
      std::vector<Window> q;
      if (cut_x && cut_y)
        q = {Window{t.w.re_lo, xm, t.w.im_lo, ym}, Window{xm, t.w.re_hi, t.w.im_lo, ym},
             Window{xm, t.w.re_hi, ym, t.w.im_hi}, Window{t.w.re_lo, xm, ym, t.w.im_hi}};
      else if (cut_x)
        q = {Window{t.w.re_lo, xm, t.w.im_lo, t.w.im_hi}, Window{xm, t.w.re_hi, t.w.im_lo, t.w.im_hi}};
      else
        q = {Window{t.w.re_lo, t.w.re_hi, t.w.im_lo, ym}, Window{t.w.re_lo, t.w.re_hi, ym, t.w.im_hi}};
      std::vector<Task> k;
      bool ok = true;
      int sum = 0;
      for (std::size_t i = 0; i < q.size() && ok; ++i) {
        const auto pr = tracker.rectangle(q[i]);
        ok = !pr.hit;
        k.push_back({q[i], detail::PhaseTracker::winding(pr), t.depth + 1});
        sum += k.back().winding;
      }
      if (ok && sum == t.winding) {
        kids = std::move(k);
        break;
      }
    }
    if (!kids) {
      found.push_back({t.w.center(), t.winding, std::abs(cf.delta(t.w.center()))});
      rep.warnings.push_back("could not subdivide a cell consistently; centre recorded");
      log(t.w, t.winding, t.depth, "unsplittable");
      continue;
    }
    log(t.w, t.winding, t.depth, "split");
    for (const auto& k : *kids) stack.push_back(k);
  }

  // Merge clusters.
  std::sort(found.begin(), found.end(), spectrum_order);
  std::vector<Eigenvalue> merged;
  for (const auto& e : found) {
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const Eigenvalue& m) { return std::abs(m.lambda - e.lambda) < opt.merge_radius; });
    if (it == merged.end())
      merged.push_back(e);
    else {
      it->multiplicity += e.multiplicity;
      it->residual = std::max(it->residual, e.residual);
    }
  }
  std::sort(merged.begin(), merged.end(), spectrum_order);
  rep.eigenvalues = std::move(merged);
  if (rep.multiplicity_sum() != rep.total_winding)
    rep.warnings.push_back("multiplicity sum " + std::to_string(rep.multiplicity_sum()) + " differs from winding " +
                           std::to_string(rep.total_winding));
  rep.evaluations = cf.evaluations() - evals0;
  return rep;
}

// Real half-width 2 pi (N + 1) / min|b|; the imaginary half-height doubles from 1 until Delta on the horizontal
// edges is clear of the noise floor (at most 6 doublings).
struct DefaultWindow {
  Window window;
  int expansions = 0;
  bool settled = false;
};

inline DefaultWindow default_window(const CharFunction& cf, int n_target, double floor = 1e-8) {
  DefaultWindow out;
  const double half = 2.0 * std::numbers::pi * (n_target + 1) / cf.problem().blocks.min_abs_weight();
  double h = 1.0;
  for (int k = 0; k <= 6; ++k) {
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 64; ++i) {
      const double x = -half + 2.0 * half * i / 64.0;
      for (double s : {-1.0, 1.0}) {
        worst = std::min(worst, cf.value(cplx(x, s * h)).relative());
      }
    }
    out.window = Window{-half, half, -h, h};
    out.expansions = k;
    if (worst > floor) {
      out.settled = true;
      break;
    }
    h *= 2.0;
  }
  return out;
}

}  // namespace birk
