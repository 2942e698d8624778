#include <gtest/gtest.h>

#include <numbers>

#include "birk/rootspace.hpp"
#include "support.hpp"

using namespace birk;

namespace {

constexpr double kPi = std::numbers::pi;

BlockStructure dirac_blocks() { return BlockStructure{{1, 1}, {-1.0, 1.0}}; }

SystemProblem periodic() {
  return {dirac_blocks(), PotentialSpec::zero(2), BoundaryPair{CMatrix::Identity(2, 2), -CMatrix::Identity(2, 2)}};
}

BoundaryPair dirichlet_first() {
  CMatrix c = CMatrix::Zero(2, 2), d = CMatrix::Zero(2, 2);
  c(0, 0) = 1.0;
  d(1, 0) = 1.0;
  return {c, d};
}

CMatrix offdiag(cplx a, cplx b) {
  CMatrix q = CMatrix::Zero(2, 2);
  q(0, 1) = a;
  q(1, 0) = b;
  return q;
}

SystemProblem dirichlet_q1() { return {dirac_blocks(), PotentialSpec::constant(offdiag(1.0, 1.0)), dirichlet_first()}; }

// y1(0) - h0 y2(0) = 0, y1(1) - h1 y2(0) = 0.
BoundaryPair h_conditions(cplx h0, cplx h1) {
  CMatrix c(2, 2), d = CMatrix::Zero(2, 2);
  c << 1.0, -h0, 0.0, -h1;
  d(1, 0) = 1.0;
  return {c, d};
}

// y1(0) + a1 y2(1) = 0, y2(0) + a2 y1(1) = 0.
BoundaryPair mirror_conditions(cplx a1, cplx a2) {
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 1) = a1;
  d(1, 0) = a2;
  return {CMatrix::Identity(2, 2), d};
}

GridFunction sample(const std::vector<double>& grid, const std::function<CVector(double)>& f) {
  GridFunction g(f(0.0).size(), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) g.col(static_cast<Eigen::Index>(i)) = f(grid[i]);
  return g;
}

// |f - proj_{span(basis)} f| / |f|, with the projection solved through the Gram matrix.
double span_residual(const GridFunction& f, const std::vector<GridFunction>& basis, const std::vector<double>& w) {
  const auto k = static_cast<Eigen::Index>(basis.size());
  CMatrix g(k, k);
  CVector r(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    r(a) = inner(f, basis[a], w);
    for (Eigen::Index b = 0; b < k; ++b) g(a, b) = inner(basis[b], basis[a], w);
  }
  const CVector c = g.fullPivLu().solve(r);
  GridFunction rem = f;
  for (Eigen::Index a = 0; a < k; ++a) rem -= c(a) * basis[a];
  return l2_norm(rem, w) / l2_norm(f, w);
}

SpectrumReport spectrum(const SystemProblem& p, Window w) { return find_eigenvalues(CharFunction(p), w); }

}  // namespace

TEST(Quadrature, SimpsonIsExactForCubics) {
  const auto g = uniform_grid(11);
  const auto w = simpson_weights(g);
  const auto f = sample(g, [](double x) { return CVector::Constant(1, x * x * x - 2.0 * x); });
  const auto one = sample(g, [](double) { return CVector::Constant(1, 1.0); });
  EXPECT_NEAR(inner(f, one, w).real(), 0.25 - 1.0, 1e-14);
  EXPECT_THROW(simpson_weights(uniform_grid(10)), DomainError);
}

TEST(Chains, PeriodicDoubleEigenvalueHasTwoEigenfunctions) {
  const auto p = periodic();
  const auto spec = spectrum(p, {-20.0, 20.0, -2.0, 2.0});
  const auto sys = build_chains(p, spec);
  ASSERT_EQ(sys.chains.size(), 14u);
  for (int k = -3; k <= 3; ++k) {
    const cplx lk = 2.0 * kPi * k;
    std::vector<GridFunction> here;
    for (const auto& c : sys.chains)
      if (std::abs(c.lambda - lk) < 1e-8) {
        ASSERT_EQ(c.chain.size(), 1u) << "no associated functions";
        here.push_back(c.chain.front());
      }
    ASSERT_EQ(here.size(), 2u) << "k = " << k;
    const auto e1 = sample(sys.grid, [&](double x) {
      CVector v(2);
      v << std::exp(-I_unit * lk * x), 0.0;
      return v;
    });
    const auto e2 = sample(sys.grid, [&](double x) {
      CVector v(2);
      v << 0.0, std::exp(I_unit * lk * x);
      return v;
    });
    EXPECT_LT(span_residual(e1, here, sys.weights), 1e-8);
    EXPECT_LT(span_residual(e2, here, sys.weights), 1e-8);
  }
}

TEST(Chains, DirichletSimpleEigenfunctionMatchesClosedForm) {
  const auto p = dirichlet_q1();
  const auto spec = spectrum(p, {-8.0, 8.0, -1.0, 1.0});
  const auto sys = build_chains(p, spec);
  ASSERT_FALSE(sys.chains.empty());
  for (const auto& c : sys.chains) {
    ASSERT_EQ(c.chain.size(), 1u);
    // Phi(x) e2 with Phi = cos(rho x) I + sin(rho x)/rho M, M = i diag(-1,1)(lambda - Q), M^2 = -rho^2.
    const cplx l = c.lambda, rho = std::sqrt(l * l - 1.0);
    const auto oracle = sample(sys.grid, [&](double x) {
      CVector v(2);
      v << I_unit * std::sin(rho * x) / rho, std::cos(rho * x) + I_unit * l * std::sin(rho * x) / rho;
      return v;
    });
    EXPECT_LT(span_residual(oracle, c.chain, sys.weights), 1e-9) << l;
  }
}

TEST(Chains, BoundaryAndOdeResiduals) {
  for (const auto& p : {periodic(), dirichlet_q1()}) {
    const auto sys = build_chains(p, spectrum(p, {-15.0, 15.0, -1.0, 1.0}));
    EXPECT_TRUE(sys.warnings.empty());
    for (const auto& c : sys.chains) {
      for (double r : c.bc_residuals) EXPECT_LE(r, 1e-8);
      for (double r : chain_ode_residuals(p, c, sys.grid)) EXPECT_LE(r, 1e-7);
    }
  }
}

TEST(Chains, JordanChainOfLengthTwo) {
  // A(lambda) = [[1 - e^{-i lambda}, e^{i lambda}], [0, 1 - e^{i lambda}]]: double zero at 0, rank A(0) = 1.
  CMatrix d(2, 2);
  d << -1.0, 1.0, 0.0, -1.0;
  const SystemProblem p{dirac_blocks(), PotentialSpec::zero(2), BoundaryPair{CMatrix::Identity(2, 2), d}};
  const auto spec = spectrum(p, {-1.0, 1.0, -1.0, 1.0});
  ASSERT_EQ(spec.eigenvalues.size(), 1u);
  ASSERT_EQ(spec.eigenvalues.front().multiplicity, 2);
  const auto sys = build_chains(p, spec);
  ASSERT_EQ(sys.chains.size(), 1u);
  const auto& c = sys.chains.front();
  ASSERT_EQ(c.chain.size(), 2u);
  for (double r : c.bc_residuals) EXPECT_LE(r, 1e-8);
  for (double r : chain_ode_residuals(p, c, sys.grid)) EXPECT_LE(r, 1e-7);
  // ker A(0) = span(e1), so the eigenfunction is col(1, 0) up to scale.
  const auto e1 = sample(sys.grid, [](double) {
    CVector v(2);
    v << 1.0, 0.0;
    return v;
  });
  EXPECT_LT(span_residual(e1, {c.chain.front()}, sys.weights), 1e-10);
}

TEST(Chains, DegenerateSpectrumIsRejected) {
  SpectrumReport s;
  s.degenerate = true;
  EXPECT_THROW(build_chains(periodic(), s), ApplicabilityError);
}

TEST(Chains, SolutionFamilySatisfiesBoundaryConditions) {
  const SystemProblem p{dirac_blocks(), PotentialSpec::zero(2), dirichlet_first()};
  const auto g = uniform_grid(401);
  const auto fam = solution_family(p, {cplx(1.3), cplx(-2.0, 0.5)}, g);
  ASSERT_EQ(fam.size(), 2u);
  for (const auto& u : fam) EXPECT_LT(detail::bc_residual(p.bc, u), 1e-12);
}

TEST(Adjoint, PeriodicSelfadjointChainsAgreeUpToPhase) {
  const auto p = periodic();
  const auto spec = spectrum(p, {-10.0, 10.0, -1.0, 1.0});
  const auto prim = build_chains(p, spec);
  const auto adj = adjoint_chains(p, spec);
  EXPECT_TRUE(adj.paired);
  ASSERT_EQ(adj.roots.size(), prim.size());
  for (const auto& c : adj.roots.chains) {
    std::vector<GridFunction> same;
    for (const auto& d : prim.chains)
      if (std::abs(d.lambda - std::conj(c.lambda)) < 1e-6) same.push_back(d.chain.front());
    EXPECT_LT(span_residual(c.chain.front(), same, prim.weights), 1e-8);
  }
  const auto mm = minimality_metric(prim, adj.roots);
  EXPECT_TRUE(mm.minimal);
  for (const auto& g : mm.clusters) {
    EXPECT_NEAR(g.sigma_min, 1.0, 1e-8);
    EXPECT_NEAR(g.condition, 1.0, 1e-8);
  }
  EXPECT_LT(mm.max_cross, 1e-8);
}

TEST(Adjoint, BiorthogonalAcrossEigenvalues) {
  // Non-selfadjoint: complex coupling and mixed conditions.
  const SystemProblem p{dirac_blocks(), PotentialSpec::constant(offdiag(cplx(0.7, 0.2), cplx(-0.3, 0.5))),
                        BoundaryPair::from_combined(
                            (CMatrix(2, 4) << 1.0, 0.4, -0.5, 0.0, 0.2, 0.0, 1.0, 2.0).finished())};
  const auto spec = spectrum(p, {-12.0, 12.0, -3.0, 3.0});
  ASSERT_GE(spec.eigenvalues.size(), 4u);
  const auto prim = build_chains(p, spec);
  const auto adj = adjoint_chains(p, spec);
  EXPECT_TRUE(adj.paired);
  const auto mm = minimality_metric(prim, adj.roots);
  EXPECT_TRUE(mm.minimal);
  EXPECT_LT(mm.max_cross, 1e-7);
}

TEST(Adjoint, FabricatedDuplicateChainLosesMinimality) {
  const auto p = periodic();
  const auto spec = spectrum(p, {-7.0, 7.0, -1.0, 1.0});
  auto prim = build_chains(p, spec);
  const auto adj = adjoint_chains(p, spec);
  for (std::size_t i = 0; i + 1 < prim.chains.size(); ++i)
    if (std::abs(prim.chains[i].lambda - prim.chains[i + 1].lambda) < 1e-8) {
      prim.chains[i + 1].chain = prim.chains[i].chain;
      break;
    }
  const auto mm = minimality_metric(prim, adj.roots);
  EXPECT_FALSE(mm.minimal);
  double smallest = 1.0;
  for (const auto& g : mm.clusters) smallest = std::min(smallest, g.sigma_min);
  EXPECT_LT(smallest, 1e-10);
}

TEST(Adjoint, ClusterMismatchIsAPairingError) {
  const auto p = periodic();
  const auto spec = spectrum(p, {-7.0, 7.0, -1.0, 1.0});
  auto prim = build_chains(p, spec);
  const auto adj = adjoint_chains(p, spec);
  prim.chains.pop_back();
  EXPECT_THROW(minimality_metric(prim, adj.roots), PairingError);
}

TEST(Adjoint, NonrealPairAdjointHasVolterraRow) {
  const SystemProblem p{BlockStructure{{1, 1}, {I_unit, 1.0}}, PotentialSpec::zero(2), h_conditions(1.0, 1.0)};
  const auto spec = spectrum(p, {-1.0, 1.0, -20.0, 20.0});
  const auto adj = adjoint_chains(p, spec);
  EXPECT_TRUE(adj.paired);
  const auto rows = volterra_rows(adj.problem.bc);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows.front().component, 1);
  EXPECT_EQ(rows.front().endpoint, 1);
  EXPECT_FALSE(adj.incompleteness.empty());
}

TEST(Residuals, ProbeInsideTheSpanVanishes) {
  const auto p = dirichlet_q1();
  const auto sys = build_chains(p, spectrum(p, {-12.0, 12.0, -1.0, 1.0}));
  const auto fns = sys.functions();
  ASSERT_GE(fns.size(), 5u);
  const auto t = completeness_residuals(fns, {{"u3", fns[2]}}, {1, 2, 3, 4, 5}, sys.weights);
  EXPECT_GT(t.residual[0][1], 1e-3);
  EXPECT_LT(t.residual[0][2], 1e-12);
  EXPECT_LT(t.residual[0][4], 1e-12);
}

TEST(Residuals, PeriodicPolynomialProbeDecays) {
  const auto p = periodic();
  const auto sys = build_chains(p, spectrum(p, {-130.0, 130.0, -1.0, 1.0}));
  ASSERT_GE(sys.size(), 41u);
  const auto probes = default_probes(2, sys.grid);
  std::vector<int> schedule{1, 5, 11, 21, 31, 41};
  const auto t = completeness_residuals(sys.functions(), probes, schedule, sys.weights);
  for (std::size_t k = 0; k < probes.size(); ++k)
    for (std::size_t i = 1; i < schedule.size(); ++i) EXPECT_LE(t.residual[k][i], t.residual[k][i - 1] + 1e-12);
  EXPECT_LT(t.residual[1].back(), 0.05);
  EXPECT_LT(t.residual[0].back(), 1e-10);  // the constant is itself an eigenfunction
  EXPECT_EQ(t.rank.back(), 41);
}

TEST(Residuals, RankDeficientSpanIsReportedNotFatal) {
  const auto g = uniform_grid(101);
  const auto w = simpson_weights(g);
  const auto f = sample(g, [](double x) { return CVector::Constant(1, x); });
  const auto t = completeness_residuals({f, 2.0 * f}, {{"x", f}}, {1, 2}, w);
  EXPECT_EQ(t.rank.back(), 1);
  EXPECT_FALSE(t.warnings.empty());
  EXPECT_THROW(completeness_residuals({}, {{"x", f}}, {1}, w), DomainError);
}

TEST(WitnessTMinus, DirichletTypeRowGivesStepOnTheRight) {
  const SystemProblem p{dirac_blocks(), PotentialSpec::zero(2), dirichlet_first()};
  const auto wt = witness_T_minus(p);
  EXPECT_NEAR(wt.alpha, 0.9, 1e-15);
  EXPECT_EQ(wt.anchors[0], 1);
  for (std::size_t i = 0; i < wt.grid.size(); ++i) {
    const double x = wt.grid[i];
    EXPECT_EQ(wt.values(1, static_cast<Eigen::Index>(i)), cplx(0.0));
    if (x < 0.1 - 1e-12) {
      EXPECT_EQ(wt.values(0, static_cast<Eigen::Index>(i)), cplx(0.0));
    } else if (x > 0.1 + 1e-12) {
      EXPECT_GT(std::abs(wt.values(0, static_cast<Eigen::Index>(i))), 0.0);
    }
  }
  EXPECT_TRUE(wt.jumps_on_even_nodes);
}

TEST(WitnessTMinus, OrthogonalToEverySolutionOfTheRow) {
  // b = (-1, 2), C = [[0,1],[1,0]], D = I: Delta = e^{i lambda} - 1 and the first row y2(0) + y1(1) = 0 only
  // involves the T_- endpoints.
  CMatrix c(2, 2);
  c << 0.0, 1.0, 1.0, 0.0;
  const SystemProblem p{BlockStructure{{1, 1}, {-1.0, 2.0}}, PotentialSpec::zero(2),
                        BoundaryPair{c, CMatrix::Identity(2, 2)}};
  const auto wt = witness_T_minus(p, 20001);
  const auto w = simpson_weights(wt.grid);
  auto& g = testsupport::rng();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const CVector b = p.blocks.coordinate_weights();
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    cplx l;
    do l = cplx(50.0 * u(g), 50.0 * u(g));
    while (std::abs(l) > 50.0);
    // a_k = y_k(xi_k) with sum gamma_k a_k = 0.
    CVector a(2);
    a(0) = testsupport::random_complex(g);
    a(1) = -wt.row(0) * a(0) / wt.row(1);
    const auto y = sample(wt.grid, [&](double x) {
      CVector v(2);
      for (int k = 0; k < 2; ++k) v(k) = a(k) * std::exp(I_unit * l * b(k) * (x - wt.anchors[k]));
      return v;
    });
    worst = std::max(worst, std::abs(inner(y, wt.values, w)) / (l2_norm(y, w) * wt.norm));
  }
  EXPECT_LT(worst, 1e-8);

  const auto spec = spectrum(p, {-160.0, 160.0, -1.0, 1.0});
  const auto sys = build_chains(p, spec, 20001);
  ASSERT_GE(sys.size(), 50u);
  const auto fns = sys.functions();
  EXPECT_LT(max_normalized_inner(fns, wt.values, w), 1e-8);
  const auto t = completeness_residuals(fns, {{"witness", wt.values}}, {10, 25, 50}, w);
  for (double r : t.residual[0]) EXPECT_GT(r, 0.9);
}

TEST(WitnessTMinus, Preconditions) {
  EXPECT_THROW(witness_T_minus(periodic()), ApplicabilityError);
  EXPECT_THROW(witness_T_minus(dirichlet_q1()), ApplicabilityError);
  const SystemProblem nonreal{BlockStructure{{1, 1}, {I_unit, 1.0}}, PotentialSpec::zero(2), dirichlet_first()};
  EXPECT_THROW(witness_T_minus(nonreal), ApplicabilityError);
}

TEST(WitnessDirac, MirroredBumpsForTheDegenerateCase) {
  const SystemProblem p{dirac_blocks(), PotentialSpec::zero(2), mirror_conditions(1.0, 1.0)};
  const auto dw = witness_dirac_degenerate(p);
  EXPECT_NEAR(std::abs(dw.alpha1 - 1.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(dw.alpha2 - 1.0), 0.0, 1e-14);
  EXPECT_LT(dw.self_consistency, 1e-14);
  const auto& g = dw.witness.grid;
  const auto m = static_cast<Eigen::Index>(g.size());
  for (Eigen::Index i = 0; i < m; ++i)
    EXPECT_EQ(dw.witness.values(0, i), dw.witness.values(1, m - 1 - i));  // f1(x) = f2(1 - x)
  // Delta vanishes identically, so every lambda contributes solutions.
  EXPECT_TRUE(detect_degenerate(CharFunction(p)).degenerate);
  std::vector<cplx> ls;
  for (int k = 0; k < 60; ++k) ls.emplace_back(-30.0 + k, 0.37 * ((k % 5) - 2));
  const auto fam = solution_family(p, ls, g);
  const auto w = simpson_weights(g);
  EXPECT_LT(max_normalized_inner(fam, dw.witness.values, w), 1e-7);
  const auto t = completeness_residuals(fam, {{"f", dw.witness.values}}, {10, 30, 50}, w);
  for (double r : t.residual[0]) EXPECT_GT(r, 0.9);
}

namespace {

// 16 t^2 (1 - t)^2 on [0.25, 0.75], zero elsewhere, sampled on 201 points.
std::pair<std::vector<double>, std::vector<double>> middle_bump() {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 200; ++i) {
    const double x = i / 200.0;
    const double t = std::clamp((x - 0.25) / 0.5, 0.0, 1.0);
    xs.push_back(x);
    ys.push_back(16.0 * t * t * (1 - t) * (1 - t));
  }
  return {xs, ys};
}

}  // namespace

TEST(WitnessDirac, SymmetricMiddlePotentialStaysDegenerate) {
  // J13 = J42 = 1 and Q21(x) = Q12(1 - x) make P1 = P2 = 0 everywhere; Delta still vanishes identically.
  const auto [xs, ys] = middle_bump();
  std::vector<CMatrix> qs;
  for (double y : ys) qs.push_back(offdiag(2.0 * y, 2.0 * y));
  const SystemProblem p{dirac_blocks(), PotentialSpec::grid(xs, qs), mirror_conditions(1.0, 1.0)};
  const auto dw = witness_dirac_degenerate(p);
  EXPECT_NEAR(dw.epsilon, 0.25, 1e-12);
  ASSERT_TRUE(detect_degenerate(CharFunction(p)).degenerate);
  std::vector<cplx> ls;
  for (int k = 0; k < 20; ++k) ls.emplace_back(-10.0 + k, 0.3 * ((k % 3) - 1));
  const auto fam = solution_family(p, ls, dw.witness.grid, EvalMethod::Auto, IntegratorOptions{1e-12, 1e-14});
  EXPECT_LT(max_normalized_inner(fam, dw.witness.values, simpson_weights(dw.witness.grid)), 1e-7);
}

TEST(WitnessDirac, OneSidedMiddlePotential) {
  // Q12 = bump, Q21 = 0: P1, P2 vanish near the endpoints only, and the spectrum is discrete.
  const auto [xs, ys] = middle_bump();
  std::vector<CMatrix> qs;
  for (double y : ys) qs.push_back(offdiag(3.0 * y, 0.0));
  const SystemProblem p{dirac_blocks(), PotentialSpec::grid(xs, qs), mirror_conditions(1.0, 1.0)};
  const auto dw = witness_dirac_degenerate(p);
  EXPECT_NEAR(dw.epsilon, 0.25, 1e-12);
  const CharFunction cf(p);
  ASSERT_FALSE(detect_degenerate(cf).degenerate);
  const auto spec = find_eigenvalues(cf, {-15.0, 15.0, -3.0, 3.0});
  ASSERT_FALSE(spec.eigenvalues.empty());
  const auto sys = build_chains(p, spec);
  EXPECT_LT(max_normalized_inner(sys.functions(), dw.witness.values, sys.weights), 1e-7);
}

TEST(WitnessDirac, EndpointCouplingIsRejected) {
  const SystemProblem p{dirac_blocks(), PotentialSpec::constant(offdiag(1.0, 0.0)), mirror_conditions(1.0, 1.0)};
  try {
    witness_dirac_degenerate(p);
    FAIL() << "expected ApplicabilityError";
  } catch (const ApplicabilityError& e) {
    EXPECT_NE(std::string(e.what()).find("max |P|"), std::string::npos);
  }
  EXPECT_THROW(witness_dirac_degenerate(periodic()), ApplicabilityError);  // J14 != 0
}

TEST(Criteria2x2, DirichletWithCouplingPassesEndpointCriterion) {
  const auto r = criteria_2x2(dirichlet_q1());
  const auto* c = r.find("endpoint-coupling");
  ASSERT_NE(c, nullptr);
  EXPECT_TRUE(c->applicable);
  EXPECT_TRUE(c->passed);
  EXPECT_FALSE(r.find("weak-regularity")->passed);
  EXPECT_EQ(r.prediction, Prediction::Complete);
  EXPECT_EQ(r.basis, "endpoint-coupling");
}

TEST(Criteria2x2, DirichletWithoutPotentialIsDegenerate) {
  const SystemProblem p{dirac_blocks(), PotentialSpec::zero(2), dirichlet_first()};
  const auto r = criteria_2x2(p);
  EXPECT_TRUE(r.find("degenerate")->passed);
  EXPECT_FALSE(r.find("endpoint-coupling")->passed);
  EXPECT_EQ(r.prediction, Prediction::Incomplete);
}

TEST(Criteria2x2, NonrealRatioPattern) {
  const SystemProblem p{BlockStructure{{1, 1}, {I_unit, 1.0}}, PotentialSpec::zero(2), h_conditions(1.0, 1.0)};
  const auto r = criteria_2x2(p);
  EXPECT_FALSE(r.find("weak-regularity")->passed);
  EXPECT_TRUE(r.find("nonreal-ratio-pair")->passed);
  EXPECT_EQ(r.prediction, Prediction::CompleteAdjointIncomplete);
  // The adjoint carries the Volterra condition y2(1) = 0.
  const auto ra = criteria_2x2(adjoint_problem(p));
  EXPECT_TRUE(ra.find("volterra-row")->passed);
  EXPECT_EQ(ra.prediction, Prediction::Incomplete);
}

TEST(Criteria2x2, RegularPeriodicAndSelfadjointIrregular) {
  EXPECT_EQ(criteria_2x2(periodic()).prediction, Prediction::Complete);
  // b = (-1, 2) with T_- singular and Q = 0.
  CMatrix c(2, 2);
  c << 0.0, 1.0, 1.0, 0.0;
  const SystemProblem p{BlockStructure{{1, 1}, {-1.0, 2.0}}, PotentialSpec::zero(2),
                        BoundaryPair{c, CMatrix::Identity(2, 2)}};
  const auto r = criteria_2x2(p);
  EXPECT_EQ(r.prediction, Prediction::Incomplete);
  EXPECT_TRUE(r.find("selfadjoint-irregular")->passed);
}

TEST(Criteria2x2, MirrorSupportAndUnclassifiedRegion) {
  const SystemProblem zero{dirac_blocks(), PotentialSpec::zero(2), mirror_conditions(2.0, 0.5)};
  EXPECT_EQ(criteria_2x2(zero).prediction, Prediction::Incomplete);
  // Q12 = 1 near 0 only breaks the support hypothesis but J14 = J32 = 0 and the endpoint sums still vanish
  // at x = 1: no criterion decides.
  const SystemProblem partial{dirac_blocks(), PotentialSpec::polynomial(2, {{}, {1.0, -1.0}, {}, {}}),
                              mirror_conditions(1.0, 1.0)};
  const auto r = criteria_2x2(partial);
  EXPECT_FALSE(r.find("mirror-support")->passed);
  EXPECT_FALSE(r.find("endpoint-coupling")->passed);
  EXPECT_EQ(r.prediction, Prediction::Unclassified);
}

TEST(Criteria2x2, EndpointCriterionHoldsForTheAdjointToo) {
  auto& g = testsupport::rng();
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto bc = BoundaryPair::from_combined(testsupport::random_matrix(2, 4, g));
    const CMatrix q = offdiag(testsupport::random_complex(g), testsupport::random_complex(g));
    const SystemProblem p{dirac_blocks(), PotentialSpec::constant(q), bc};
    const auto r = criteria_2x2(p);
    if (!r.find("endpoint-coupling")->passed) continue;
    ++checked;
    EXPECT_TRUE(criteria_2x2(adjoint_problem(p)).find("endpoint-coupling")->passed);
  }
  EXPECT_GT(checked, 20);
  // Irregular conditions with Q12(0) Q12(1) != 0.
  const auto r = criteria_2x2(adjoint_problem(dirichlet_q1()));
  EXPECT_TRUE(r.find("endpoint-coupling")->passed);
}

TEST(Criteria2x2, ContinuityGateForSampledPotentials) {
  std::vector<double> xs{0.0, 0.5, 1.0};
  std::vector<CMatrix> qs{offdiag(1.0, 1.0), offdiag(1.0, 1.0), offdiag(2.0, 1.0)};
  const SystemProblem p{dirac_blocks(), PotentialSpec::grid(xs, qs), dirichlet_first()};
  const auto r = criteria_2x2(p);
  const auto* c = r.find("endpoint-coupling");
  EXPECT_FALSE(c->applicable);
  EXPECT_NE(c->detail.find("continuity"), std::string::npos) << c->detail;
  EXPECT_THROW(criteria_2x2(SystemProblem{BlockStructure{{1, 1, 1}, {-1.0, 1.0, 2.0}}, PotentialSpec::zero(3),
                                          BoundaryPair{CMatrix::Identity(3, 3), -CMatrix::Identity(3, 3)}}),
               DimensionError);
}
