#include <gtest/gtest.h>

#include "birk/evolve.hpp"
#include "support.hpp"

using namespace birk;

namespace {

BlockStructure dirac_blocks() { return BlockStructure{{1, 1}, {-1.0, 1.0}}; }

CMatrix offdiag(cplx a, cplx b) {
  CMatrix q = CMatrix::Zero(2, 2);
  q(0, 1) = a;
  q(1, 0) = b;
  return q;
}

SystemProblem with_potential(BlockStructure blocks, PotentialSpec q) {
  const int n = blocks.n();
  return {std::move(blocks), std::move(q), BoundaryPair{CMatrix::Identity(n, n), -CMatrix::Identity(n, n)}};
}

// Phi(x) = cos(rho x) I + i sin(rho x)/rho N for b = (-1, 1), Q = [[0, q], [q, 0]], where N = [[-l, q], [-q, l]].
CMatrix dirac_phi(cplx lambda, double q, double x) {
  CMatrix nm(2, 2);
  nm << -lambda, q, -q, lambda;
  const cplx rho = std::sqrt(lambda * lambda - q * q);
  return std::cos(rho * x) * CMatrix::Identity(2, 2) + I_unit * std::sin(rho * x) / rho * nm;
}

CMatrix dirac_phi_dlambda(cplx lambda, double q, double x) {
  CMatrix nm(2, 2), dn(2, 2);
  nm << -lambda, q, -q, lambda;
  dn << -1.0, 0.0, 0.0, 1.0;
  const cplx rho = std::sqrt(lambda * lambda - q * q), drho = lambda / rho;
  const cplx s = std::sin(rho * x), c = std::cos(rho * x);
  return -x * s * drho * CMatrix::Identity(2, 2) + I_unit * (x * c * rho - s) / (rho * rho) * drho * nm +
         I_unit * s / rho * dn;
}

}  // namespace

TEST(Fundamental, IntegratorMatchesClosedFormForZeroPotential) {
  const BlockStructure blocks{{1, 2, 1}, {-1.0, 2.0, cplx(0.5, 1.0)}};
  const auto p = with_potential(blocks, PotentialSpec::grid({0.0, 1.0}, {CMatrix::Zero(4, 4), CMatrix::Zero(4, 4)}));
  const auto grid = uniform_grid(11);
  for (cplx lambda : {cplx(0.0), cplx(3.0, 0.5), cplx(-12.0, -1.0)}) {
    const auto a = integrate_fundamental(p, lambda, 3, grid);
    const auto b = fundamental_closed_form(blocks, lambda, 3, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (int k = 0; k <= 3; ++k) {
        const double scale = std::max(1.0, b.at(i, k).norm());
        EXPECT_LT((a.at(i, k) - b.at(i, k)).norm() / scale, 1e-8) << "lambda=" << lambda << " x=" << grid[i] << " p=" << k;
      }
  }
}

TEST(Fundamental, StartsAtIdentity) {
  const auto p = with_potential(dirac_blocks(), PotentialSpec::polynomial(2, {{}, {1.0, 1.0}, {2.0}, {}}));
  const auto f = integrate_fundamental(p, cplx(2.0, 1.0), 2, {0.0, 0.5});
  EXPECT_EQ(f.at(0, 0), CMatrix::Identity(2, 2));
  EXPECT_EQ(f.at(0, 1), CMatrix::Zero(2, 2));
}

TEST(Fundamental, ConstantPotentialAgainstDiracClosedForm) {
  const double q = 1.0;
  const auto p = with_potential(dirac_blocks(), PotentialSpec::constant(offdiag(q, q)));
  const std::vector<double> grid{0.0, 0.3, 1.0};
  for (cplx lambda : {cplx(0.5), cplx(4.0, 0.3), cplx(40.0, -0.5), cplx(0.0, 3.0)}) {
    const auto e = fundamental_constant(p, lambda, 1, grid);
    const auto it = integrate_fundamental(p, lambda, 1, grid);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const CMatrix phi = dirac_phi(lambda, q, grid[i]);
      const CMatrix dphi = dirac_phi_dlambda(lambda, q, grid[i]);
      EXPECT_LT((e.at(i, 0) - phi).norm() / phi.norm(), 1e-12) << lambda;
      EXPECT_LT((e.at(i, 1) - dphi).norm() / std::max(1.0, dphi.norm()), 1e-11) << lambda;
      EXPECT_LT((it.at(i, 0) - phi).norm() / phi.norm(), 1e-8) << lambda;
      EXPECT_LT((it.at(i, 1) - dphi).norm() / std::max(1.0, dphi.norm()), 1e-8) << lambda;
    }
  }
}

TEST(Fundamental, HigherDerivativesConsistentAcrossRoutes) {
  CMatrix q = testsupport::random_matrix(3, 3);
  const BlockStructure blocks{{1, 1, 1}, {-1.0, 0.5, 2.0}};
  const auto p = with_potential(blocks, PotentialSpec::constant(q));
  const cplx lambda(1.5, -0.4);
  const auto e = fundamental_constant(p, lambda, 4, {1.0});
  const auto it = integrate_fundamental(p, lambda, 4, {1.0});
  for (int k = 0; k <= 4; ++k)
    EXPECT_LT((e.at(0, k) - it.at(0, k)).norm() / std::max(1.0, e.at(0, k).norm()), 1e-8) << "p=" << k;
}

// Central differences of Phi(1; lambda) have O(h^2) error: halving h divides the error by about four.
TEST(Fundamental, FiniteDifferenceSecondOrder) {
  const auto p = with_potential(dirac_blocks(), PotentialSpec::polynomial(2, {{}, {1.0, -2.0}, {0.5, 0.0, 3.0}, {}}));
  const cplx lambda(2.0, 0.5);
  IntegratorOptions tight;
  tight.rtol = 1e-13;
  const CMatrix exact = integrate_fundamental(p, lambda, 1, {1.0}, tight).at(0, 1);
  auto fd = [&](double h) {
    const CMatrix a = integrate_fundamental(p, lambda + h, 0, {1.0}, tight).at(0, 0);
    const CMatrix b = integrate_fundamental(p, lambda - h, 0, {1.0}, tight).at(0, 0);
    return ((a - b) / (2.0 * h) - exact).norm();
  };
  const double e1 = fd(1e-2), e2 = fd(5e-3);
  EXPECT_NEAR(e1 / e2, 4.0, 0.3);
}

TEST(Fundamental, CocycleRestart) {
  const auto p = with_potential(dirac_blocks(), PotentialSpec::polynomial(2, {{0.3}, {1.0, 1.0}, {cplx(0, 2)}, {-1.0, 0.0, 1.0}}));
  const cplx lambda(5.0, 0.7);
  const auto f = integrate_fundamental(p, lambda, 0, {0.5, 1.0});
  const CMatrix restarted = propagate(p, lambda, 0.5, 1.0, f.at(0));
  EXPECT_LT((restarted - f.at(1)).norm() / f.at(1).norm(), 1e-8);
}

TEST(Fundamental, LiouvilleFormula) {
  // q_00 = 1 + x, q_11 = 2x^2, off-diagonal 3: tr(i B^{-1}(lambda - Q)) = i(-1)(lambda - 1 - x) + i(lambda - 2 x^2).
  const auto p = with_potential(dirac_blocks(), PotentialSpec::polynomial(2, {{1.0, 1.0}, {3.0}, {3.0}, {0.0, 0.0, 2.0}}));
  for (cplx lambda : {cplx(1.0), cplx(7.0, -0.3)}) {
    const auto f = integrate_fundamental(p, lambda, 0, {0.4, 1.0});
    for (std::size_t i = 0; i < 2; ++i) {
      const double x = f.grid[i];
      const cplx expected = std::exp(I_unit * (x + 0.5 * x * x) - I_unit * 2.0 * x * x * x / 3.0);
      EXPECT_LT(std::abs(det(f.at(i)) - expected), 1e-9) << lambda;
    }
  }
}

TEST(Fundamental, GridPotentialHonoursBreakpoints) {
  // Piecewise-constant potential with a jump at 0.5; integrating in two constant pieces gives the oracle.
  const CMatrix q = offdiag(1.0, 1.0);
  const auto p = with_potential(dirac_blocks(), PotentialSpec::grid({0.0, 0.5, 0.5 + 1e-12, 1.0}, {q, q, 2.0 * q, 2.0 * q}));
  const cplx lambda(3.0, 0.1);
  const CMatrix oracle = dirac_phi(lambda, 2.0, 0.5) * dirac_phi(lambda, 1.0, 0.5);
  const auto f = integrate_fundamental(p, lambda, 0, {1.0});
  EXPECT_LT((f.at(0) - oracle).norm() / oracle.norm(), 1e-8);
}

TEST(Fundamental, RejectsBadInput) {
  const auto p = with_potential(dirac_blocks(), PotentialSpec::zero(2));
  EXPECT_THROW(integrate_fundamental(p, 1.0, 5, {1.0}), DomainError);
  EXPECT_THROW(integrate_fundamental(p, 1.0, 0, {0.5, 0.2}), DomainError);
  EXPECT_THROW(integrate_fundamental(p, 1.0, 0, {1.5}), DomainError);
  EXPECT_THROW(fundamental(with_potential(dirac_blocks(), PotentialSpec::constant(offdiag(1, 1))), 1.0, 0, {1.0},
                           EvalMethod::ClosedForm),
               ApplicabilityError);
}

TEST(Fundamental, MethodResolution) {
  EXPECT_EQ(resolve_method(with_potential(dirac_blocks(), PotentialSpec::zero(2)), EvalMethod::Auto), EvalMethod::ClosedForm);
  EXPECT_EQ(resolve_method(with_potential(dirac_blocks(), PotentialSpec::constant(offdiag(1, 1))), EvalMethod::Auto),
            EvalMethod::Exponential);
  EXPECT_EQ(resolve_method(with_potential(dirac_blocks(), PotentialSpec::polynomial(2, {{}, {1.0}, {}, {}})), EvalMethod::Auto),
            EvalMethod::Integrate);
}

TEST(Gauge, ZeroBlockDiagonalIsIdentity) {
  const auto p = with_potential(dirac_blocks(), PotentialSpec::constant(offdiag(1.0, 2.0)));
  const auto g = gauge_transform(p);
  EXPECT_EQ(g.W1, CMatrix::Identity(2, 2));
  EXPECT_EQ(g.transformed.kind(), PotentialKind::Constant);
  EXPECT_EQ(g.induced.bc.D, p.bc.D);
}

// Q = I + 0.3 offdiag with b = (-1, 1): W = diag(e^{ix}, e^{-ix}), Q~_12 = 0.3 e^{-2ix}, Q~_21 = 0.3 e^{2ix}.
TEST(Gauge, ScalarDiagonalExample) {
  CMatrix q = offdiag(0.3, 0.3);
  q(0, 0) = q(1, 1) = 1.0;
  const auto p = with_potential(dirac_blocks(), PotentialSpec::constant(q));
  const auto g = gauge_transform(p);
  for (std::size_t i = 0; i < g.grid.size(); i += 64) {
    const double x = g.grid[i];
    EXPECT_LT(std::abs(g.W[i](0, 0) - std::exp(I_unit * x)), 1e-9);
    EXPECT_LT(std::abs(g.W[i](1, 1) - std::exp(-I_unit * x)), 1e-9);
    const CMatrix qt = eval_potential(g.transformed, x);
    EXPECT_LT(std::abs(qt(0, 1) - 0.3 * std::exp(-2.0 * I_unit * x)), 1e-9);
    EXPECT_LT(std::abs(qt(1, 0) - 0.3 * std::exp(2.0 * I_unit * x)), 1e-9);
    EXPECT_EQ(qt(0, 0), cplx(0.0));
  }
  EXPECT_TRUE(has_zero_block_diagonal(g.transformed, p.blocks));
}

TEST(Gauge, CharacteristicDeterminantPreserved) {
  CMatrix q = offdiag(0.3, 0.3);
  q(0, 0) = 1.0;
  q(1, 1) = cplx(0.5, 0.2);
  auto p = with_potential(dirac_blocks(), PotentialSpec::constant(q));
  p.bc = BoundaryPair::from_combined((CMatrix(2, 4) << 1.0, 0.5, 0.0, 2.0, 0.0, 1.0, 1.0, 0.0).finished());
  const auto g = gauge_transform(p);
  for (cplx lambda : {cplx(1.0), cplx(6.5, 0.4)}) {
    const CMatrix phi = fundamental(p, lambda, 0, {1.0}).at(0);
    const CMatrix phit = fundamental(g.induced, lambda, 0, {1.0}).at(0);
    const cplx d0 = det(p.bc.C + p.bc.D * phi), d1 = det(g.induced.bc.C + g.induced.bc.D * phit);
    EXPECT_LT(std::abs(d0 - d1) / std::abs(d0), 1e-6) << lambda;
  }
}

TEST(Asymptotics, ZeroPotentialIsExact) {
  auto p = with_potential(BlockStructure{{1, 1, 1}, {-1.0, 1.0, 2.0}}, PotentialSpec::zero(3));
  const auto rep = check_asymptotics(p, cplx(1.0, 0.3), {5.0, 20.0});
  for (const auto& s : rep.samples) {
    EXPECT_LT(s.diagonal_deviation, 1e-12);
    EXPECT_LT(s.offdiagonal_deviation, 1e-12);
  }
}

TEST(Asymptotics, DeviationsDecayAndDeterminantConverges) {
  auto p = with_potential(dirac_blocks(), PotentialSpec::polynomial(2, {{}, {1.0, 1.0}, {0.5, -1.0}, {}}));
  p.bc = BoundaryPair::from_combined((CMatrix(2, 4) << 1.0, 0.5, 0.0, 2.0, 0.0, 1.0, 1.0, 0.0).finished());
  AsymptoticOptions opt;
  opt.burn_in = 5.0;
  const auto rep = check_asymptotics(p, 1.0, {10.0, 20.0, 40.0, 80.0}, opt);
  EXPECT_TRUE(rep.diagonal_monotone);
  EXPECT_TRUE(rep.offdiagonal_monotone);
  EXPECT_LT(rep.samples.back().offdiagonal_deviation, 0.05);
  ASSERT_TRUE(rep.limit_determinant.has_value());
  double prev = 1e300;
  for (const auto& s : rep.samples) {
    const double err = std::abs(*s.normalized_determinant - *rep.limit_determinant);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 0.05 * std::abs(*rep.limit_determinant));
}

TEST(Asymptotics, Preconditions) {
  CMatrix q = offdiag(1.0, 1.0);
  q(0, 0) = 1.0;
  EXPECT_THROW(check_asymptotics(with_potential(dirac_blocks(), PotentialSpec::constant(q)), 1.0, {10.0}), ApplicabilityError);
  const auto p = with_potential(dirac_blocks(), PotentialSpec::zero(2));
  EXPECT_THROW(check_asymptotics(p, I_unit, {10.0}), ApplicabilityError);
  const auto rep = check_asymptotics(p, std::polar(1.0, std::numbers::pi / 2 - 0.01), {10.0});
  EXPECT_FALSE(rep.warnings.empty());
}
