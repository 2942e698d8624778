#pragma once

// Named example problems: the weakly regular n = 3 and n = 5 families, Dirac systems with periodic, Dirichlet-type
// and mirror conditions, the nonreal-ratio pair and a selfadjoint irregular pair with a step-function witness.

#include <algorithm>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "birk/spectrum.hpp"

namespace birk {

struct Preset {
  std::string name;
  std::string description;
  std::string anchor;  // the result the preset reproduces
  SystemProblem problem;
  std::optional<Window> window;
  std::size_t grid = 2001;
};

namespace presets {

inline BlockStructure roots_of_unity(int n) {
  BlockStructure b;
  for (int j = 1; j <= n; ++j) {
    b.sizes.push_back(1);
    b.weights.push_back(std::polar(1.0, 2.0 * std::numbers::pi * j / n));
  }
  return b;
}

inline BlockStructure dirac() { return {{1, 1}, {-1.0, 1.0}}; }

inline CMatrix offdiag(cplx a, cplx b) {
  CMatrix q = CMatrix::Zero(2, 2);
  q(0, 1) = a;
  q(1, 0) = b;
  return q;
}

// y_j(0) = d_j y_j(1).
inline Preset separated() {
  CVector d(3);
  d << 1.0, 2.0, cplx(0.0, -0.5);
  return {"ex1-separated", "n = 3, y_j(0) = d_j y_j(1) with d_j != 0; regular for every B",
          "D = CM with nonsingular principal minors", {roots_of_unity(3), PotentialSpec::zero(3),
          BoundaryPair{CMatrix::Identity(3, 3), -CMatrix(d.asDiagonal())}}, Window{-10, 10, -10, 10}, 2001};
}

// One condition at 0, two at 1, b_j = exp(2 pi i j / 3).
inline Preset n3_split() {
  CMatrix c = CMatrix::Zero(3, 3), d = CMatrix::Zero(3, 3);
  c.row(0) << 1.0, cplx(0.5, 1.0), cplx(-2.0, 0.3);
  d.row(1) << cplx(1.1, 0.2), 0.0, cplx(0.7, -1.0);
  d.row(2) << 0.0, cplx(-0.4, 0.9), cplx(2.0, 1.0);
  return {"ex-n3-split", "n = 3 splitting conditions (1 at 0, 2 at 1), b_j = cube roots of unity",
          "irregular but weakly regular splitting conditions, n = 2k + 1", {roots_of_unity(3), PotentialSpec::zero(3),
          BoundaryPair{c, d}}, std::nullopt, 2001};
}

// Vandermonde rows: k = 2 conditions at 0, k + 1 = 3 at 1, n = 5.
inline Preset vandermonde() {
  const int n = 5, k = 2;
  CMatrix a = CMatrix::Zero(n, 2 * n);
  const cplx cs[] = {1.0, 2.0, -1.0, cplx(0.0, 1.0), cplx(0.5, -0.5)};
  const cplx ds[] = {-2.0, 1.5, cplx(0.0, -1.0), 3.0, cplx(1.0, 1.0)};
  for (int j = 0; j < n; ++j) {
    for (int r = 0; r < k; ++r) a(r, j) = std::pow(cs[j], r);
    for (int r = 0; r <= k; ++r) a(k + r, n + j) = std::pow(ds[j], r);
  }
  return {"ex-vandermonde", "n = 5 splitting Vandermonde conditions, b_j = fifth roots of unity",
          "irregular but weakly regular splitting conditions, Vandermonde minors",
          {roots_of_unity(n), PotentialSpec::zero(n), BoundaryPair::from_combined(a)}, std::nullopt, 2001};
}

// y_j(0) = sum_{k != j} d_jk y_k(1), encoded as C = I, D = (d_jk) with zero diagonal.
inline Preset n3_cyclic() {
  CMatrix d(3, 3);
  d << 0.0, cplx(1.5, 0.2), cplx(0.8, -1.1), cplx(-0.7, 2.0), 0.0, cplx(0.3, 0.9), cplx(3.0, 1.0), cplx(0.4, -0.4),
      0.0;
  return {"ex-n3-cyclic", "n = 3 nonsplitting conditions y_j(0) ~ sum_{k != j} d_jk y_k(1)",
          "nonsplitting irregular, weakly regular: det T_B = -d12 d21, det T_-B = 0",
          {roots_of_unity(3), PotentialSpec::zero(3), BoundaryPair{CMatrix::Identity(3, 3), d}}, std::nullopt, 2001};
}

// c_j y_j(0) = d . y(1) for j = 1, 2, 3.
inline Preset n3_equal_rows() {
  const cplx c1(2.0, 0.5), c2(-1.0, 1.0), c3(0.7, 0.0), d1(1.0, -0.3), d2(0.6, 0.6), d3(-1.2, 0.4);
  CMatrix c = CMatrix::Zero(3, 3), d(3, 3);
  c(0, 0) = c1;
  c(1, 1) = c2;
  c(2, 2) = c3;
  for (int i = 0; i < 3; ++i) d.row(i) << d1, d2, d3;
  return {"ex-n3-equal-rows", "n = 3 nonsplitting conditions c_j y_j(0) = d . y(1)",
          "nonsplitting irregular, weakly regular: det T_-B = c1 c2 d3, det T_B = 0",
          {roots_of_unity(3), PotentialSpec::zero(3), BoundaryPair{c, d}}, std::nullopt, 2001};
}

inline Preset dirac_periodic() {
  return {"dirac-periodic", "b = (-1, 1), Q = 0, y(0) = y(1); Delta = 2 - 2 cos(lambda)",
          "regular selfadjoint conditions", {dirac(), PotentialSpec::zero(2),
          BoundaryPair{CMatrix::Identity(2, 2), -CMatrix::Identity(2, 2)}}, Window{-20, 20, -2, 2}, 2001};
}

inline BoundaryPair dirichlet_first() {
  CMatrix c = CMatrix::Zero(2, 2), d = CMatrix::Zero(2, 2);
  c(0, 0) = 1.0;
  d(1, 0) = 1.0;
  return {c, d};
}

inline Preset dirac_dirichlet() {
  return {"dirac-dirichlet", "b = (-1, 1), Q = 0, y1(0) = y1(1) = 0; Delta vanishes identically",
          "unperturbed irregular operator is incomplete", {dirac(), PotentialSpec::zero(2), dirichlet_first()},
          Window{-17, 17, -1, 1}, 2001};
}

inline Preset dirac_dirichlet_q1() {
  return {"dirac-dirichlet-q1", "b = (-1, 1), Q12 = Q21 = 1, y1(0) = y1(1) = 0; Delta = i sin(rho)/rho",
          "irregular conditions completed by Q12(0) Q12(1) != 0",
          {dirac(), PotentialSpec::constant(offdiag(1.0, 1.0)), dirichlet_first()}, Window{-130, 130, -1, 1}, 2001};
}

// y1(0) = -a1 y2(1), y2(0) = -a2 y1(1).
inline BoundaryPair mirror_conditions(cplx a1, cplx a2) {
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 1) = a1;
  d(1, 0) = a2;
  return {CMatrix::Identity(2, 2), d};
}

inline Preset mirror_degenerate() {
  return {"prop512-mirror", "b = (-1, 1), Q = 0, y1(0) = -y2(1), y2(0) = -y1(1); degenerate, mirrored-bump witness",
          "infinite defect when P1, P2 vanish near the endpoints",
          {dirac(), PotentialSpec::zero(2), mirror_conditions(1.0, 1.0)}, Window{-15, 15, -3, 3}, 2001};
}

// Q12 = 3 * 16 t^2 (1 - t)^2 on [0.25, 0.75] (t the local coordinate), Q21 = 0, sampled on 201 points.
inline Preset mirror_middle_bump() {
  std::vector<double> xs;
  std::vector<CMatrix> qs;
  for (int i = 0; i <= 200; ++i) {
    const double x = i / 200.0;
    const double t = std::clamp((x - 0.25) / 0.5, 0.0, 1.0);
    xs.push_back(x);
    qs.push_back(offdiag(48.0 * t * t * (1 - t) * (1 - t), 0.0));
  }
  return {"mirror-middle-bump", "mirror conditions with Q12 a bump inside [0.25, 0.75]; discrete spectrum, still incomplete",
          "infinite defect when P1, P2 vanish near the endpoints",
          {dirac(), PotentialSpec::grid(xs, qs), mirror_conditions(1.0, 1.0)}, Window{-15, 15, -3, 3}, 2001};
}

// y1(0) - h0 y2(0) = 0, y1(1) - h1 y2(0) = 0.
inline BoundaryPair h_conditions(cplx h0, cplx h1) {
  CMatrix c(2, 2), d = CMatrix::Zero(2, 2);
  c << 1.0, -h0, 0.0, -h1;
  d(1, 0) = 1.0;
  return {c, d};
}

inline Preset nonreal_pair() {
  return {"th71-nonreal", "b = (i, 1), Q = 0, y1(0) = y2(0), y1(1) = y2(0); eigenvalues 2 pi i k",
          "nonreal weight ratio: complete and minimal, adjoint incomplete",
          {BlockStructure{{1, 1}, {I_unit, 1.0}}, PotentialSpec::zero(2), h_conditions(1.0, 1.0)},
          Window{-1, 1, -195, 195}, 2001};
}

// b = (-1, 2), first row y2(0) + y1(1) = 0 only touches the T_- endpoints; Delta = e^{i lambda} - 1.
inline Preset tminus_step() {
  CMatrix c(2, 2);
  c << 0.0, 1.0, 1.0, 0.0;
  return {"tminus-step", "b = (-1, 2), Q = 0, det T_- = 0; step-function witness of infinite defect",
          "selfadjoint B with singular T_-: incomplete",
          {BlockStructure{{1, 1}, {-1.0, 2.0}}, PotentialSpec::zero(2), BoundaryPair{c, CMatrix::Identity(2, 2)}},
          Window{-160, 160, -1, 1}, 20001};
}

}  // namespace presets

inline std::vector<Preset> list_presets() {
  using namespace presets;
  return {separated(),       n3_split(),       vandermonde(),    n3_cyclic(),    n3_equal_rows(),
          dirac_periodic(),  dirac_dirichlet(), dirac_dirichlet_q1(), mirror_degenerate(), mirror_middle_bump(),
          nonreal_pair(),    tminus_step()};
}

inline Preset find_preset(const std::string& name) {
  for (auto& p : list_presets())
    if (p.name == name) return p;
  throw ValidationError("unknown preset '" + name + "'");
}

}  // namespace birk
