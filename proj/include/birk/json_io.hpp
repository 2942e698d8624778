#pragma once

// JSON encoding of problems and reports, CSV tables. Complex numbers are [re, im] pairs; matrices are arrays of rows.

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "birk/evolve.hpp"
#include "birk/regularity.hpp"
#include "birk/rootspace.hpp"
#include "birk/spectrum.hpp"

namespace birk {

using json = nlohmann::json;

// ---------------------------------------------------------------------------------------------------------------
// Encoding

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

inline json to_json(const PotentialSpec& q) {
  switch (q.kind()) {
    case PotentialKind::Zero: return {{"variant", "zero"}, {"n", q.dim()}};
    case PotentialKind::Constant:
      return {{"variant", "constant"}, {"value", to_json(std::get<ConstantPotential>(q.variant()).value)}};
    case PotentialKind::Grid: {
      const auto& g = std::get<GridPotential>(q.variant());
      json values = json::array();
      for (const auto& m : g.values) values.push_back(to_json(m));
      return {{"variant", "grid"}, {"x", g.x}, {"values", std::move(values)}};
    }
    case PotentialKind::Polynomial: {
      const auto& p = std::get<PolynomialPotential>(q.variant());
      json coeffs = json::array();
      for (const auto& c : p.coeffs) {
        json list = json::array();
        for (auto v : c) list.push_back(to_json(v));
        coeffs.push_back(std::move(list));
      }
      return {{"variant", "poly"}, {"n", p.n}, {"coeffs", std::move(coeffs)}};
    }
  }
  return {};
}

inline json to_json(const SystemProblem& p) {
  json weights = json::array();
  for (auto b : p.blocks.weights) weights.push_back(to_json(b));
  return {{"blocks", {{"sizes", p.blocks.sizes}, {"weights", std::move(weights)}}},
          {"potential", to_json(p.potential)},
          {"bc", {{"C", to_json(p.bc.C)}, {"D", to_json(p.bc.D)}}}};
}

// ---------------------------------------------------------------------------------------------------------------
// Decoding. Every failure names the offending location as a JSON pointer.

namespace detail {

inline const json& field(const json& j, const std::string& key, const std::string& at) {
  if (!j.is_object()) throw ValidationError("expected an object", at.empty() ? "/" : at);
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError("missing field '" + key + "'", at + "/" + key);
  return *it;
}

inline const json& array_at(const json& j, const std::string& at) {
  if (!j.is_array()) throw ValidationError("expected an array", at);
  return j;
}

inline double number_at(const json& j, const std::string& at) {
  if (!j.is_number()) throw ValidationError("expected a number", at);
  return j.get<double>();
}

inline int integer_at(const json& j, const std::string& at) {
  if (!j.is_number_integer()) throw ValidationError("expected an integer", at);
  return j.get<int>();
}

inline cplx complex_at(const json& j, const std::string& at) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("expected a complex number [re, im]", at);
  return {number_at(j[0], at + "/0"), number_at(j[1], at + "/1")};
}

inline CMatrix matrix_at(const json& j, const std::string& at) {
  array_at(j, at);
  if (j.empty()) throw ValidationError("matrix has no rows", at);
  const std::size_t cols = array_at(j[0], at + "/0").size();
  CMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string row_at = at + "/" + std::to_string(i);
    const auto& row = array_at(j[i], row_at);
    if (row.size() != cols) throw ValidationError("ragged matrix row", row_at);
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = complex_at(row[c], row_at + "/" + std::to_string(c));
  }
  return m;
}

}  // namespace detail

inline PotentialSpec potential_from_json(const json& j, const std::string& at = "/potential") {
  using namespace detail;
  const auto& v = field(j, "variant", at);
  if (!v.is_string()) throw ValidationError("expected a string", at + "/variant");
  const auto variant = v.get<std::string>();
  if (variant == "zero") return PotentialSpec::zero(integer_at(field(j, "n", at), at + "/n"));
  if (variant == "constant") return PotentialSpec::constant(matrix_at(field(j, "value", at), at + "/value"));
  if (variant == "grid") {
    const auto& xs = array_at(field(j, "x", at), at + "/x");
    const auto& vals = array_at(field(j, "values", at), at + "/values");
    std::vector<double> x;
    std::vector<CMatrix> values;
    for (std::size_t i = 0; i < xs.size(); ++i) x.push_back(number_at(xs[i], at + "/x/" + std::to_string(i)));
    for (std::size_t i = 0; i < vals.size(); ++i) values.push_back(matrix_at(vals[i], at + "/values/" + std::to_string(i)));
    return PotentialSpec::grid(std::move(x), std::move(values));
  }
  if (variant == "poly") {
    const int n = integer_at(field(j, "n", at), at + "/n");
    const auto& cs = array_at(field(j, "coeffs", at), at + "/coeffs");
    std::vector<std::vector<cplx>> coeffs;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string e = at + "/coeffs/" + std::to_string(i);
      std::vector<cplx> list;
      for (std::size_t k = 0; k < array_at(cs[i], e).size(); ++k) list.push_back(complex_at(cs[i][k], e + "/" + std::to_string(k)));
      coeffs.push_back(std::move(list));
    }
    return PotentialSpec::polynomial(n, std::move(coeffs));
  }
  throw ValidationError("unknown potential variant '" + variant + "'", at + "/variant");
}

// Decodes and validates. Structural problems carry the pointer of the offending field; semantic violations point at
// the section they concern.
inline SystemProblem problem_from_json(const json& j) {
  using namespace detail;
  SystemProblem p;
  const auto& blocks = field(j, "blocks", "");
  const auto& sizes = array_at(field(blocks, "sizes", "/blocks"), "/blocks/sizes");
  const auto& weights = array_at(field(blocks, "weights", "/blocks"), "/blocks/weights");
  for (std::size_t i = 0; i < sizes.size(); ++i) p.blocks.sizes.push_back(integer_at(sizes[i], "/blocks/sizes/" + std::to_string(i)));
  for (std::size_t i = 0; i < weights.size(); ++i)
    p.blocks.weights.push_back(complex_at(weights[i], "/blocks/weights/" + std::to_string(i)));
  p.potential = potential_from_json(field(j, "potential", ""));
  const auto& bc = field(j, "bc", "");
  p.bc.C = matrix_at(field(bc, "C", "/bc"), "/bc/C");
  p.bc.D = matrix_at(field(bc, "D", "/bc"), "/bc/D");
  const auto rep = validate(p);
  if (!rep.valid()) {
    const auto& first = rep.violations.front();
    const std::string section = first.substr(0, first.find(':'));
    std::string all;
    for (const auto& v : rep.violations) all += (all.empty() ? "" : "; ") + v;
    throw ValidationError(all, "/" + section);
  }
  return p;
}

inline SystemProblem problem_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what(), "/");
  }
  return problem_from_json(j);
}

inline SystemProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read problem file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return problem_from_string(ss.str());
}

// ---------------------------------------------------------------------------------------------------------------
// Reports

inline json to_json(const Window& w) { return json::array({w.re_lo, w.re_hi, w.im_lo, w.im_hi}); }

inline json to_json(const RegularityReport& r) {
  json sectors = json::array();
  for (const auto& s : r.sectors)
    sectors.push_back({{"z", to_json(s.z)}, {"det", to_json(s.det)}, {"relative", s.relative}, {"nonzero", s.nonzero}});
  json out = {{"verdict", to_string(r.verdict)},
              {"rule", r.rule == ColumnRule::Exponent ? "exponent" : "reciprocal"},
              {"sectors", std::move(sectors)},
              {"rules_disagree", r.rules_disagree}};
  if (r.witness) out["witness"] = json::array({to_json((*r.witness)[0]), to_json((*r.witness)[1]), to_json((*r.witness)[2])});
  if (r.alternative_verdict) out["alternative_verdict"] = to_string(*r.alternative_verdict);
  json mismatch = json::array();
  for (auto z : r.rule_mismatch_directions) mismatch.push_back(to_json(z));
  out["rule_mismatch_directions"] = std::move(mismatch);
  return out;
}

inline json to_json(const SpectrumReport& s) {
  json eig = json::array();
  for (const auto& e : s.eigenvalues)
    eig.push_back({{"lambda", to_json(e.lambda)}, {"multiplicity", e.multiplicity}, {"residual", e.residual}});
  return {{"window", to_json(s.window)},   {"degenerate", s.degenerate}, {"eigenvalues", std::move(eig)},
          {"total_winding", s.total_winding}, {"cells", s.cells.size()},  {"evaluations", s.evaluations},
          {"nudges", s.nudges},             {"warnings", s.warnings}};
}

inline json to_json(const RootSystem& r) {
  json chains = json::array();
  for (const auto& c : r.chains)
    chains.push_back({{"lambda", to_json(c.lambda)},
                      {"multiplicity", c.multiplicity},
                      {"j_index", c.j_index},
                      {"shift", c.shift},
                      {"length", c.chain.size()},
                      {"norms", c.norms},
                      {"bc_residuals", c.bc_residuals}});
  return {{"grid_points", r.grid.size()}, {"functions", r.size()}, {"chains", std::move(chains)}, {"warnings", r.warnings}};
}

inline json to_json(const ResidualTable& t) {
  json res = json::object();
  for (std::size_t p = 0; p < t.probes.size(); ++p) res[t.probes[p]] = t.residual[p];
  return {{"schedule", t.schedule}, {"probes", t.probes}, {"residuals", std::move(res)}, {"rank", t.rank},
          {"warnings", t.warnings}};
}

inline json to_json(const CriteriaReport& c) {
  json list = json::array();
  for (const auto& r : c.criteria)
    list.push_back({{"name", r.name}, {"applicable", r.applicable}, {"passed", r.passed}, {"value", r.value},
                    {"detail", r.detail}});
  return {{"criteria", std::move(list)}, {"prediction", to_string(c.prediction)}, {"basis", c.basis}};
}

inline json to_json(const CompletenessReport& r) {
  json grams = json::array();
  for (const auto& g : r.grams)
    grams.push_back({{"lambda", to_json(g.lambda)}, {"dimension", g.dimension}, {"sigma_min", g.sigma_min},
                     {"condition", g.condition}});
  json out = {{"residuals", to_json(r.residuals)}, {"grams", std::move(grams)}, {"verdict", r.verdict},
              {"warnings", r.warnings}};
  if (r.criteria) out["criteria"] = to_json(*r.criteria);
  if (r.witness)
    out["witness"] = {{"kind", r.witness->kind}, {"norm", r.witness->norm}, {"max_inner", r.witness->max_inner}};
  return out;
}

inline json to_json(const AsymptoticReport& a) {
  json samples = json::array();
  for (const auto& s : a.samples) {
    json e = {{"t", s.t}, {"lambda", to_json(s.lambda)}, {"diagonal_deviation", s.diagonal_deviation},
              {"offdiagonal_deviation", s.offdiagonal_deviation}};
    if (s.normalized_determinant) e["normalized_determinant"] = to_json(*s.normalized_determinant);
    samples.push_back(std::move(e));
  }
  json out = {{"z", to_json(a.z)},
              {"order", a.order},
              {"samples", std::move(samples)},
              {"burn_in", a.burn_in},
              {"diagonal_monotone", a.diagonal_monotone},
              {"offdiagonal_monotone", a.offdiagonal_monotone},
              {"warnings", a.warnings}};
  if (a.limit_determinant) out["limit_determinant"] = to_json(*a.limit_determinant);
  return out;
}

inline json to_json(const Witness& w) {
  json anchors = w.anchors;
  return {{"row", to_json(w.row)}, {"anchors", std::move(anchors)}, {"alpha", w.alpha},
          {"jumps_on_even_nodes", w.jumps_on_even_nodes}, {"norm", w.norm}, {"grid_points", w.grid.size()}};
}

// ---------------------------------------------------------------------------------------------------------------
// CSV: 17 significant digits, '.' separator regardless of locale.

inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void write_eigenvalues_csv(std::ostream& os, const SpectrumReport& s) {
  os << "re,im,multiplicity,residual\n";
  for (const auto& e : s.eigenvalues)
    os << format_double(e.lambda.real()) << ',' << format_double(e.lambda.imag()) << ',' << e.multiplicity << ','
       << format_double(e.residual) << '\n';
}

inline void write_residuals_csv(std::ostream& os, const ResidualTable& t) {
  os << "N,probe_id,residual\n";
  for (std::size_t k = 0; k < t.schedule.size(); ++k)
    for (std::size_t p = 0; p < t.probes.size(); ++p)
      os << t.schedule[k] << ',' << t.probes[p] << ',' << format_double(t.residual[p][k]) << '\n';
}

// One row per grid node: x, then re/im of every component.
inline void write_grid_function_csv(std::ostream& os, const std::vector<double>& grid, const GridFunction& f) {
  os << 'x';
  for (Eigen::Index i = 0; i < f.rows(); ++i) os << ",re" << i + 1 << ",im" << i + 1;
  os << '\n';
  for (std::size_t k = 0; k < grid.size(); ++k) {
    os << format_double(grid[k]);
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      const cplx v = f(i, static_cast<Eigen::Index>(k));
      os << ',' << format_double(v.real()) << ',' << format_double(v.imag());
    }
    os << '\n';
  }
}

}  // namespace birk
