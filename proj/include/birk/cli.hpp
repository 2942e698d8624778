#pragma once

// Command pipelines behind the birk executable. run() never throws: errors become exit codes
// (2 invalid input, 3 numerical failure with partial output, 4 hypotheses not met).

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "birk/json_io.hpp"
#include "birk/presets.hpp"

namespace birk {

enum class Command { Classify, Spectrum, Roots, Complete, Witness, Asymptote, Preset };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::Classify: return "classify";
    case Command::Spectrum: return "spectrum";
    case Command::Roots: return "roots";
    case Command::Complete: return "complete";
    case Command::Witness: return "witness";
    case Command::Asymptote: return "asymptote";
    case Command::Preset: return "preset";
  }
  return "?";
}

enum class OutputFormat { Json, Csv };

struct RunConfig {
  Command command = Command::Classify;
  std::optional<std::string> problem_path;
  std::optional<std::string> preset;
  std::optional<Window> window;
  std::optional<std::size_t> grid;
  std::optional<double> tol;
  std::optional<std::size_t> max_cells;  // contour-subdivision budget
  std::optional<std::string> out_dir;
  unsigned long long seed = 20240917ULL;
  OutputFormat format = OutputFormat::Json;
  cplx z{1.0, 0.0};                          // asymptote ray direction
  std::vector<double> ts{5.0, 10.0, 20.0, 40.0};  // asymptote sample points
  bool timestamp = true;
};

inline constexpr std::size_t kMaxGrid = 1000000;
inline constexpr int kExitOk = 0, kExitInvalid = 2, kExitNumerical = 3, kExitInapplicable = 4;

// Outputs accumulated while a command runs, so a failure can still emit what was computed.
struct RunOutput {
  json report = json::object();
  std::vector<std::pair<std::string, std::string>> csv;  // file name, contents
};

namespace detail {

struct ResolvedProblem {
  SystemProblem problem;
  std::optional<Preset> preset;
  std::string source;
};

inline ResolvedProblem resolve_problem(const RunConfig& cfg) {
  if (cfg.problem_path.has_value() == cfg.preset.has_value())
    throw ValidationError("exactly one of --problem and --preset is required");
  if (cfg.preset) {
    auto p = find_preset(*cfg.preset);
    const auto rep = validate(p.problem);
    if (!rep.valid()) throw ValidationError("preset '" + p.name + "' is invalid: " + rep.violations.front());
    auto prob = p.problem;
    return {std::move(prob), std::move(p), "preset:" + *cfg.preset};
  }
  return {load_problem(*cfg.problem_path), std::nullopt, "file:" + *cfg.problem_path};
}

inline std::size_t grid_points(const RunConfig& cfg, const std::optional<Preset>& preset) {
  const std::size_t g = cfg.grid.value_or(preset ? preset->grid : 2001);
  if (g < 9 || g > kMaxGrid) throw ValidationError("--grid must lie in [9, " + std::to_string(kMaxGrid) + "]");
  return g;
}

inline Window resolve_window(const RunConfig& cfg, const std::optional<Preset>& preset, const CharFunction& cf,
                             json& report) {
  if (cfg.window) return *cfg.window;
  if (preset && preset->window) return *preset->window;
  const auto dw = default_window(cf, 10);
  report["window_expansions"] = dw.expansions;
  if (!dw.settled) report["warnings"].push_back("default window did not clear the noise floor");
  return dw.window;
}

// Uniform in |Re| <= re_half, |Im| <= im_half. Phi(x) v loses the decaying component of an eigenfunction to
// cancellation once e^{|b| |Im lambda|} approaches 1/eps, so the strip is kept narrow.
inline std::vector<cplx> random_lambdas(std::size_t count, double re_half, double im_half, unsigned long long seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> re(-re_half, re_half), im(-im_half, im_half);
  std::vector<cplx> out(count);
  for (auto& l : out) {
    const double a = re(g);
    l = {a, im(g)};
  }
  return out;
}

inline std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string csv_string(const std::function<void(std::ostream&)>& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------------------------
// Completeness assessment

struct CompletenessOptions {
  std::size_t grid = 2001;
  SearchOptions search{};
  unsigned long long seed = 20240917ULL;
  std::size_t family_size = 60;  // random lambdas sampled when Delta vanishes identically
  double family_re = 50.0, family_im = 5.0;
  double witness_tol = 1e-7;     // max normalised inner product accepted for a certificate
  bool adjoint = true;
};

struct CompletenessRun {
  CompletenessReport report;
  std::optional<SpectrumReport> spectrum;
  std::optional<RootSystem> roots;
  std::optional<MinimalityReport> minimality;
  std::vector<std::string> adjoint_incompleteness;
  bool degenerate = false;
  std::vector<double> grid;
};

inline std::vector<int> residual_schedule(std::size_t available) {
  std::vector<int> s;
  for (int n : {1, 5, 11, 21, 41, 61, 81, 121, 161, 241, 321})
    if (static_cast<std::size_t>(n) <= available) s.push_back(n);
  if (s.empty() || static_cast<std::size_t>(s.back()) != available) s.push_back(static_cast<int>(available));
  return s;
}

// The incompleteness certificate that applies to p, if any: the T_- step function, then the mirrored bumps.
inline std::optional<WitnessRecord> find_witness(const SystemProblem& p, std::size_t points, double det_tol = 1e-12) {
  if (p.blocks.all_real() && p.potential.is_zero()) {
    try {
      const auto w = witness_T_minus(p, points, det_tol);
      return WitnessRecord{"T-minus step function", w.values, w.norm, 0.0};
    } catch (const ApplicabilityError&) {
    }
  }
  if (p.n() == 2) {
    try {
      const auto dw = witness_dirac_degenerate(p, points);
      return WitnessRecord{"mirrored endpoint bumps", dw.witness.values, dw.witness.norm, 0.0};
    } catch (const ApplicabilityError&) {
    }
  }
  return std::nullopt;
}

// Criteria, root functions (or the solution family when Delta vanishes identically), residuals, adjoint Gram
// matrices and a witness when one applies. `progress` receives partial JSON as stages finish.
inline CompletenessRun assess_completeness(const SystemProblem& p, const Window& window, const CompletenessOptions& opt,
                                           json* progress = nullptr) {
  CompletenessRun run;
  auto& rep = run.report;
  if (p.n() == 2) rep.criteria = criteria_2x2(p);
  if (progress && rep.criteria) (*progress)["criteria"] = to_json(*rep.criteria);

  const CharFunction cf(p);
  run.grid = detail::odd_uniform_grid(opt.grid);
  const auto weights = simpson_weights(run.grid);
  run.degenerate = detect_degenerate(cf).degenerate;
  std::vector<GridFunction> functions;
  if (run.degenerate) {
    functions = solution_family(p, detail::random_lambdas(opt.family_size, opt.family_re, opt.family_im, opt.seed), run.grid);
    rep.warnings.push_back("characteristic determinant vanishes identically; residuals use " +
                           std::to_string(functions.size()) + " eigenfunctions at random eigenvalues");
  } else {
    run.spectrum = find_eigenvalues(cf, window, opt.search);
    if (progress) (*progress)["spectrum"] = to_json(*run.spectrum);
    run.roots = build_chains(p, *run.spectrum, opt.grid);
    if (progress) (*progress)["roots"] = to_json(*run.roots);
    functions = run.roots->functions();
    for (const auto& w : run.roots->warnings) rep.warnings.push_back(w);
  }

  auto witness = find_witness(p, opt.grid);
  auto probes = default_probes(p.n(), run.grid, static_cast<unsigned>(opt.seed));
  if (witness) {
    witness->max_inner = functions.empty() ? 0.0 : max_normalized_inner(functions, witness->values, weights);
    probes.push_back({"witness", witness->values});
  }
  if (!functions.empty()) rep.residuals = completeness_residuals(functions, probes, residual_schedule(functions.size()), weights);
  for (const auto& w : rep.residuals.warnings) rep.warnings.push_back(w);

  if (opt.adjoint && run.spectrum) {
    try {
      const auto adj = adjoint_chains(p, *run.spectrum, opt.grid, AdjointOptions{{}, opt.search, 1e-6});
      run.adjoint_incompleteness = adj.incompleteness;
      for (const auto& s : adj.unpaired) rep.warnings.push_back(s);
      if (!adj.degenerate && adj.paired) {
        run.minimality = minimality_metric(*run.roots, adj.roots);
        rep.grams = run.minimality->clusters;
      }
    } catch (const Error& e) {
      rep.warnings.push_back(std::string("adjoint pipeline: ") + e.what());
    }
  }

  const bool certified = witness && witness->max_inner <= opt.witness_tol;
  if (witness && !certified)
    rep.warnings.push_back("witness orthogonality not confirmed (max normalised inner product " +
                           format_double(witness->max_inner) + ")");
  rep.witness = std::move(witness);
  if (certified) {
    rep.verdict = "certified-incomplete (witness: " + rep.witness->kind + ")";
  } else if (rep.criteria && (rep.criteria->prediction == Prediction::Complete ||
                              rep.criteria->prediction == Prediction::CompleteAdjointIncomplete)) {
    rep.verdict = "predicted-complete (criterion " + rep.criteria->basis + ") + evidence";
    if (rep.criteria->prediction == Prediction::CompleteAdjointIncomplete) rep.verdict += "; adjoint incomplete";
  } else if (!rep.criteria && is_weakly_regular(classify(p.bc, p.blocks).verdict)) {
    rep.verdict = "predicted-complete (criterion weak-regularity) + evidence";
  } else if (rep.criteria && rep.criteria->prediction == Prediction::Incomplete) {
    rep.verdict = "predicted-incomplete (criterion " + rep.criteria->basis + ")";
  } else {
    rep.verdict = "unclassified + evidence";
  }
  return run;
}

// ---------------------------------------------------------------------------------------------------------------
// Commands

namespace detail {

inline json preset_catalog() {
  json list = json::array();
  for (const auto& p : list_presets()) {
    json e = {{"name", p.name}, {"description", p.description}, {"anchor", p.anchor}, {"grid", p.grid}};
    if (p.window) e["window"] = to_json(*p.window);
    list.push_back(std::move(e));
  }
  return list;
}

inline void cmd_preset(const RunConfig& cfg, RunOutput& out) {
  if (cfg.problem_path) throw ValidationError("preset takes --preset <name> or nothing");
  if (!cfg.preset) {
    out.report["presets"] = preset_catalog();
    return;
  }
  const auto p = find_preset(*cfg.preset);
  out.report["preset"] = {{"name", p.name}, {"description", p.description}, {"anchor", p.anchor}, {"grid", p.grid}};
  if (p.window) out.report["preset"]["window"] = to_json(*p.window);
  out.report["problem"] = to_json(p.problem);
}

inline void cmd_classify(const RunConfig& cfg, const ResolvedProblem& rp, RunOutput& out) {
  ClassifyOptions opt;
  if (cfg.tol) opt.det_rel = *cfg.tol;
  const auto& p = rp.problem;
  const auto rep = classify(p.bc, p.blocks, opt);
  out.report["regularity"] = to_json(rep);
  if (p.blocks.all_real()) {
    const auto d = dissipativity(p.bc, p.blocks);
    out.report["dissipativity"] = to_string(d.kind);
    const auto t = selfadjoint_T_pm(p.bc, p.blocks);
    out.report["det_T_plus"] = to_json(t.det_plus);
    out.report["det_T_minus"] = to_json(t.det_minus);
  }
  try {
    const auto s = splitting_check(p.bc, p.blocks);
    out.report["splitting"] = {{"k", s.k}, {"regular_possible", s.regular_possible}};
  } catch (const StructureError&) {
    out.report["splitting"] = nullptr;
  }
  std::ostringstream os;
  os << "z_re,z_im,det_re,det_im,relative,nonzero\n";
  for (const auto& s : rep.sectors)
    os << format_double(s.z.real()) << ',' << format_double(s.z.imag()) << ',' << format_double(s.det.real()) << ','
       << format_double(s.det.imag()) << ',' << format_double(s.relative) << ',' << (s.nonzero ? 1 : 0) << '\n';
  out.csv.emplace_back("sectors.csv", os.str());
}

inline SearchOptions search_options(const RunConfig& cfg) {
  SearchOptions s;
  if (cfg.tol) s.newton_tol = *cfg.tol;
  if (cfg.max_cells) s.max_cells = *cfg.max_cells;
  s.keep_cell_log = false;
  return s;
}

inline SpectrumReport spectrum_stage(const RunConfig& cfg, const ResolvedProblem& rp, const CharFunction& cf,
                                     RunOutput& out) {
  const Window w = resolve_window(cfg, rp.preset, cf, out.report);
  const auto deg = detect_degenerate(cf);
  SpectrumReport s;
  if (deg.degenerate) {
    s.window = w;
    s.degenerate = true;
    s.warnings.push_back("characteristic determinant vanishes identically: every lambda is an eigenvalue");
  } else {
    try {
      s = find_eigenvalues(cf, w, search_options(cfg));
    } catch (const SearchError& e) {
      out.report["spectrum"] = to_json(e.partial());
      out.csv.emplace_back("eigenvalues.csv", csv_string([&](std::ostream& os) { write_eigenvalues_csv(os, e.partial()); }));
      throw;
    }
  }
  out.report["spectrum"] = to_json(s);
  out.csv.emplace_back("eigenvalues.csv", csv_string([&](std::ostream& os) { write_eigenvalues_csv(os, s); }));
  return s;
}

inline void cmd_spectrum(const RunConfig& cfg, const ResolvedProblem& rp, RunOutput& out) {
  const CharFunction cf(rp.problem);
  spectrum_stage(cfg, rp, cf, out);
}

inline void cmd_roots(const RunConfig& cfg, const ResolvedProblem& rp, RunOutput& out) {
  const CharFunction cf(rp.problem);
  const auto s = spectrum_stage(cfg, rp, cf, out);
  if (s.degenerate) throw ApplicabilityError("roots: the characteristic determinant vanishes identically");
  const auto roots = build_chains(rp.problem, s, grid_points(cfg, rp.preset));
  auto j = to_json(roots);
  for (std::size_t k = 0; k < roots.chains.size(); ++k)
    j["chains"][k]["ode_residuals"] = chain_ode_residuals(rp.problem, roots.chains[k], roots.grid);
  out.report["roots"] = std::move(j);
}

inline void cmd_complete(const RunConfig& cfg, const ResolvedProblem& rp, RunOutput& out) {
  const CharFunction cf(rp.problem);
  CompletenessOptions opt;
  opt.grid = grid_points(cfg, rp.preset);
  opt.search = search_options(cfg);
  opt.seed = cfg.seed;
  const Window w = resolve_window(cfg, rp.preset, cf, out.report);
  json progress = json::object();
  try {
    const auto run = assess_completeness(rp.problem, w, opt, &progress);
    out.report.update(progress);
    out.report["completeness"] = to_json(run.report);
    if (!run.adjoint_incompleteness.empty()) out.report["adjoint_incompleteness"] = run.adjoint_incompleteness;
    if (run.minimality)
      out.report["minimality"] = {{"minimal", run.minimality->minimal}, {"max_cross", run.minimality->max_cross},
                                  {"tolerance", run.minimality->tolerance}};
    if (run.spectrum)
      out.csv.emplace_back("eigenvalues.csv",
                           csv_string([&](std::ostream& os) { write_eigenvalues_csv(os, *run.spectrum); }));
    out.csv.emplace_back("residuals.csv",
                         csv_string([&](std::ostream& os) { write_residuals_csv(os, run.report.residuals); }));
    if (run.report.witness)
      out.csv.emplace_back("witness.csv", csv_string([&](std::ostream& os) {
                             write_grid_function_csv(os, run.grid, run.report.witness->values);
                           }));
  } catch (...) {
    out.report.update(progress);
    throw;
  }
}

inline void cmd_witness(const RunConfig& cfg, const ResolvedProblem& rp, RunOutput& out) {
  const auto& p = rp.problem;
  const std::size_t points = grid_points(cfg, rp.preset);
  const double det_tol = cfg.tol.value_or(1e-12);
  std::optional<Witness> w;
  std::string kind;
  std::vector<std::string> reasons;
  if (p.blocks.all_real() && p.potential.is_zero()) {
    try {
      w = witness_T_minus(p, points, det_tol);
      kind = "T-minus step function";
    } catch (const ApplicabilityError& e) {
      reasons.push_back(e.what());
    }
  } else {
    reasons.push_back("T-minus step function: needs real weights and a zero potential");
  }
  if (!w && p.n() == 2) {
    try {
      const auto dw = witness_dirac_degenerate(p, points);
      w = dw.witness;
      kind = "mirrored endpoint bumps";
      out.report["self_consistency"] = dw.self_consistency;
      out.report["epsilon"] = dw.epsilon;
    } catch (const ApplicabilityError& e) {
      reasons.push_back(e.what());
    }
  }
  if (!w) {
    std::string all;
    for (const auto& r : reasons) all += (all.empty() ? "" : "; ") + r;
    throw ApplicabilityError("no incompleteness witness applies: " + all);
  }
  out.report["witness"] = to_json(*w);
  out.report["witness"]["kind"] = kind;
  out.csv.emplace_back("witness.csv", csv_string([&](std::ostream& os) { write_grid_function_csv(os, w->grid, w->values); }));

  // Orthogonality against root functions, or against eigenfunctions at random lambda when Delta vanishes.
  const CharFunction cf(p);
  const auto weights = simpson_weights(w->grid);
  std::vector<GridFunction> fns;
  if (detect_degenerate(cf).degenerate) {
    fns = solution_family(p, random_lambdas(60, 50.0, 5.0, cfg.seed), w->grid);
    out.report["checked_against"] = "eigenfunctions at 60 random lambda";
  } else {
    const auto s = spectrum_stage(cfg, rp, cf, out);
    fns = build_chains(p, s, points).functions();
    out.report["checked_against"] = "root functions in the window";
  }
  out.report["functions_checked"] = fns.size();
  out.report["max_normalized_inner"] = fns.empty() ? 0.0 : max_normalized_inner(fns, w->values, weights);
}

inline void cmd_asymptote(const RunConfig& cfg, const ResolvedProblem& rp, RunOutput& out) {
  if (cfg.ts.empty()) throw ValidationError("asymptote needs at least one sample point");
  const auto rep = check_asymptotics(rp.problem, cfg.z, cfg.ts);
  out.report["asymptotics"] = to_json(rep);
  std::ostringstream os;
  os << "t,diagonal_deviation,offdiagonal_deviation,det_re,det_im\n";
  for (const auto& s : rep.samples) {
    os << format_double(s.t) << ',' << format_double(s.diagonal_deviation) << ','
       << format_double(s.offdiagonal_deviation) << ',';
    if (s.normalized_determinant)
      os << format_double(s.normalized_determinant->real()) << ',' << format_double(s.normalized_determinant->imag());
    else
      os << ',';
    os << '\n';
  }
  out.csv.emplace_back("asymptotics.csv", os.str());
}

inline void write_outputs(const RunConfig& cfg, const RunOutput& out, std::ostream& os) {
  if (cfg.out_dir) {
    std::filesystem::create_directories(*cfg.out_dir);
    std::ofstream(std::filesystem::path(*cfg.out_dir) / "report.json") << out.report.dump(2) << '\n';
    for (const auto& [name, text] : out.csv) std::ofstream(std::filesystem::path(*cfg.out_dir) / name) << text;
  }
  if (cfg.format == OutputFormat::Csv && !out.csv.empty())
    os << out.csv.front().second;
  else
    os << out.report.dump(2) << '\n';
}

}  // namespace detail

inline int run(const RunConfig& cfg, std::ostream& os, std::ostream& err) {
  RunOutput out;
  out.report["command"] = to_string(cfg.command);
  out.report["warnings"] = json::array();
  if (cfg.timestamp) out.report["generated_at"] = detail::timestamp_utc();
  int code = kExitOk;
  auto fail = [&](int c, const char* kind, const std::exception& e) {
    code = c;
    out.report["status"] = "error";
    out.report["error"] = {{"kind", kind}, {"message", e.what()}};
    err << "birk " << to_string(cfg.command) << ": " << e.what() << '\n';
  };
  try {
    if (cfg.command == Command::Preset) {
      detail::cmd_preset(cfg, out);
    } else {
      const auto rp = detail::resolve_problem(cfg);
      out.report["source"] = rp.source;
      if (rp.preset) out.report["anchor"] = rp.preset->anchor;
      out.report["seed"] = cfg.seed;
      if (cfg.window) out.report["window_override"] = to_json(*cfg.window);
      switch (cfg.command) {
        case Command::Classify: detail::cmd_classify(cfg, rp, out); break;
        case Command::Spectrum: detail::cmd_spectrum(cfg, rp, out); break;
        case Command::Roots: detail::cmd_roots(cfg, rp, out); break;
        case Command::Complete: detail::cmd_complete(cfg, rp, out); break;
        case Command::Witness: detail::cmd_witness(cfg, rp, out); break;
        case Command::Asymptote: detail::cmd_asymptote(cfg, rp, out); break;
        case Command::Preset: break;
      }
    }
    out.report["status"] = "ok";
  } catch (const ValidationError& e) {
    fail(kExitInvalid, "validation", e);
    if (!e.pointer().empty()) out.report["error"]["pointer"] = e.pointer();
  } catch (const DimensionError& e) {
    fail(kExitInvalid, "dimension", e);
  } catch (const DomainError& e) {
    fail(kExitInvalid, "domain", e);
  } catch (const ApplicabilityError& e) {
    fail(kExitInapplicable, "applicability", e);
  } catch (const AdmissibilityError& e) {
    fail(kExitInapplicable, "admissibility", e);
  } catch (const Error& e) {
    fail(kExitNumerical, "numerical", e);
  } catch (const std::exception& e) {
    fail(kExitNumerical, "internal", e);
  }
  try {
    detail::write_outputs(cfg, out, os);
  } catch (const std::exception& e) {
    err << "birk: cannot write outputs: " << e.what() << '\n';
    if (code == kExitOk) code = kExitNumerical;
  }
  return code;
}

}  // namespace birk
