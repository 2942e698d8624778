#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "birk/cli.hpp"

namespace {

std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size()) throw std::invalid_argument(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Completeness diagnostics for first-order systems -i B y' + Q y = lambda y with two-point conditions"};
  app.require_subcommand(1);

  birk::RunConfig cfg;
  std::string problem, preset, window, out_dir, z, ts;
  std::size_t grid = 0, max_cells = 0;
  double tol = 0.0;
  bool as_json = false, as_csv = false, no_timestamp = false;

  const std::pair<const char*, birk::Command> commands[] = {
      {"classify", birk::Command::Classify},   {"spectrum", birk::Command::Spectrum},
      {"roots", birk::Command::Roots},         {"complete", birk::Command::Complete},
      {"witness", birk::Command::Witness},     {"asymptote", birk::Command::Asymptote},
      {"preset", birk::Command::Preset}};
  const char* help[] = {"regularity verdict and sector table",
                        "eigenvalues in a window",
                        "root chains of every eigenvalue in the window",
                        "completeness evidence: criteria, residuals, Gram matrices, witness",
                        "incompleteness witness and its orthogonality check",
                        "Birkhoff asymptotics along lambda = i z t",
                        "list presets, or print one preset as problem JSON"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, help[i]);
    auto* p = sub->add_option("--problem", problem, "problem JSON file");
    auto* q = sub->add_option("--preset", preset, "preset name");
    p->excludes(q);
    sub->add_option("--window", window, "search window re_lo,re_hi,im_lo,im_hi");
    sub->add_option("--grid", grid, "grid points")->check(CLI::Range(std::size_t{9}, birk::kMaxGrid));
    sub->add_option("--tol", tol, "main tolerance of the command")->check(CLI::PositiveNumber);
    sub->add_option("--max-cells", max_cells, "contour subdivision budget")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "directory for report.json and CSV tables");
    sub->add_option("--seed", cfg.seed, "seed for probes and random eigenvalue samples");
    auto* j = sub->add_flag("--json", as_json, "print the JSON report (default)");
    auto* c = sub->add_flag("--csv", as_csv, "print the main CSV table instead");
    j->excludes(c);
    sub->add_flag("--no-timestamp", no_timestamp, "omit the generated_at field");
    if (commands[i].second == birk::Command::Asymptote) {
      sub->add_option("--z", z, "ray direction re,im (default 1,0)");
      sub->add_option("--t", ts, "comma-separated sample points t");
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : birk::kExitInvalid;
  }

  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) cfg.command = commands[i].second;
  auto* sub = subs[static_cast<std::size_t>(std::find_if(std::begin(commands), std::end(commands),
                                                         [&](const auto& c) { return c.second == cfg.command; }) -
                                            std::begin(commands))];
  if (!problem.empty()) cfg.problem_path = problem;
  if (!preset.empty()) cfg.preset = preset;
  if (sub->count("--grid")) cfg.grid = grid;
  if (sub->count("--tol")) cfg.tol = tol;
  if (sub->count("--max-cells")) cfg.max_cells = max_cells;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (as_csv) cfg.format = birk::OutputFormat::Csv;
  cfg.timestamp = !no_timestamp;
  try {
    if (!window.empty()) {
      const auto w = split_numbers(window);
      if (w.size() != 4 || !(w[1] > w[0]) || !(w[3] > w[2])) throw std::invalid_argument(window);
      cfg.window = birk::Window{w[0], w[1], w[2], w[3]};
    }
    if (!z.empty()) {
      const auto v = split_numbers(z);
      if (v.size() != 2) throw std::invalid_argument(z);
      cfg.z = {v[0], v[1]};
    }
    if (!ts.empty()) cfg.ts = split_numbers(ts);
  } catch (const std::exception&) {
    std::cerr << "birk: malformed numeric list (window expects re_lo,re_hi,im_lo,im_hi with lo < hi)\n";
    return birk::kExitInvalid;
  }
  return birk::run(cfg, std::cout, std::cerr);
}
