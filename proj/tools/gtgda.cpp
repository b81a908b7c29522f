// gtgda: run experiments, certificate analysis, speedup and sweeps from JSON configs.

#include "gtgda/harness/config.hpp"
#include "gtgda/harness/experiments.hpp"
#include "gtgda/harness/output.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace fs = std::filesystem;
using namespace gtgda;
using namespace gtgda::harness;

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, all_diverged = 3, assumption = 4 };

// GTGDA_OUTPUT_DIR wins over --out, which wins over ./gtgda-out/<name>.
fs::path output_dir(const std::string& flag, const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("GTGDA_OUTPUT_DIR"); env && *env) return fs::path(env);
  if (!flag.empty()) return fs::path(flag);
  return fs::path("gtgda-out") / cfg.name;
}

int cmd_run(const std::string& path, const std::string& out) {
  const auto cfg = load_config(path);
  const auto dir = output_dir(out, cfg);
  const auto res = run_experiment(cfg, dir);
  std::cout << "config " << res.config_hash << "\n";
  for (const auto& s : res.solvers) {
    std::cout << s.label << ": alpha=" << format_number(s.alpha) << " beta=" << format_number(s.beta)
              << " final_gap=" << format_number(s.trace.final_gap())
              << " iterations=" << s.trace.rows.back().iteration;
    if (s.eta) std::cout << " eta=" << format_number(*s.eta) << " certified=" << (s.certified ? "yes" : "no");
    if (s.trace.diverged) std::cout << " DIVERGED at " << s.trace.diverged_at;
    std::cout << "\n";
  }
  for (const auto& f : res.files) std::cout << "wrote " << f.string() << "\n";
  return res.all_diverged() ? all_diverged : ok;
}

int cmd_analyze(const std::string& path, const std::string& out) {
  const auto cfg = load_config(path);
  const auto report = analyze(cfg);
  const std::string text = report.dump(2) + "\n";
  std::cout << text;
  const auto file = output_dir(out, cfg) / (cfg.name + "_analysis.json");
  write_text(file, text);
  std::cerr << "wrote " << file.string() << "\n";
  return ok;
}

int cmd_problem(const std::string& path, const std::string& out) {
  const auto cfg = load_config(path);
  const auto file = output_dir(out, cfg) / (cfg.name + "_problem.json");
  write_text(file, problem_json(build_problem(cfg.problem)).dump(2) + "\n");
  std::cout << "wrote " << file.string() << "\n";
  return ok;
}

int cmd_speedup(const std::string& path, const std::vector<Index>& ns, double target, const std::string& out) {
  const auto cfg = load_config(path);
  const auto r = speedup_experiment(cfg, ns, target);
  const auto dir = output_dir(out, cfg);
  write_text(dir / "speedup.csv", speedup_csv(r));
  Series s;
  s.label = "n * iters(centralized) / iters(gt-gda)";
  for (const auto& row : r.rows) {
    s.x.push_back(double(row.n));
    s.y.push_back(row.ratio);
  }
  PlotOptions po;
  po.title = "speedup to gap " + format_number(target);
  po.x_label = "nodes";
  po.y_label = "iteration ratio";
  po.log_y = false;
  write_text(dir / "speedup.svg", render_svg({s}, po));

  std::cout << speedup_csv(r);
  std::cout << "increasing=" << (r.increasing ? "yes" : "no") << " slope=" << format_number(r.slope)
            << " r_squared=" << format_number(r.r_squared) << "\n";
  std::cout << "wrote " << (dir / "speedup.csv").string() << " and speedup.svg\n";
  return ok;
}

int cmd_sweep(const std::string& path, const std::string& param, const std::vector<double>& grid,
              const std::string& out) {
  const auto cfg = load_config(path);
  const auto rows = sweep(cfg, param, grid);
  const auto file = output_dir(out, cfg) / ("sweep_" + param + ".csv");
  const std::string text = sweep_csv(rows);
  write_text(file, text);
  std::cout << text << "wrote " << file.string() << "\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized saddle-point solvers over simulated networks"};
  app.require_subcommand(1);
  std::string config, out, param;
  std::vector<Index> ns{8, 16, 32};
  std::vector<double> grid;
  double target = 1e-12;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (GTGDA_OUTPUT_DIR overrides)");
  };
  auto* run = app.add_subcommand("run", "run every solver in the config, write CSV/SVG traces");
  add_common(run);
  auto* an = app.add_subcommand("analyze", "certificate and spectral report as JSON");
  add_common(an);
  auto* pr = app.add_subcommand("problem", "write the generated problem instance as JSON");
  add_common(pr);
  auto* sp = app.add_subcommand("speedup", "iteration ratio against centralized GDA over n");
  add_common(sp);
  sp->add_option("--n", ns, "node counts")->delimiter(',');
  sp->add_option("--target", target, "optimality gap to reach");
  auto* sw = app.add_subcommand("sweep", "re-run the config over a parameter grid");
  add_common(sw);
  sw->add_option("--param", param, "alpha | beta | stepsize | safety | heterogeneity | seed")->required();
  sw->add_option("--grid", grid, "comma separated values")->delimiter(',')->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    if (*run) return cmd_run(config, out);
    if (*an) return cmd_analyze(config, out);
    if (*pr) return cmd_problem(config, out);
    if (*sp) return cmd_speedup(config, ns, target, out);
    if (*sw) return cmd_sweep(config, param, grid, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const AssumptionViolation& e) {
    std::cerr << e.what() << "\n";
    return assumption;
  } catch (const InvalidParameter& e) {
    std::cerr << "invalid parameter: " << e.what() << "\n";
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return failure;
  }
  return failure;
}
