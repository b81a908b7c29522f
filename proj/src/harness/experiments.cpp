#include "gtgda/harness/experiments.hpp"

#include "gtgda/harness/output.hpp"

#include <cmath>

namespace gtgda::harness {

using ojson = nlohmann::ordered_json;

bool ExperimentResult::all_diverged() const {
  if (solvers.empty()) return false;
  for (const auto& s : solvers)
    if (!s.trace.diverged) return false;
  return true;
}

SolverResult plan_solver(const SolverSpec& spec, const SaddleProblem<double>& p, const WeightMatrix<double>& W) {
  SolverResult r;
  r.label = solver_label(spec);
  r.variant = spec.variant;

  std::optional<ProblemConstants<double>> c;
  try {
    c = aggregate_constants(p);
  } catch (const AssumptionViolation&) {
    if (spec.stepsize == StepsizeMode::theorem1) throw;
  }
  if (spec.stepsize == StepsizeMode::theorem1) {
    const auto st = theorem1_stepsizes(*c, W.lambda, spec.safety);
    r.alpha = st.alpha;
    r.beta = st.beta;
  } else {
    r.alpha = spec.alpha;
    r.beta = spec.beta;
  }
  if (c && c->sigma_m > 0) {
    try {
      r.eta = predicted_eta(*c, r.alpha, r.beta);
      const double cc = certified_c(*c);
      const auto M = build_M(*c, W.lambda, r.alpha, r.beta, cc);
      r.certified = verify_lemma2(M, build_delta(*c, W.lambda, cc), *r.eta).holds;
    } catch (const InvalidParameter&) {
      r.certified = false;
    }
  }
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const auto p = build_problem(cfg.problem);
  const auto W = build_network(cfg.topology);
  ExperimentResult res;
  res.config_hash = hash_hex(config_hash(cfg));

  for (const auto& spec : cfg.solvers) {
    SolverResult r = plan_solver(spec, p, W);
    SolverConfig sc;
    sc.variant = spec.variant;
    sc.alpha = r.alpha;
    sc.beta = r.beta;
    sc.max_iters = spec.max_iters;
    sc.stop_gap = spec.stop_gap;
    sc.seed = spec.seed;
    sc.record_every = cfg.output.record_every;
    try {
      run_into(r.trace, p, W, sc);
    } catch (const Divergence& d) {
      r.error = d.what();
    }
    res.solvers.push_back(std::move(r));
  }

  if (out_dir.empty()) return res;

  const std::filesystem::path csv(cfg.output.csv);
  const std::string stem = csv.stem().string();
  const std::string ext = csv.has_extension() ? csv.extension().string() : ".csv";
  std::vector<Series> series;
  ojson meta;
  meta["name"] = cfg.name;
  meta["config_hash"] = res.config_hash;
  meta["config"] = config_to_json(cfg);
  meta["lambda"] = W.lambda;
  meta["solvers"] = ojson::array();
  for (const auto& r : res.solvers) {
    const auto path = out_dir / csv.parent_path() / (stem + "_" + r.label + ext);
    write_text(path, trace_csv(r.trace));
    res.files.push_back(path);
    series.push_back(gap_series(r.label, r.trace));
    ojson s;
    s["label"] = r.label;
    s["variant"] = to_string(r.variant);
    s["alpha"] = r.alpha;
    s["beta"] = r.beta;
    s["eta"] = r.eta ? ojson(*r.eta) : ojson(nullptr);
    s["certified"] = r.certified;
    s["diverged"] = r.trace.diverged;
    s["reached_stop_gap"] = r.trace.reached_stop_gap;
    s["final_gap"] = r.trace.final_gap();
    s["best_gap"] = r.trace.best_gap();
    s["csv"] = path.filename().string();
    if (!r.error.empty()) s["error"] = r.error;
    meta["solvers"].push_back(std::move(s));
  }
  if (!cfg.output.svg.empty()) {
    const auto path = out_dir / cfg.output.svg;
    PlotOptions po;
    po.title = cfg.name + " (" + to_string(cfg.topology.kind) + ", n=" + std::to_string(cfg.topology.n) + ")";
    write_text(path, render_svg(series, po));
    res.files.push_back(path);
  }
  const auto meta_path = out_dir / csv.parent_path() / (stem + "_meta.json");
  write_text(meta_path, meta.dump(2) + "\n");
  res.files.push_back(meta_path);
  return res;
}

namespace {

ojson complex_list(const std::vector<std::complex<double>>& zs) {
  auto a = ojson::array();
  for (const auto& z : zs) a.push_back({z.real(), z.imag()});
  return a;
}

}  // namespace

ojson analyze(const ExperimentConfig& cfg) {
  const auto p = build_problem(cfg.problem);
  const auto W = build_network(cfg.topology);
  const auto c = aggregate_constants(p);
  if (!(c.sigma_m > 0)) throw AssumptionViolation(3, "sigma_m = 0, P_bar lacks full column rank");

  double safety = 1;
  for (const auto& s : cfg.solvers)
    if (s.stepsize == StepsizeMode::theorem1) {
      safety = s.safety;
      break;
    }
  const auto st = theorem1_stepsizes(c, W.lambda, safety);
  const auto M = build_M(c, W.lambda, st.alpha, st.beta, st.c);
  const auto delta = build_delta(c, W.lambda, st.c);
  const double eta = predicted_eta(c, st.alpha, st.beta);
  const auto cert = verify_lemma2(M, delta, eta);
  const double rho = spectral_radius(M);

  ojson j;
  j["name"] = cfg.name;
  j["config_hash"] = hash_hex(config_hash(cfg));
  j["problem"] = {{"kind", to_string(p.kind)}, {"px", p.px}, {"py", p.py}, {"n", p.n()}};
  j["topology"] = {{"kind", to_string(cfg.topology.kind)}, {"n", cfg.topology.n}, {"lambda", W.lambda}};
  j["constants"] = {{"L1", c.L1},           {"L2", c.L2},          {"L", c.L},
                    {"mu", c.mu},           {"sigma_M", c.sigma_M}, {"sigma_m", c.sigma_m},
                    {"kappa", c.kappa},     {"gamma", c.gamma},    {"tau", c.tau},
                    {"tau_mean", c.tau_mean}};
  j["stepsizes"] = {{"alpha", st.alpha}, {"beta", st.beta}, {"c", st.c}, {"safety", safety}};
  j["eta"] = eta;
  j["M"] = matrix_json(M);
  j["delta"] = vector_json(delta);
  j["slack"] = vector_json(cert.slack);
  j["rho_M"] = rho;
  j["certified"] = cert.holds;
  j["rho_le_eta"] = rho <= eta;
  j["regime_check"] = regime_check(c, W.lambda);

  j["solvers"] = ojson::array();
  for (const auto& s : cfg.solvers) {
    const auto r = plan_solver(s, p, W);
    j["solvers"].push_back({{"label", r.label},
                            {"alpha", r.alpha},
                            {"beta", r.beta},
                            {"eta", r.eta ? ojson(*r.eta) : ojson(nullptr)},
                            {"certified", r.certified}});
  }

  if (p.quadratic()) {
    const auto lti = build_quad_lti(p, W, st.alpha, st.beta);
    j["rho_Mtilde"] = spectral_radius(lti.Mtilde);
    const auto S = build_S(p);
    j["S_eigenvalues"] = complex_list(S.eigenvalues);
    j["S_stable"] = S.stable;
    const auto rep = eigen_perturbation_check<double>(p, W, {1e-2, 1e-3, 1e-4});
    auto table = ojson::array();
    for (const auto& pt : rep.points)
      table.push_back({{"alpha", pt.alpha},
                       {"ratio", pt.ratio},
                       {"rho_Mtilde", pt.spectral_radius},
                       {"ambiguous", pt.ambiguous}});
    j["perturbation"] = {{"points", table}, {"ratios_decreasing", rep.ratios_decreasing}};
  }
  return j;
}

SpeedupResult speedup_experiment(const ExperimentConfig& family, const std::vector<Index>& n_list,
                                 double target_gap) {
  if (n_list.empty()) throw InvalidParameter("n list is empty");
  if (!(target_gap > 0)) throw InvalidParameter("target gap must be positive");
  if (family.solvers.empty()) throw InvalidParameter("family config needs a solver spec");
  const SolverSpec& base = family.solvers.front();

  SpeedupResult out;
  for (Index n : n_list) {
    ExperimentConfig cfg = family;
    cfg.problem.n = n;
    cfg.topology.n = n;
    const auto p = build_problem(cfg.problem);
    const auto W = build_network(cfg.topology);
    const auto plan = plan_solver(base, p, W);

    auto iterations = [&](Variant v, bool& censored) {
      SolverConfig sc;
      sc.variant = v;
      sc.alpha = plan.alpha;
      sc.beta = plan.beta;
      sc.max_iters = base.max_iters;
      sc.stop_gap = target_gap;
      sc.seed = base.seed;
      sc.record_every = base.max_iters + 1;  // only the endpoints are needed
      Trace<double> t;
      try {
        run_into(t, p, W, sc);
      } catch (const Divergence&) {
      }
      censored = !t.reached_stop_gap;
      return t.rows.back().iteration;
    };
    SpeedupRow row;
    row.n = n;
    bool c1 = false, c2 = false;
    row.iters_centralized = iterations(Variant::centralized, c1);
    row.iters_gt = iterations(Variant::gt_gda, c2);
    row.censored = c1 || c2;
    row.ratio = row.iters_gt == 0 ? std::numeric_limits<double>::quiet_NaN()
                                  : double(n) * double(row.iters_centralized) / double(row.iters_gt);
    out.rows.push_back(row);
  }

  out.nondecreasing = out.increasing = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    if (!(out.rows[i].ratio >= out.rows[i - 1].ratio)) out.nondecreasing = false;
    if (!(out.rows[i].ratio > out.rows[i - 1].ratio)) out.increasing = false;
  }
  for (const auto& r : out.rows)
    if (r.censored) out.nondecreasing = out.increasing = false;

  // Least-squares line through (n, ratio).
  const double m = double(out.rows.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& r : out.rows) {
    const double x = double(r.n), y = r.ratio;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double vx = sxx - sx * sx / m, vy = syy - sy * sy / m, cxy = sxy - sx * sy / m;
  if (vx > 0) {
    out.slope = cxy / vx;
    out.intercept = (sy - out.slope * sx) / m;
    out.r_squared = vy > 0 ? cxy * cxy / (vx * vy) : 1.0;
  } else {
    out.r_squared = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::string speedup_csv(const SpeedupResult& r) {
  std::string s = "n,iters_centralized,iters_gt,ratio,censored\r\n";
  for (const auto& row : r.rows)
    s += std::to_string(row.n) + "," + std::to_string(row.iters_centralized) + "," + std::to_string(row.iters_gt) +
         "," + format_number(row.ratio) + "," + (row.censored ? "1" : "0") + "\r\n";
  return s;
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& param, const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidParameter("sweep grid is empty");
  std::vector<SweepRow> rows;
  for (double v : grid) {
    ExperimentConfig c = cfg;
    for (auto& s : c.solvers) {
      if (param == "alpha" || param == "beta" || param == "stepsize") {
        if (!(v > 0)) throw InvalidParameter("stepsize values must be positive");
        if (s.stepsize == StepsizeMode::theorem1) {
          s.stepsize = StepsizeMode::manual;
          s.alpha = s.beta = v;
        }
        if (param != "beta") s.alpha = v;
        if (param != "alpha") s.beta = v;
      } else if (param == "safety") {
        if (!(v > 0 && v <= 1)) throw InvalidParameter("safety must lie in (0, 1]");
        s.safety = v;
      } else if (param != "heterogeneity" && param != "seed") {
        throw InvalidParameter("unknown sweep parameter '" + param + "'");
      }
    }
    if (param == "heterogeneity") {
      if (!(v >= 0)) throw InvalidParameter("heterogeneity must be >= 0");
      c.problem.heterogeneity = v;
    }
    if (param == "seed") {
      if (!(v >= 0) || v != std::floor(v)) throw InvalidParameter("seed values must be non-negative integers");
      c.problem.seed = static_cast<std::uint64_t>(v);
    }
    const auto res = run_experiment(c, {});
    for (const auto& r : res.solvers) {
      SweepRow row;
      row.value = v;
      row.label = r.label;
      row.final_gap = r.trace.final_gap();
      row.best_gap = r.trace.best_gap();
      row.iterations = r.trace.rows.back().iteration;
      row.reached = r.trace.reached_stop_gap;
      row.diverged = r.trace.diverged;
      rows.push_back(row);
    }
  }
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "value,label,final_gap,best_gap,iterations,reached,diverged\r\n";
  for (const auto& r : rows)
    s += format_number(r.value) + "," + csv_field(r.label) + "," + format_number(r.final_gap) + "," +
         format_number(r.best_gap) + "," + std::to_string(r.iterations) + "," + (r.reached ? "1" : "0") + "," +
         (r.diverged ? "1" : "0") + "\r\n";
  return s;
}

}  // namespace gtgda::harness
