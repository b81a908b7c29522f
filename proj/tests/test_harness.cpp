#include "gtgda/harness/config.hpp"
#include "gtgda/harness/experiments.hpp"
#include "gtgda/harness/output.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <locale>
#include <sstream>
#include <sys/wait.h>

using namespace gtgda;
using namespace gtgda::harness;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "problem": { "kind": "quadratic", "n": 4, "seed": 7 },
  "topology": { "kind": "exponential" },
  "solvers": [ { "variant": "gt-gda" } ]
})";

fs::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = fs::temp_directory_path() / "gtgda_tests" / (std::string(info->test_suite_name()) + "_" + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

ExperimentConfig manual_config(CostKind kind, Index n, double a, std::size_t iters) {
  ExperimentConfig cfg = parse_config(kMinimal);
  cfg.problem.kind = kind;
  cfg.problem.n = cfg.topology.n = n;
  if (kind != CostKind::quadratic) {
    cfg.problem.px = 10;
    cfg.problem.py = 4;
    cfg.problem.seed = 1;
  }
  cfg.solvers.clear();
  for (Variant v : {Variant::d_gda, Variant::gt_gda}) {
    SolverSpec s;
    s.variant = v;
    s.stepsize = StepsizeMode::manual;
    s.alpha = s.beta = a;
    s.max_iters = iters;
    cfg.solvers.push_back(s);
  }
  return cfg;
}

int run_cli(const std::string& args, const std::string& env = {}) {
  const std::string cmd = env + (env.empty() ? "" : " ") + GTGDA_CLI + std::string(" ") + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

// --------------------------------------------------------------- config

TEST(Config, MinimalAppliesDefaults) {
  auto cfg = parse_config(kMinimal);
  EXPECT_EQ(cfg.output.record_every, 1u);
  ASSERT_EQ(cfg.solvers.size(), 1u);
  EXPECT_EQ(cfg.solvers[0].safety, 1.0);
  EXPECT_EQ(cfg.solvers[0].stepsize, StepsizeMode::theorem1);
  EXPECT_EQ(cfg.topology.n, 4);
  EXPECT_EQ(cfg.problem.px, 3);
  EXPECT_EQ(solver_label(cfg.solvers[0]), "gt-gda");
}

TEST(Config, RegressionDimsDefault) {
  auto cfg = parse_config(R"({"problem":{"kind":"regression-strong"},"topology":{"kind":"ring"},
                              "solvers":[{"variant":"d-gda","stepsize":"manual","alpha":0.1,"beta":0.1}]})");
  EXPECT_EQ(cfg.problem.px, 10);
  EXPECT_EQ(cfg.problem.py, 4);
  EXPECT_EQ(cfg.topology.n, 8);
}

TEST(Config, TopologySizeMismatch) {
  auto msg = config_error_message(R"({"problem":{"kind":"quadratic","n":4},"topology":{"kind":"ring","n":5},
                                       "solvers":[{"variant":"gt-gda"}]})");
  EXPECT_NE(msg.find("topology.n"), std::string::npos) << msg;
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_NE(config_error_message(R"({"problem":{"kind":"quadratic","dim":3},"topology":{"kind":"ring"},
                                      "solvers":[{"variant":"gt-gda"}]})")
                .find("problem.dim"),
            std::string::npos);
  EXPECT_NE(config_error_message(R"({"problem":{"kind":"quadratic"},"topology":{"kind":"ring"},
                                      "solvers":[{"variant":"gt-gda","alpah":1}]})")
                .find("solvers[0].alpah"),
            std::string::npos);
  EXPECT_NE(config_error_message(R"({"extra":1,"problem":{"kind":"quadratic"},"topology":{"kind":"ring"},
                                      "solvers":[{"variant":"gt-gda"}]})")
                .find("extra"),
            std::string::npos);
}

TEST(Config, SyntaxErrorHasLineAndColumn) {
  auto msg = config_error_message("{\n  \"problem\": {\"kind\": \"quadratic\"},\n  \"topology\": ]\n}");
  EXPECT_NE(msg.find("line 3, column 15"), std::string::npos) << msg;
}

TEST(Config, SemanticErrors) {
  auto base = [](const std::string& solver) {
    return R"({"problem":{"kind":"quadratic"},"topology":{"kind":"ring"},"solvers":[)" + solver + "]}";
  };
  EXPECT_NE(config_error_message(base(R"({"variant":"gt-gda","stepsize":"manual","alpha":0.1})")).find("alpha and beta"),
            std::string::npos);
  EXPECT_NE(config_error_message(base(R"({"variant":"gt-gda","stop_gap":-1})")).find("stop_gap"), std::string::npos);
  EXPECT_NE(config_error_message(base(R"({"variant":"gt-gda","safety":1.5})")).find("safety"), std::string::npos);
  EXPECT_NE(config_error_message(base(R"({"variant":"sgd"})")).find("variant"), std::string::npos);
  EXPECT_NE(config_error_message(base(R"({"variant":"gt-gda","max_iters":-3})")).find("max_iters"),
            std::string::npos);
  EXPECT_NE(config_error_message(base(R"({"variant":"gt-gda"},{"variant":"gt-gda"})")).find("duplicate"),
            std::string::npos);
  EXPECT_NE(config_error_message(base("")).find("solvers"), std::string::npos);
  EXPECT_NE(config_error_message(R"({"problem":{"kind":"quadratic"},"topology":{"kind":"torus"},
                                      "solvers":[{"variant":"gt-gda"}]})")
                .find("topology.kind"),
            std::string::npos);
}

TEST(Config, RoundTripKeepsHash) {
  auto cfg = parse_config(kMinimal);
  cfg.solvers.push_back(SolverSpec{Variant::d_gda, StepsizeMode::manual, 0.1, 0.2, 1, 50, 1e-9, 3, "base"});
  const auto again = parse_config(emit_config(cfg));
  EXPECT_EQ(config_hash(again), config_hash(cfg));
  EXPECT_EQ(emit_config(again), emit_config(cfg));
  cfg.solvers[1].alpha = 0.11;
  EXPECT_NE(config_hash(again), config_hash(cfg));
  EXPECT_EQ(hash_hex(0x1f).size(), 16u);
}

TEST(Config, LoadMissingFile) {
  EXPECT_THROW(load_config("/nonexistent/x.json"), ConfigError);
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& e : fs::directory_iterator(fs::path(GTGDA_SOURCE_DIR) / "configs"))
    if (e.path().extension() == ".json") {
      EXPECT_NO_THROW(load_config(e.path())) << e.path();
    }
}

// --------------------------------------------------------------- output

TEST(Output, NumbersIgnoreLocale) {
  struct Comma : std::numpunct<char> {
    char do_decimal_point() const override { return ','; }
    char do_thousands_sep() const override { return '.'; }
    std::string do_grouping() const override { return "\3"; }
  };
  const std::locale old = std::locale::global(std::locale(std::locale::classic(), new Comma));
  EXPECT_EQ(format_number(1234567.5), "1234567.5");
  EXPECT_EQ(format_number(1e-300), "1e-300");
  std::locale::global(old);
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(Output, CsvHeaderAndRoundTrip) {
  auto p = make_quadratic<double>(3, 3, 4, 1.0, 7);
  auto W = make_weights(build_topology(TopologyKind::exponential, 4));
  auto t = run(p, W, SolverConfig{Variant::gt_gda, 0.05, 0.05, 30, 0, 1, 7});
  const std::string csv = trace_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find("\r\n")),
            "iteration,gap_total,gap_x,gap_y,agree_x,agree_y,track_q,track_w,lemma1_y_metric");
  std::size_t lines = 0, pos = 0;
  while ((pos = csv.find("\r\n", pos)) != std::string::npos) {
    ++lines;
    pos += 2;
  }
  EXPECT_EQ(lines, t.rows.size() + 1);
  EXPECT_EQ(csv.find('\n'), csv.find("\r\n") + 1);
  // Second data row parses back to the recorded values exactly.
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::getline(in, line);
  line.pop_back();
  std::vector<double> vals;
  std::stringstream ls(line);
  for (std::string f; std::getline(ls, f, ',');) vals.push_back(std::strtod(f.c_str(), nullptr));
  ASSERT_EQ(vals.size(), 9u);
  EXPECT_EQ(vals[0], 7.0);
  EXPECT_EQ(vals[1], t.rows[1].gap_total);
  EXPECT_EQ(vals[7], t.rows[1].track_w);
}

TEST(Output, SvgIsSelfContained) {
  Series a{"gt-gda", {0, 1, 2, 3}, {1, 1e-3, 1e-6, 0}};
  Series b{"d<gda>", {0, 1, 2, 3}, {1, 0.5, 0.4, std::nan("")}};
  const auto svg = render_svg({a, b}, PlotOptions{"test", "iteration", "gap", false, true});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  for (const char* bad : {"href", "<script", "url(", "@import", "<image"}) EXPECT_EQ(svg.find(bad), std::string::npos);
  EXPECT_NE(svg.find("(log)"), std::string::npos);
  EXPECT_NE(svg.find("1e-6"), std::string::npos);
  EXPECT_NE(svg.find(">gt-gda<"), std::string::npos);
  EXPECT_NE(svg.find("d&lt;gda&gt;"), std::string::npos);
}

TEST(Output, ProblemJsonIsRowMajor) {
  auto p = make_quadratic<double>(2, 3, 2, 1.0, 5);
  auto j = problem_json(p);
  EXPECT_EQ(j["nodes"].size(), 2u);
  EXPECT_EQ(j["nodes"][1]["P"].size(), 3u);
  EXPECT_EQ(j["nodes"][1]["P"][2].size(), 2u);
  EXPECT_EQ(j["nodes"][1]["P"][2][1].get<double>(), p.locals[1].P(2, 1));
  EXPECT_EQ(j["x_star"][1].get<double>(), p.x_star(1));
}

// ---------------------------------------------------------- experiments

TEST(Experiment, DeterministicCsvBytes) {
  auto cfg = parse_config(emit_config(manual_config(CostKind::quadratic, 4, 0.05, 200)));
  const auto base = scratch_dir();
  const auto d1 = base / "a", d2 = base / "b";
  auto r1 = run_experiment(cfg, d1);
  auto r2 = run_experiment(cfg, d2);
  ASSERT_EQ(r1.files.size(), 4u);
  for (std::size_t i = 0; i < r1.files.size(); ++i) {
    const std::string a = slurp(r1.files[i]);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(r2.files[i])) << r1.files[i];
  }
  EXPECT_EQ(r1.config_hash, r2.config_hash);
  EXPECT_EQ(r1.files[0].filename(), "trace_d-gda.csv");
}

TEST(Experiment, ClosedFormStepsizesFilledIn) {
  auto cfg = parse_config(kMinimal);
  cfg.solvers[0].max_iters = 5;
  auto res = run_experiment(cfg, {});
  ASSERT_EQ(res.solvers.size(), 1u);
  auto st = theorem1_stepsizes(aggregate_constants(build_problem(cfg.problem)),
                               build_network(cfg.topology).lambda, 1.0);
  EXPECT_EQ(res.solvers[0].alpha, st.alpha);
  EXPECT_EQ(res.solvers[0].beta, st.beta);
  ASSERT_TRUE(res.solvers[0].eta.has_value());
  EXPECT_LE(*res.solvers[0].eta, 1.0);
  EXPECT_TRUE(res.files.empty());
}

TEST(Experiment, DivergenceIsRecordedNotFatal) {
  auto cfg = manual_config(CostKind::quadratic, 4, 0.05, 300);
  cfg.solvers[0].alpha = cfg.solvers[0].beta = 5.0;  // d-gda blows up
  auto res = run_experiment(cfg, {});
  EXPECT_TRUE(res.solvers[0].trace.diverged);
  EXPECT_FALSE(res.solvers[0].error.empty());
  EXPECT_FALSE(res.solvers[1].trace.diverged);
  EXPECT_FALSE(res.all_diverged());
  cfg.solvers[1].alpha = cfg.solvers[1].beta = 5.0;
  EXPECT_TRUE(run_experiment(cfg, {}).all_diverged());
}

// Exponential graphs, strong regularizer: tracking reaches 1e-10 while the
// untracked method stalls at the heterogeneity bias.
TEST(Experiment, TrackingSeparationStrongRegularizer) {
  for (Index n : {8, 32}) {
    auto cfg = manual_config(CostKind::regression_strong, n, 0.04, 5000);
    cfg.solvers[1].stop_gap = 1e-10;
    auto res = run_experiment(cfg, {});
    EXPECT_TRUE(res.solvers[1].trace.reached_stop_gap) << n;
    EXPECT_GT(res.solvers[0].trace.best_gap(), 1e-3) << n;
  }
}

TEST(Experiment, TrackingSeparationSchmidt) {
  auto cfg = manual_config(CostKind::regression_convex, 32, 0.07, 5000);
  cfg.solvers[1].stop_gap = 1e-10;
  auto res = run_experiment(cfg, {});
  EXPECT_TRUE(res.solvers[1].trace.reached_stop_gap);
  EXPECT_GT(res.solvers[0].trace.best_gap(), 1e-3);
}

// ------------------------------------------------------------- analyze

TEST(Analyze, Seed7ExponentialReport) {
  auto cfg = parse_config(kMinimal);
  cfg.problem.n = cfg.topology.n = 8;
  const auto j = analyze(cfg);
  for (const char* key : {"constants", "stepsizes", "eta", "M", "delta", "slack", "rho_M", "certified",
                          "regime_check", "rho_Mtilde", "S_eigenvalues", "perturbation"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["M"].size(), 6u);
  EXPECT_LE(j["rho_M"].get<double>(), j["eta"].get<double>());
  // Pinned from the analysis itself: the tracking-error rows of the
  // certificate are negative for this coupling at λ = 1/2.
  EXPECT_FALSE(j["certified"].get<bool>());
  EXPECT_LT(j["slack"][2].get<double>(), 0.0);
  EXPECT_LT(j["slack"][5].get<double>(), 0.0);
  EXPECT_TRUE(j["S_stable"].get<bool>());
  EXPECT_TRUE(j["perturbation"]["ratios_decreasing"].get<bool>());
}

TEST(Analyze, ConstrainedViolatesStrongConcavity) {
  auto cfg = parse_config(kMinimal);
  cfg.problem.kind = CostKind::constrained;
  try {
    analyze(cfg);
    FAIL() << "expected an assumption violation";
  } catch (const AssumptionViolation& e) {
    EXPECT_EQ(e.assumption(), 1);
  }
}

TEST(Analyze, CompleteGraphRegime) {
  auto cfg = parse_config(kMinimal);
  cfg.topology.kind = TopologyKind::complete;
  const auto j = analyze(cfg);
  EXPECT_NEAR(j["topology"]["lambda"].get<double>(), 0.0, 1e-12);
  EXPECT_FALSE(j["regime_check"].get<bool>());
  EXPECT_TRUE(j["certified"].get<bool>());
}

// ------------------------------------------------------------- speedup

TEST(Speedup, SingleNodeRatioIsOne) {
  auto cfg = parse_config(kMinimal);
  cfg.topology.kind = TopologyKind::complete;
  cfg.solvers[0] = SolverSpec{Variant::gt_gda, StepsizeMode::manual, 0.05, 0.05, 1, 100000, 0, 0, ""};
  auto r = speedup_experiment(cfg, {1}, 1e-12);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].ratio, 1.0);
  EXPECT_FALSE(r.rows[0].censored);
}

TEST(Speedup, Seed7FamilyPinned) {
  auto cfg = load_config(fs::path(GTGDA_SOURCE_DIR) / "configs" / "speedup_quadratic.json");
  auto r = speedup_experiment(cfg, {8, 16, 32}, 1e-12);
  ASSERT_EQ(r.rows.size(), 3u);
  const std::size_t central[] = {529, 530, 527}, gt[] = {529, 530, 528};
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(r.rows[i].iters_centralized, central[i]);
    EXPECT_EQ(r.rows[i].iters_gt, gt[i]);
  }
  EXPECT_TRUE(r.increasing);
  EXPECT_GE(r.r_squared, 0.9);
  const auto csv = speedup_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find("\r\n")), "n,iters_centralized,iters_gt,ratio,censored");
}

TEST(Speedup, CensoredWhenUnreachable) {
  auto cfg = parse_config(kMinimal);
  cfg.solvers[0] = SolverSpec{Variant::gt_gda, StepsizeMode::manual, 0.05, 0.05, 1, 10, 0, 0, ""};
  auto r = speedup_experiment(cfg, {4}, 1e-12);
  EXPECT_TRUE(r.rows[0].censored);
  EXPECT_FALSE(r.increasing);
}

// --------------------------------------------------------------- sweep

TEST(Sweep, RowsPerValueAndSolver) {
  auto cfg = manual_config(CostKind::quadratic, 4, 0.05, 50);
  auto rows = sweep(cfg, "stepsize", {0.01, 0.02, 0.04});
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].value, 0.01);
  EXPECT_EQ(rows[1].label, "gt-gda");
  EXPECT_LT(rows[5].final_gap, rows[1].final_gap);
  EXPECT_THROW(sweep(cfg, "gamma", {1.0}), InvalidParameter);
  EXPECT_THROW(sweep(cfg, "seed", {1.5}), InvalidParameter);
  auto seeds = sweep(cfg, "seed", {1, 2});
  EXPECT_NE(seeds[0].final_gap, seeds[2].final_gap);
  EXPECT_EQ(sweep_csv(rows).substr(0, 5), "value");
}

// ----------------------------------------------------------------- CLI

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir();
  const std::string env = "GTGDA_OUTPUT_DIR=" + dir.string();
  auto write = [&](const std::string& name, const std::string& text) {
    write_text(dir / name, text);
    return (dir / name).string();
  };
  EXPECT_EQ(run_cli("run " + (fs::path(GTGDA_SOURCE_DIR) / "configs" / "quadratic_small.json").string(), env), 0);
  EXPECT_TRUE(fs::exists(dir / "quadratic_small_gt-gda.csv"));
  EXPECT_TRUE(fs::exists(dir / "quadratic_small.svg"));

  EXPECT_EQ(run_cli("run " + write("bad.json", "{\"problem\": {"), env), 2);
  EXPECT_EQ(run_cli("run " + write("unknown.json", R"({"problem":{"kind":"quadratic"},"topology":{"kind":"ring"},
                                                        "solvers":[{"variant":"gt-gda","foo":1}]})"),
                    env),
            2);
  EXPECT_EQ(run_cli("run " + write("diverge.json", R"({"problem":{"kind":"quadratic"},"topology":{"kind":"ring"},
      "solvers":[{"variant":"d-gda","stepsize":"manual","alpha":5,"beta":5,"max_iters":500}]})"),
                    env),
            3);
  EXPECT_EQ(run_cli("analyze " + write("constrained.json", R"({"problem":{"kind":"constrained"},
      "topology":{"kind":"ring"},"solvers":[{"variant":"gt-gda","stepsize":"manual","alpha":0.01,"beta":0.01}]})"),
                    env),
            4);
  EXPECT_EQ(run_cli("frobnicate", env), 2);
}
