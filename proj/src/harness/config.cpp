#include "gtgda/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace gtgda::harness {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(where.empty() ? key : where + "." + key, "unknown key");
  }
}

std::string join(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

template <typename T>
void read_uint(const json& obj, const std::string& where, const char* key, T& out, T min = 0) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
    fail(join(where, key), "expected a non-negative integer");
  const auto u = v.get<unsigned long long>();
  if (u < static_cast<unsigned long long>(min)) fail(join(where, key), "must be >= " + std::to_string(min));
  out = static_cast<T>(u);
}

void read_double(const json& obj, const std::string& where, const char* key, double& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(join(where, key), "expected a number");
  out = v.get<double>();
  if (!std::isfinite(out)) fail(join(where, key), "must be finite");
}

void read_bool(const json& obj, const std::string& where, const char* key, bool& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_boolean()) fail(join(where, key), "expected true or false");
  out = obj.at(key).get<bool>();
}

std::string read_string(const json& obj, const std::string& where, const char* key, bool required,
                        const std::string& fallback = {}) {
  if (!obj.contains(key)) {
    if (required) fail(join(where, key), "missing");
    return fallback;
  }
  if (!obj.at(key).is_string()) fail(join(where, key), "expected a string");
  return obj.at(key).get<std::string>();
}

template <typename F>
auto parse_enum(const std::string& field, const std::string& s, F&& f) {
  try {
    return f(s);
  } catch (const InvalidParameter& e) {
    fail(field, e.what());
  }
}

ProblemSpec parse_problem(const json& j) {
  reject_unknown(j, "problem",
                 {"kind", "px", "py", "n", "heterogeneity", "seed", "identical_coupling", "reg_scale"});
  ProblemSpec p;
  p.kind = parse_enum("problem.kind", read_string(j, "problem", "kind", true),
                      [](const std::string& s) { return cost_kind_from_string(s); });
  if (p.kind == CostKind::regression_strong || p.kind == CostKind::regression_convex) {
    p.px = 10;
    p.py = 4;
    p.n = 8;
  }
  read_uint<Index>(j, "problem", "px", p.px, 1);
  read_uint<Index>(j, "problem", "py", p.py, 1);
  read_uint<Index>(j, "problem", "n", p.n, 1);
  read_double(j, "problem", "heterogeneity", p.heterogeneity);
  if (p.heterogeneity < 0) fail("problem.heterogeneity", "must be >= 0");
  read_uint<std::uint64_t>(j, "problem", "seed", p.seed);
  read_bool(j, "problem", "identical_coupling", p.identical_coupling);
  read_double(j, "problem", "reg_scale", p.reg_scale);
  if (p.reg_scale < 0) fail("problem.reg_scale", "must be >= 0");
  if (p.kind == CostKind::constrained && p.identical_coupling)
    fail("problem.identical_coupling", "not available for the constrained kind");
  if (p.kind == CostKind::constrained && p.py < p.px) fail("problem.py", "constrained problems need py >= px");
  return p;
}

TopologySpec parse_topology(const json& j, Index default_n) {
  reject_unknown(j, "topology", {"kind", "n"});
  TopologySpec t;
  t.kind = parse_enum("topology.kind", read_string(j, "topology", "kind", true),
                      [](const std::string& s) { return topology_kind_from_string(s); });
  t.n = default_n;
  read_uint<Index>(j, "topology", "n", t.n, 1);
  return t;
}

SolverSpec parse_solver(const json& j, const std::string& where) {
  reject_unknown(j, where,
                 {"variant", "stepsize", "alpha", "beta", "safety", "max_iters", "stop_gap", "seed", "label"});
  SolverSpec s;
  s.variant = parse_enum(where + ".variant", read_string(j, where, "variant", true),
                         [](const std::string& v) { return variant_from_string(v); });
  const std::string mode = read_string(j, where, "stepsize", false, "theorem1");
  if (mode == "theorem1")
    s.stepsize = StepsizeMode::theorem1;
  else if (mode == "manual")
    s.stepsize = StepsizeMode::manual;
  else
    fail(where + ".stepsize", "expected 'theorem1' or 'manual', got '" + mode + "'");

  if (s.stepsize == StepsizeMode::manual) {
    if (!j.contains("alpha") || !j.contains("beta")) fail(where, "manual stepsizes need alpha and beta");
    if (j.contains("safety")) fail(where + ".safety", "only used with theorem1 stepsizes");
    read_double(j, where, "alpha", s.alpha);
    read_double(j, where, "beta", s.beta);
    if (!(s.alpha > 0)) fail(where + ".alpha", "must be > 0");
    if (!(s.beta > 0)) fail(where + ".beta", "must be > 0");
  } else {
    if (j.contains("alpha") || j.contains("beta")) fail(where, "alpha/beta need stepsize = 'manual'");
    read_double(j, where, "safety", s.safety);
    if (!(s.safety > 0 && s.safety <= 1)) fail(where + ".safety", "must lie in (0, 1]");
  }
  read_uint<std::size_t>(j, where, "max_iters", s.max_iters);
  read_double(j, where, "stop_gap", s.stop_gap);
  if (s.stop_gap < 0) fail(where + ".stop_gap", "must be >= 0");
  read_uint<std::uint64_t>(j, where, "seed", s.seed);
  s.label = read_string(j, where, "label", false);
  return s;
}

OutputSpec parse_output(const json& j) {
  reject_unknown(j, "output", {"csv", "svg", "record_every"});
  OutputSpec o;
  o.csv = read_string(j, "output", "csv", false, o.csv);
  o.svg = read_string(j, "output", "svg", false, o.svg);
  read_uint<std::size_t>(j, "output", "record_every", o.record_every, 1);
  return o;
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::string solver_label(const SolverSpec& s) { return s.label.empty() ? to_string(s.variant) : s.label; }

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte);
    std::string msg = e.what();
    if (auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
    throw ConfigError("JSON parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                      ": " + msg);
  }
  reject_unknown(j, "", {"name", "problem", "topology", "solvers", "output"});
  ExperimentConfig cfg;
  cfg.name = read_string(j, "", "name", false, cfg.name);
  if (!j.contains("problem")) fail("problem", "missing");
  cfg.problem = parse_problem(j.at("problem"));
  if (!j.contains("topology")) fail("topology", "missing");
  cfg.topology = parse_topology(j.at("topology"), cfg.problem.n);
  if (cfg.topology.n != cfg.problem.n)
    fail("topology.n", "is " + std::to_string(cfg.topology.n) + " but problem.n is " +
                           std::to_string(cfg.problem.n));
  if (!j.contains("solvers")) fail("solvers", "missing");
  const json& sv = j.at("solvers");
  if (!sv.is_array() || sv.empty()) fail("solvers", "expected a non-empty array");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < sv.size(); ++i) {
    cfg.solvers.push_back(parse_solver(sv[i], "solvers[" + std::to_string(i) + "]"));
    const std::string label = solver_label(cfg.solvers.back());
    if (!labels.insert(label).second)
      fail("solvers[" + std::to_string(i) + "].label", "duplicate label '" + label + "'");
  }
  if (j.contains("output")) cfg.output = parse_output(j.at("output"));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["name"] = cfg.name;
  const auto& p = cfg.problem;
  j["problem"] = {{"kind", to_string(p.kind)},
                  {"px", p.px},
                  {"py", p.py},
                  {"n", p.n},
                  {"heterogeneity", p.heterogeneity},
                  {"seed", p.seed},
                  {"identical_coupling", p.identical_coupling},
                  {"reg_scale", p.reg_scale}};
  j["topology"] = {{"kind", to_string(cfg.topology.kind)}, {"n", cfg.topology.n}};
  j["solvers"] = nlohmann::ordered_json::array();
  for (const auto& s : cfg.solvers) {
    nlohmann::ordered_json o;
    o["variant"] = to_string(s.variant);
    o["stepsize"] = s.stepsize == StepsizeMode::manual ? "manual" : "theorem1";
    if (s.stepsize == StepsizeMode::manual) {
      o["alpha"] = s.alpha;
      o["beta"] = s.beta;
    } else {
      o["safety"] = s.safety;
    }
    o["max_iters"] = s.max_iters;
    o["stop_gap"] = s.stop_gap;
    o["seed"] = s.seed;
    o["label"] = solver_label(s);
    j["solvers"].push_back(std::move(o));
  }
  j["output"] = {{"csv", cfg.output.csv}, {"svg", cfg.output.svg}, {"record_every", cfg.output.record_every}};
  return j;
}

std::string emit_config(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string s = config_to_json(cfg).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17] = {};
  auto [end, ec] = std::to_chars(buf, buf + 16, h, 16);
  (void)ec;
  std::string s(buf, end);
  return std::string(16 - s.size(), '0') + s;
}

SaddleProblem<double> build_problem(const ProblemSpec& spec) {
  switch (spec.kind) {
    case CostKind::quadratic:
      return make_quadratic<double>(
          QuadraticSpec{spec.px, spec.py, spec.n, spec.heterogeneity, spec.seed, spec.identical_coupling});
    case CostKind::regression_strong:
    case CostKind::regression_convex: {
      RegressionSpec r;
      r.regularizer = spec.kind == CostKind::regression_strong ? Regularizer::strong : Regularizer::convex_schmidt;
      r.px = spec.px;
      r.py = spec.py;
      r.n = spec.n;
      r.heterogeneity = spec.heterogeneity;
      r.seed = spec.seed;
      r.reg_scale = spec.reg_scale;
      r.identical_coupling = spec.identical_coupling;
      return make_regression<double>(r);
    }
    case CostKind::constrained:
      return make_constrained<double>(ConstrainedSpec{spec.px, spec.py, spec.n, spec.heterogeneity, spec.seed});
  }
  throw InvalidParameter("unknown problem kind");
}

WeightMatrix<double> build_network(const TopologySpec& spec) {
  return make_weights<double>(build_topology(spec.kind, spec.n));
}

}  // namespace gtgda::harness
