#pragma once

#include "gtgda/graph.hpp"
#include "gtgda/problem.hpp"
#include "gtgda/solvers.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gtgda::harness {

/// Bad config file: JSON syntax (with line and column) or a field that fails
/// validation (named in the message).
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ProblemSpec {
  CostKind kind = CostKind::quadratic;
  Index px = 3;
  Index py = 3;
  Index n = 4;
  double heterogeneity = 1.0;
  std::uint64_t seed = 0;
  bool identical_coupling = false;
  double reg_scale = 1.0;  // regression kinds only
};

struct TopologySpec {
  TopologyKind kind = TopologyKind::exponential;
  Index n = 4;
};

enum class StepsizeMode { theorem1, manual };

struct SolverSpec {
  Variant variant = Variant::gt_gda;
  StepsizeMode stepsize = StepsizeMode::theorem1;
  double alpha = 0;  // manual only
  double beta = 0;
  double safety = 1;  // theorem1 only
  std::size_t max_iters = 1000;
  double stop_gap = 0;
  std::uint64_t seed = 0;
  std::string label;  // defaults to the variant name
};

struct OutputSpec {
  std::string csv = "trace.csv";
  std::string svg = "trace.svg";
  std::size_t record_every = 1;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemSpec problem;
  TopologySpec topology;
  std::vector<SolverSpec> solvers;
  OutputSpec output;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical form with every default filled in. parse_config(emit) returns
/// an equal config.
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);
std::string emit_config(const ExperimentConfig& cfg);

/// FNV-1a over the canonical form.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string hash_hex(std::uint64_t h);

SaddleProblem<double> build_problem(const ProblemSpec& spec);
WeightMatrix<double> build_network(const TopologySpec& spec);

std::string solver_label(const SolverSpec& s);

}  // namespace gtgda::harness
