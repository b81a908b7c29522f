#pragma once

#include "gtgda/analysis.hpp"
#include "gtgda/harness/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gtgda::harness {

struct SolverResult {
  std::string label;
  Variant variant = Variant::gt_gda;
  double alpha = 0;
  double beta = 0;
  std::optional<double> eta;  // set when the constants admit it
  bool certified = false;     // Mδ ≤ ηδ at these stepsizes
  Trace<double> trace;
  std::string error;  // divergence or other per-solver failure
};

struct ExperimentResult {
  std::string config_hash;
  std::vector<SolverResult> solvers;
  std::vector<std::filesystem::path> files;

  bool all_diverged() const;
};

/// Stepsizes and certificate status for one solver spec on a problem.
SolverResult plan_solver(const SolverSpec& spec, const SaddleProblem<double>& p, const WeightMatrix<double>& W);

/// Runs every solver in config order. Files go under out_dir (empty = no
/// files): one CSV per solver named <csv-stem>_<label>.csv, one SVG, and a
/// <csv-stem>_meta.json with the hash, stepsizes, η and certificate flags.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Constants, certified stepsizes, M, δ, η, ρ(M), slacks, regime check and,
/// for quadratic problems, ρ(M̃), the eigenvalues of S and the perturbation
/// table. Throws AssumptionViolation when μ = 0 or σ_m = 0.
nlohmann::ordered_json analyze(const ExperimentConfig& cfg);

struct SpeedupRow {
  Index n = 0;
  std::size_t iters_centralized = 0;
  std::size_t iters_gt = 0;
  double ratio = 0;  // n · iters_centralized / iters_gt
  bool censored = false;
};

struct SpeedupResult {
  std::vector<SpeedupRow> rows;
  bool nondecreasing = false;
  bool increasing = false;
  double slope = 0;  // least-squares ratio ≈ slope · n + intercept
  double intercept = 0;
  double r_squared = 0;
};

/// For each n the family config is re-instantiated with problem.n =
/// topology.n = n. The first solver spec supplies the stepsizes (used by
/// both methods) and the iteration cap.
SpeedupResult speedup_experiment(const ExperimentConfig& family, const std::vector<Index>& n_list,
                                 double target_gap);

std::string speedup_csv(const SpeedupResult& r);

struct SweepRow {
  double value = 0;
  std::string label;
  double final_gap = 0;
  double best_gap = 0;
  std::size_t iterations = 0;
  bool reached = false;
  bool diverged = false;
};

/// Re-runs the config with one parameter replaced by each grid value.
/// param is one of alpha, beta, stepsize (α = β), safety, heterogeneity, seed.
/// A stepsize sweep turns theorem1 solvers into manual ones with α = β = value
/// before overriding the swept stepsize.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& param, const std::vector<double>& grid);

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace gtgda::harness
