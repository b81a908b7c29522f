#pragma once

#include "gtgda/graph.hpp"
#include "gtgda/problem.hpp"
#include "gtgda/types.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace gtgda {

enum class Variant { gt_gda, gt_gda_lite, d_gda, centralized };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::gt_gda: return "gt-gda";
    case Variant::gt_gda_lite: return "gt-gda-lite";
    case Variant::d_gda: return "d-gda";
    case Variant::centralized: return "centralized";
  }
  return "unknown";
}

inline Variant variant_from_string(std::string_view s) {
  if (s == "gt-gda") return Variant::gt_gda;
  if (s == "gt-gda-lite") return Variant::gt_gda_lite;
  if (s == "d-gda") return Variant::d_gda;
  if (s == "centralized") return Variant::centralized;
  throw InvalidParameter("unknown solver variant '" + std::string(s) + "'");
}

struct SolverConfig {
  Variant variant = Variant::gt_gda;
  double alpha = 0;
  double beta = 0;
  std::size_t max_iters = 1000;
  double stop_gap = 0;
  std::uint64_t seed = 0;
  std::size_t record_every = 1;
};

inline void validate(const SolverConfig& cfg) {
  if (!(cfg.alpha > 0) || !std::isfinite(cfg.alpha)) throw InvalidParameter("alpha must be positive");
  if (!(cfg.beta > 0) || !std::isfinite(cfg.beta)) throw InvalidParameter("beta must be positive");
  if (!(cfg.stop_gap >= 0)) throw InvalidParameter("stop_gap must be >= 0");
  if (cfg.record_every < 1) throw InvalidParameter("record_every must be >= 1");
}

/// Node i's quantities are row i of x, y, q, w. The centralized variant keeps
/// a single row.
template <typename Scalar>
struct NetworkState {
  Matrix<Scalar> x;  // n × p_x
  Matrix<Scalar> y;  // n × p_y
  Matrix<Scalar> q;  // tracker of ∇ₓF
  Matrix<Scalar> w;  // tracker of ∇ᵧF
  std::vector<Matrix<Scalar>> P_est;
  Matrix<Scalar> grad_x;  // last local gradients, one row per node
  Matrix<Scalar> grad_y;
  std::size_t iteration = 0;

  Index n() const { return x.rows(); }
};

namespace detail {

template <typename Scalar>
void local_gradients(const SaddleProblem<Scalar>& p, const Matrix<Scalar>& x,
                     const Matrix<Scalar>& y, const std::vector<Matrix<Scalar>>& coupling,
                     Matrix<Scalar>& gx, Matrix<Scalar>& gy) {
  gx.resize(x.rows(), x.cols());
  gy.resize(y.rows(), y.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Vector<Scalar> xi = x.row(i).transpose();
    const Vector<Scalar> yi = y.row(i).transpose();
    gx.row(i) = gtgda::grad_x(p.locals[k], coupling[k], xi, yi).transpose();
    gy.row(i) = gtgda::grad_y(p.locals[k], coupling[k], xi, yi).transpose();
  }
}

template <typename Scalar>
std::vector<Matrix<Scalar>> local_couplings(const SaddleProblem<Scalar>& p) {
  std::vector<Matrix<Scalar>> out;
  for (const auto& c : p.locals) out.push_back(c.P);
  return out;
}

template <typename Scalar>
bool all_finite(const Matrix<Scalar>& m) {
  return m.allFinite();
}

}  // namespace detail

/// x_i⁰, y_i⁰ i.i.d. standard Gaussian from `seed`; P_i⁰ = P_i; trackers
/// start at the local gradients.
template <typename Scalar>
NetworkState<Scalar> init_state(const SaddleProblem<Scalar>& p, std::uint64_t seed) {
  detail::Gaussian g(seed);
  NetworkState<Scalar> s;
  s.x = g.matrix<Scalar>(p.n(), p.px);
  s.y = g.matrix<Scalar>(p.n(), p.py);
  s.P_est = detail::local_couplings(p);
  detail::local_gradients(p, s.x, s.y, s.P_est, s.grad_x, s.grad_y);
  s.q = s.grad_x;
  s.w = s.grad_y;
  return s;
}

/// Centralized starting point: the network average of init_state's iterates,
/// so both engines start at the same (x̄⁰, ȳ⁰).
template <typename Scalar>
NetworkState<Scalar> init_centralized(const SaddleProblem<Scalar>& p, std::uint64_t seed) {
  NetworkState<Scalar> net = init_state(p, seed);
  NetworkState<Scalar> s;
  s.x = net.x.colwise().mean();
  s.y = net.y.colwise().mean();
  s.P_est = {p.P_bar};
  s.grad_x = p.grad_x(s.x.row(0).transpose(), s.y.row(0).transpose()).transpose();
  s.grad_y = p.grad_y(s.x.row(0).transpose(), s.y.row(0).transpose()).transpose();
  s.q = s.grad_x;
  s.w = s.grad_y;
  return s;
}

/// One synchronous round. For the tracking variants:
///   P ← W P                        (gt-gda only)
///   x⁺ = W(x − αq),  y⁺ = W(y + βw)
///   q⁺ = W(q + ∇ₓf(x⁺, y⁺; P) − ∇ₓf(x, y; P_old))
///   w⁺ = W(w + ∇ᵧf(x⁺, y⁺; P) − ∇ᵧf(x, y; P_old))
/// D-GDA mixes and steps along the local gradients at the current point.
template <typename Scalar>
void step(NetworkState<Scalar>& s, const WeightMatrix<Scalar>& W, const SaddleProblem<Scalar>& p,
          const SolverConfig& cfg) {
  const Scalar a = Scalar(cfg.alpha);
  const Scalar b = Scalar(cfg.beta);

  switch (cfg.variant) {
    case Variant::centralized: {
      const Vector<Scalar> x = s.x.row(0).transpose();
      const Vector<Scalar> y = s.y.row(0).transpose();
      s.grad_x.row(0) = p.grad_x(x, y).transpose();
      s.grad_y.row(0) = p.grad_y(x, y).transpose();
      s.x -= a * s.grad_x;
      s.y += b * s.grad_y;
      s.q = s.grad_x;
      s.w = s.grad_y;
      break;
    }
    case Variant::d_gda: {
      if (W.n() != s.n()) throw InvalidParameter("weight matrix size does not match the network");
      detail::local_gradients(p, s.x, s.y, s.P_est, s.grad_x, s.grad_y);
      s.x = W.W * s.x - a * s.grad_x;
      s.y = W.W * s.y + b * s.grad_y;
      s.q = s.grad_x;
      s.w = s.grad_y;
      break;
    }
    case Variant::gt_gda:
    case Variant::gt_gda_lite: {
      if (W.n() != s.n()) throw InvalidParameter("weight matrix size does not match the network");
      if (cfg.variant == Variant::gt_gda) {
        std::vector<Matrix<Scalar>> mixed(s.P_est.size(), Matrix<Scalar>::Zero(p.py, p.px));
        for (Index i = 0; i < s.n(); ++i)
          for (Index r = 0; r < s.n(); ++r)
            if (W.W(i, r) != Scalar(0))
              mixed[static_cast<std::size_t>(i)] += W.W(i, r) * s.P_est[static_cast<std::size_t>(r)];
        s.P_est = std::move(mixed);
      }
      Matrix<Scalar> x_next = W.W * (s.x - a * s.q);
      Matrix<Scalar> y_next = W.W * (s.y + b * s.w);
      Matrix<Scalar> gx, gy;
      detail::local_gradients(p, x_next, y_next, s.P_est, gx, gy);
      s.q = W.W * (s.q + gx - s.grad_x);
      s.w = W.W * (s.w + gy - s.grad_y);
      s.x = std::move(x_next);
      s.y = std::move(y_next);
      s.grad_x = std::move(gx);
      s.grad_y = std::move(gy);
      break;
    }
  }
  ++s.iteration;
  if (!detail::all_finite(s.x) || !detail::all_finite(s.y) || !detail::all_finite(s.q) ||
      !detail::all_finite(s.w))
    throw Divergence(s.iteration);
}

template <typename Scalar>
struct TraceRow {
  std::size_t iteration = 0;
  Scalar gap_total = 0;
  Scalar gap_x = 0;
  Scalar gap_y = 0;
  Scalar agree_x = 0;
  Scalar agree_y = 0;
  Scalar track_q = 0;
  Scalar track_w = 0;
  Scalar lemma1_y_metric = 0;  // ‖ȳ − ∇H*(P̄x̄)‖, NaN when H is not strongly convex
};

template <typename Scalar>
struct Trace {
  std::vector<TraceRow<Scalar>> rows;
  bool diverged = false;
  std::size_t diverged_at = 0;
  bool reached_stop_gap = false;

  Scalar final_gap() const {
    return rows.empty() ? std::numeric_limits<Scalar>::quiet_NaN() : rows.back().gap_total;
  }
  Scalar best_gap() const {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (const auto& r : rows) best = std::min(best, r.gap_total);
    return best;
  }
};

namespace detail {

template <typename Scalar>
Scalar consensus_error(const Matrix<Scalar>& m) {
  return (m.rowwise() - m.colwise().mean()).norm();
}

}  // namespace detail

template <typename Scalar>
Scalar optimality_gap(const NetworkState<Scalar>& s, const SaddleProblem<Scalar>& p) {
  const Vector<Scalar> xb = s.x.colwise().mean().transpose();
  const Vector<Scalar> yb = s.y.colwise().mean().transpose();
  return (xb - p.x_star).norm() + (yb - p.y_star).norm();
}

template <typename Scalar>
TraceRow<Scalar> measure(const NetworkState<Scalar>& s, const SaddleProblem<Scalar>& p) {
  TraceRow<Scalar> r;
  r.iteration = s.iteration;
  const Vector<Scalar> xb = s.x.colwise().mean().transpose();
  const Vector<Scalar> yb = s.y.colwise().mean().transpose();
  r.gap_x = (xb - p.x_star).norm();
  r.gap_y = (yb - p.y_star).norm();
  r.gap_total = r.gap_x + r.gap_y;
  r.agree_x = detail::consensus_error(s.x);
  r.agree_y = detail::consensus_error(s.y);
  r.track_q = detail::consensus_error(s.q);
  r.track_w = detail::consensus_error(s.w);
  if (symmetric_min_eigenvalue(p.R_sym) > Scalar(0))
    r.lemma1_y_metric = (yb - grad_H_star(p, Vector<Scalar>(p.P_bar * xb))).norm();
  else
    r.lemma1_y_metric = std::numeric_limits<Scalar>::quiet_NaN();
  return r;
}

inline constexpr double kDivergenceGap = 1e12;

/// Observer called with the state after initialization and after every step.
template <typename Scalar>
using StepObserver = std::function<void(const NetworkState<Scalar>&)>;

/// Runs cfg.max_iters rounds or until the gap drops to cfg.stop_gap, filling
/// `trace` as it goes. On divergence the trace keeps every row recorded so
/// far plus the flag, and the Divergence is rethrown.
template <typename Scalar>
void run_into(Trace<Scalar>& trace, const SaddleProblem<Scalar>& p, const WeightMatrix<Scalar>& W,
              const SolverConfig& cfg, const StepObserver<Scalar>& observer = {}) {
  validate(cfg);
  NetworkState<Scalar> s =
      cfg.variant == Variant::centralized ? init_centralized(p, cfg.seed) : init_state(p, cfg.seed);
  trace.rows.push_back(measure(s, p));
  if (observer) observer(s);

  auto stop_now = [&](Scalar gap) { return cfg.stop_gap > 0 && gap <= Scalar(cfg.stop_gap); };
  if (stop_now(trace.rows.back().gap_total)) {
    trace.reached_stop_gap = true;
    return;
  }
  for (std::size_t k = 0; k < cfg.max_iters; ++k) {
    try {
      step(s, W, p, cfg);
    } catch (const Divergence& d) {
      trace.diverged = true;
      trace.diverged_at = d.iteration();
      throw;
    }
    const Scalar gap = optimality_gap(s, p);
    if (!(gap <= Scalar(kDivergenceGap))) {
      trace.diverged = true;
      trace.diverged_at = s.iteration;
      throw Divergence(s.iteration);
    }
    if (observer) observer(s);
    const bool last = k + 1 == cfg.max_iters || stop_now(gap);
    if (last || s.iteration % cfg.record_every == 0) trace.rows.push_back(measure(s, p));
    if (stop_now(gap)) {
      trace.reached_stop_gap = true;
      return;
    }
  }
}

template <typename Scalar>
Trace<Scalar> run(const SaddleProblem<Scalar>& p, const WeightMatrix<Scalar>& W,
                  const SolverConfig& cfg, const StepObserver<Scalar>& observer = {}) {
  Trace<Scalar> trace;
  run_into(trace, p, W, cfg, observer);
  return trace;
}

template <typename Scalar>
struct Stepsizes {
  Scalar alpha = 0;
  Scalar beta = 0;
  Scalar c = 0;  // the constant c the pair was built with
};

/// c = 2L²/σ_m² + 2σ_M²κ/σ_m² + 2, one above the strict lower bound.
template <typename Scalar>
Scalar certified_c(const ProblemConstants<Scalar>& c) {
  const Scalar sm2 = c.sigma_m * c.sigma_m;
  return 2 * c.L * c.L / sm2 + 2 * c.sigma_M * c.sigma_M * c.kappa / sm2 + 2;
}

/// β̄ = min{σ_m²(1−λ)²/(192σ_M²L), L(1−λ)²/(48σ_M²), 1/(382κL)},
/// ᾱ = β̄μ²/(cσ_M²); both scaled by `safety`.
template <typename Scalar>
Stepsizes<Scalar> theorem1_stepsizes(const ProblemConstants<Scalar>& c, Scalar lambda,
                                     Scalar safety = 1) {
  if (!(c.mu > 0)) throw AssumptionViolation(1, "mu = 0, certified stepsizes need strong concavity");
  if (!(c.sigma_m > 0)) throw AssumptionViolation(3, "sigma_m = 0, P_bar lacks full column rank");
  if (!(lambda >= 0 && lambda < 1)) throw InvalidParameter("lambda must lie in [0, 1)");
  if (!(safety > 0 && safety <= 1)) throw InvalidParameter("safety must lie in (0, 1]");

  const Scalar gap2 = (1 - lambda) * (1 - lambda);
  const Scalar sM2 = c.sigma_M * c.sigma_M;
  const Scalar sm2 = c.sigma_m * c.sigma_m;
  const Scalar beta = std::min({sm2 * gap2 / (192 * sM2 * c.L), c.L * gap2 / (48 * sM2),
                                Scalar(1) / (382 * c.kappa * c.L)});
  Stepsizes<Scalar> out;
  out.c = certified_c(c);
  out.beta = safety * beta;
  out.alpha = out.beta * c.mu * c.mu / (out.c * c.sigma_M * c.sigma_M);
  return out;
}

/// γ²κ⁴ ≥ max{γ⁶κ²/(1−λ)⁴, σ_m²σ_M²/(L²μ²(1−λ)⁴)}.
template <typename Scalar>
bool regime_check(const ProblemConstants<Scalar>& c, Scalar lambda) {
  const Scalar g2 = c.gamma * c.gamma;
  const Scalar k2 = c.kappa * c.kappa;
  const Scalar gap4 = std::pow(1 - lambda, 4);
  const Scalar lhs = g2 * k2 * k2;
  const Scalar a = g2 * g2 * g2 * k2 / gap4;
  const Scalar b = c.sigma_m * c.sigma_m * c.sigma_M * c.sigma_M /
                   (c.L * c.L * c.mu * c.mu * gap4);
  return lhs >= std::max(a, b);
}

}  // namespace gtgda
