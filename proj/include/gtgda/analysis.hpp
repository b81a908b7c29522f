#pragma once

#include "gtgda/graph.hpp"
#include "gtgda/linalg.hpp"
#include "gtgda/problem.hpp"
#include "gtgda/solvers.hpp"
#include "gtgda/types.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace gtgda {

// ---------------------------------------------------------------------------
// Spectral radius
// ---------------------------------------------------------------------------

template <typename Scalar>
Scalar spectral_radius(const Matrix<Scalar>& m, std::size_t max_iters = 100000) {
  if (m.rows() != m.cols()) throw InvalidParameter("spectral_radius needs a square matrix");
  if (!m.allFinite()) throw InvalidParameter("spectral_radius: non-finite entries");
  if (m.rows() == 0) return Scalar(0);
  if (m.rows() <= 2000) {
    Scalar r = 0;
    for (const auto& ev : eigenvalues(m)) r = std::max(r, std::abs(ev));
    return r;
  }
  // Large matrices: growth of ‖Mᵏv‖ over a window of steps.
  constexpr int window = 16;
  Vector<Scalar> v = Vector<Scalar>::Ones(m.rows()).normalized();
  Scalar prev = -1;
  for (std::size_t k = 0; k < max_iters; k += window) {
    Scalar log_growth = 0;
    for (int j = 0; j < window; ++j) {
      v = m * v;
      const Scalar nv = v.norm();
      if (nv == Scalar(0)) return Scalar(0);
      log_growth += std::log(nv);
      v /= nv;
    }
    const Scalar est = std::exp(log_growth / window);
    if (std::abs(est - prev) <= Scalar(1e-12) * est) return est;
    prev = est;
  }
  throw NumericFailure("spectral_radius power iteration did not converge", max_iters);
}

// ---------------------------------------------------------------------------
// Six-dimensional error system
// ---------------------------------------------------------------------------

/// u = [‖x − W₁∞x‖, √n‖x̄ − x*‖, ‖q − W₁∞q‖/L, ‖y − W₂∞y‖, √n‖ȳ − ∇H*(P̄x̄)‖, ‖w − W₂∞w‖/L].
template <typename Scalar>
Vector<Scalar> error_vector(const NetworkState<Scalar>& s, const SaddleProblem<Scalar>& p, Scalar L) {
  const Scalar rn = std::sqrt(Scalar(s.n()));
  const Vector<Scalar> xb = s.x.colwise().mean().transpose();
  const Vector<Scalar> yb = s.y.colwise().mean().transpose();
  Vector<Scalar> u(6);
  u(0) = detail::consensus_error(s.x);
  u(1) = rn * (xb - p.x_star).norm();
  u(2) = detail::consensus_error(s.q) / L;
  u(3) = detail::consensus_error(s.y);
  u(4) = rn * (yb - grad_H_star(p, Vector<Scalar>(p.P_bar * xb))).norm();
  u(5) = detail::consensus_error(s.w) / L;
  return u;
}

/// s = [‖x‖, ‖y‖, 0, 0, 0, 0] over the stacked iterates.
template <typename Scalar>
Vector<Scalar> perturbation_vector(const NetworkState<Scalar>& s) {
  Vector<Scalar> v = Vector<Scalar>::Zero(6);
  v(0) = s.x.norm();
  v(1) = s.y.norm();
  return v;
}

/// Strict lower bound on c required by the system matrix.
template <typename Scalar>
Scalar c_lower_bound(const ProblemConstants<Scalar>& c) {
  const Scalar sm2 = c.sigma_m * c.sigma_m;
  return 2 * c.L * c.L / sm2 + 2 * c.sigma_M * c.sigma_M * c.kappa / sm2 + 1;
}

/// α ≤ βμ²/(cσ_M²), the stepsize coupling under which M bounds the error.
template <typename Scalar>
bool stepsize_condition(const ProblemConstants<Scalar>& c, Scalar alpha, Scalar beta, Scalar cconst) {
  return alpha <= beta * c.mu * c.mu / (cconst * c.sigma_M * c.sigma_M);
}

/// The 6×6 nonnegative system matrix, entries as printed. Only c and the
/// sign of the stepsizes are validated here; stepsize_condition() reports
/// the coupling between α and β separately.
template <typename Scalar>
Matrix<Scalar> build_M(const ProblemConstants<Scalar>& c, Scalar lambda, Scalar alpha, Scalar beta,
                       Scalar cconst) {
  if (!(c.mu > 0) || !(c.sigma_m > 0) || !(c.L > 0))
    throw InvalidParameter("build_M needs mu, sigma_m, L > 0");
  if (!(cconst > c_lower_bound(c))) throw InvalidParameter("c is below its lower bound");
  if (!(alpha >= 0) || !(beta >= 0)) throw InvalidParameter("stepsizes must be nonnegative");
  if (!(lambda >= 0 && lambda < 1)) throw InvalidParameter("lambda must lie in [0, 1)");

  const Scalar l = lambda, a = alpha, b = beta;
  const Scalar L = c.L, L1 = c.L1, L2 = c.L2, mu = c.mu;
  const Scalar sM = c.sigma_M, sm = c.sigma_m;
  const Scalar sM2 = sM * sM;

  const Scalar m1 = l * (L + sM2 / mu);
  const Scalar m2 = l * (sM2 / L) * (1 + L / mu);
  const Scalar m3 = (sM / mu) * (L1 + sM2 / mu);
  const Scalar m4 = l * (sM / L) * (L + sM2 / mu);
  const Scalar m5 = l * sM * (1 + L / mu);

  Matrix<Scalar> M = Matrix<Scalar>::Zero(6, 6);
  // M11
  M(0, 0) = l;
  M(0, 2) = a * L;
  M(1, 0) = a * L1;
  M(1, 1) = 1 - a * sm * sm / L2;
  M(2, 0) = l + a * l * L + b * l * sM2 / L;
  M(2, 1) = a * m1 + b * m2;
  M(2, 2) = l + a * l * L;
  // M12
  M(1, 4) = sM * a;
  M(2, 3) = sM * (l / L + a * l + b * l);
  M(2, 4) = sM * (a * l + b * l);
  M(2, 5) = sM * b * l;
  // M21
  M(4, 0) = a * sM * L1 / mu;
  M(4, 1) = a * m3;
  M(5, 0) = l * sM / L + a * l * sM + b * l * sM;
  M(5, 1) = a * m4 + b * m5;
  M(5, 2) = a * l * sM;
  // M22
  M(3, 3) = l;
  M(3, 5) = b * L;
  M(4, 3) = a * sM2 / mu + b * L2;
  M(4, 4) = 1 - b * mu * (1 - 1 / cconst);
  M(5, 3) = l + a * l * sM2 / L + b * l * L;
  M(5, 4) = a * l * sM2 / L + b * l * L;
  M(5, 5) = l + b * l * L;
  return M;
}

/// Weight vector δ of the certificate Mδ ≤ ηδ. Independent of the stepsizes.
///
/// l₂ is defined through d and d through l₂; substituting gives the closed
/// form d = 1 − 2 l₁ l₃ σ_M L / σ_m², positive whenever c exceeds its bound.
template <typename Scalar>
Vector<Scalar> build_delta(const ProblemConstants<Scalar>& c, Scalar lambda, Scalar cconst) {
  if (!(c.mu > 0) || !(c.sigma_m > 0) || !(c.L > 0) || !(c.sigma_M > 0))
    throw InvalidParameter("build_delta needs mu, sigma_m, sigma_M, L > 0");
  if (!(cconst > 1)) throw InvalidParameter("c must exceed 1");
  if (!(lambda >= 0 && lambda < 1)) throw InvalidParameter("lambda must lie in [0, 1)");
  const Scalar L = c.L, mu = c.mu, sM = c.sigma_M, sm2 = c.sigma_m * c.sigma_m;
  const Scalar l1 = L / sM + sM / mu;
  const Scalar l3 = 1 / (cconst - 1);
  const Scalar d = 1 - 2 * l1 * l3 * sM * L / sm2;
  if (!(d > 0)) throw InvalidParameter("c too small: the certificate weights are not positive");
  const Scalar l2 = sM * L / (d * sm2);
  const Scalar ratio = lambda / (1 - lambda);

  Vector<Scalar> delta(6);
  delta(0) = sM / L;
  delta(1) = 4 * l2 * (1 + l3);
  delta(2) = ratio * 2 * sM / L;
  delta(3) = (cconst - 1) / (2 * (1 + cconst * c.kappa));
  delta(4) = 2 * l3 * (1 + 4 * l1 * l2 * (1 + l3)) + 1;
  delta(5) = ratio * sM * sM * (1 / (L * L) + 1 / sm2);
  return delta;
}

/// η = 1 − αβσ_m²/κ.
template <typename Scalar>
Scalar predicted_eta(const ProblemConstants<Scalar>& c, Scalar alpha, Scalar beta) {
  if (!(alpha > 0) || !(beta > 0)) throw InvalidParameter("predicted_eta needs positive stepsizes");
  const Scalar eta = 1 - alpha * beta * c.sigma_m * c.sigma_m / c.kappa;
  if (!(eta > 0)) throw InvalidParameter("stepsizes too large: eta <= 0");
  return eta;
}

template <typename Scalar>
struct Certificate {
  bool holds = false;
  Vector<Scalar> slack;  // ηδ − Mδ
};

inline constexpr double kCertificateTolerance = 1e-12;

/// Checks Mδ ≤ ηδ entrywise with absolute tolerance 1e-12.
template <typename Scalar>
Certificate<Scalar> verify_lemma2(const Matrix<Scalar>& M, const Vector<Scalar>& delta, Scalar eta) {
  if (M.rows() != 6 || M.cols() != 6 || delta.size() != 6)
    throw InvalidParameter("verify_lemma2 expects a 6x6 matrix and a 6-vector");
  // λ = 0 zeroes the two tracking weights; those rows of M vanish with them.
  if ((delta.array() < 0).any() || !(delta.array() > 0).any())
    throw InvalidParameter("delta must be nonnegative and nonzero");
  Certificate<Scalar> out;
  out.slack = eta * delta - M * delta;
  out.holds = (out.slack.array() >= -Scalar(kCertificateTolerance)).all();
  return out;
}

/// Where the coupling-heterogeneity terms sit in N. `printed` uses the
/// entries (2,1) and (1,5) (1-based). `by_derivation` puts ατ on the x̄ row
/// against ‖y‖ and βτ on the ȳ row against ‖x‖, which is where the mismatch
/// (1/n)Σ(P_i − P̄)ᵀy_i and (1/n)Σ(P_i − P̄)x_i actually enters.
enum class NPlacement { printed, by_derivation };

/// Perturbation matrix of the error recursion: ατ_k and βτ_k with
/// τ_k = λᵏτ for gt-gda and τ_k = τ for gt-gda-lite.
template <typename Scalar>
Matrix<Scalar> build_N(const ProblemConstants<Scalar>& c, Scalar lambda, Scalar alpha, Scalar beta,
                       std::size_t k, bool lite, NPlacement placement = NPlacement::printed) {
  const Scalar tau = lite ? c.tau : std::pow(lambda, Scalar(k)) * c.tau;
  Matrix<Scalar> N = Matrix<Scalar>::Zero(6, 6);
  if (placement == NPlacement::printed) {
    N(1, 0) = alpha * tau;
    N(0, 4) = beta * tau;
  } else {
    N(1, 1) = alpha * tau;
    N(4, 0) = beta * tau;
  }
  return N;
}

/// u_{k+1} − (M u_k + N s_k); the error recursion holds where this is ≤ 0.
template <typename Scalar>
Vector<Scalar> lemma1_excess(const Matrix<Scalar>& M, const Matrix<Scalar>& N,
                             const Vector<Scalar>& u_k, const Vector<Scalar>& s_k,
                             const Vector<Scalar>& u_next) {
  return u_next - M * u_k - N * s_k;
}

/// Entrywise running maximum of s^k, the sup-norm input of the asymptotic bound.
template <typename Scalar>
Vector<Scalar> running_max(const Vector<Scalar>& sup, const Vector<Scalar>& s_k) {
  return sup.size() == 0 ? s_k : Vector<Scalar>(sup.cwiseMax(s_k));
}

/// limsup u^k ≤ (I − M)⁻¹ N s̄ for a constant-τ N (gt-gda-lite), given ρ(M) < 1.
template <typename Scalar>
Vector<Scalar> asymptotic_response(const Matrix<Scalar>& M, const Matrix<Scalar>& N, const Vector<Scalar>& s_sup) {
  if (!(spectral_radius(M) < 1)) throw InvalidParameter("asymptotic response needs rho(M) < 1");
  const Index k = M.rows();
  return (Matrix<Scalar>::Identity(k, k) - M).partialPivLu().solve(N * s_sup);
}

// ---------------------------------------------------------------------------
// Exact LTI for quadratic costs (GT-GDA-Lite)
// ---------------------------------------------------------------------------

/// State ũ = (x − J₁x, x̄ − x*, q − J₁q, y − J₂y, ȳ − y*, w − J₂w), of size
/// 2n(p_x + p_y) + p_x + p_y. Valid while the trackers hold the exact
/// network-mean gradient, which init_state guarantees.
template <typename Scalar>
struct QuadLTI {
  Matrix<Scalar> Mtilde;
  Index n = 0;
  Index px = 0;
  Index py = 0;

  Index size() const { return 2 * n * (px + py) + px + py; }
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> lift(const SaddleProblem<Scalar>& p, int which) {
  std::vector<Matrix<Scalar>> blocks;
  for (const auto& c : p.locals) {
    switch (which) {
      case 0: blocks.push_back(symmetrized(c.Q)); break;
      case 1: blocks.push_back(symmetrized(c.R)); break;
      case 2: blocks.push_back(c.P); break;
      default: blocks.push_back(c.P.transpose()); break;
    }
  }
  return block_diag(blocks);
}

}  // namespace detail

template <typename Scalar>
QuadLTI<Scalar> build_quad_lti(const SaddleProblem<Scalar>& p, const WeightMatrix<Scalar>& W,
                               Scalar alpha, Scalar beta) {
  if (!p.quadratic()) throw InvalidParameter("build_quad_lti needs a quadratic problem");
  if (W.n() != p.n()) throw InvalidParameter("weight matrix size does not match the network");
  const Index n = p.n(), px = p.px, py = p.py;
  const Index nx = n * px, ny = n * py;
  const Scalar a = alpha, b = beta;

  const Matrix<Scalar> Ix = Matrix<Scalar>::Identity(px, px);
  const Matrix<Scalar> Iy = Matrix<Scalar>::Identity(py, py);
  const Matrix<Scalar> J = averaging_matrix<Scalar>(n);
  const Matrix<Scalar> W1 = kron(W.W, Ix), W2 = kron(W.W, Iy);
  const Matrix<Scalar> J1 = kron(J, Ix), J2 = kron(J, Iy);
  const Matrix<Scalar> Wb1 = W1 - J1, Wb2 = W2 - J2;
  const Matrix<Scalar> Inx = Matrix<Scalar>::Identity(nx, nx);
  const Matrix<Scalar> Iny = Matrix<Scalar>::Identity(ny, ny);
  const Matrix<Scalar> onex = kron(Vector<Scalar>::Ones(n), Ix);
  const Matrix<Scalar> oney = kron(Vector<Scalar>::Ones(n), Iy);
  const Matrix<Scalar> meanx = onex.transpose() / Scalar(n);
  const Matrix<Scalar> meany = oney.transpose() / Scalar(n);

  const Matrix<Scalar> LQ = detail::lift(p, 0);
  const Matrix<Scalar> LR = detail::lift(p, 1);
  const Matrix<Scalar> LP = detail::lift(p, 2);
  const Matrix<Scalar> LPt = detail::lift(p, 3);

  QuadLTI<Scalar> out;
  out.n = n;
  out.px = px;
  out.py = py;
  const Index dim = out.size();
  Matrix<Scalar>& M = out.Mtilde;
  M = Matrix<Scalar>::Zero(dim, dim);

  // Block offsets.
  const Index ex = 0, dx = nx, eq = nx + px;
  const Index ey = 2 * nx + px, dy = ey + ny, ew = dy + py;

  // x-consensus row
  M.block(ex, ex, nx, nx) = Wb1;
  M.block(ex, eq, nx, nx) = -a * W1;
  // x̄ row
  M.block(dx, ex, px, nx) = -a * meanx * LQ;
  M.block(dx, dx, px, px) = Ix - a * p.Q_sym;
  M.block(dx, ey, px, ny) = -a * meanx * LPt;
  M.block(dx, dy, px, py) = -a * p.P_bar.transpose();
  // q-tracking row
  M.block(eq, ex, nx, nx) = Wb1 * (LQ * ((W1 - Inx) - a * J1 * LQ) + b * LPt * J2 * LP);
  M.block(eq, dx, nx, px) = Wb1 * (-a * LQ * J1 * LQ + b * LPt * J2 * LP) * onex;
  M.block(eq, eq, nx, nx) = Wb1 - a * Wb1 * LQ * W1;
  M.block(eq, ey, nx, ny) = Wb1 * (-a * LQ * J1 * LPt + LPt * ((W2 - Iny) - b * J2 * LR));
  M.block(eq, dy, nx, py) = Wb1 * (-a * LQ * J1 * LPt - b * LPt * J2 * LR) * oney;
  M.block(eq, ew, nx, ny) = Wb1 * (b * LPt * W2);
  // y-consensus row
  M.block(ey, ey, ny, ny) = Wb2;
  M.block(ey, ew, ny, ny) = b * W2;
  // ȳ row
  M.block(dy, ex, py, nx) = b * meany * LP;
  M.block(dy, dx, py, px) = b * p.P_bar;
  M.block(dy, ey, py, ny) = -b * meany * LR;
  M.block(dy, dy, py, py) = Iy - b * p.R_sym;
  // w-tracking row
  M.block(ew, ex, ny, nx) = Wb2 * (-b * LR * J2 * LP + LP * ((W1 - Inx) - a * J1 * LQ));
  M.block(ew, dx, ny, px) = Wb2 * (-b * LR * J2 * LP - a * LP * J1 * LQ) * onex;
  M.block(ew, eq, ny, nx) = Wb2 * (-a * LP * W1);
  M.block(ew, ey, ny, ny) = Wb2 * (-LR * ((W2 - Iny) - b * J2 * LR) - a * LP * J1 * LPt);
  M.block(ew, dy, ny, py) = Wb2 * (b * LR * J2 * LR - a * LP * J1 * LPt) * oney;
  M.block(ew, ew, ny, ny) = Wb2 - b * Wb2 * LR * W2;
  return out;
}

/// ũ for a network state, in the block order used by build_quad_lti.
template <typename Scalar>
Vector<Scalar> lti_error(const NetworkState<Scalar>& s, const SaddleProblem<Scalar>& p) {
  auto centered = [](const Matrix<Scalar>& m) {
    return stack_rows(Matrix<Scalar>(m.rowwise() - m.colwise().mean()));
  };
  const Index nx = s.x.size(), ny = s.y.size();
  Vector<Scalar> u(2 * (nx + ny) + p.px + p.py);
  u << centered(s.x), Vector<Scalar>(s.x.colwise().mean().transpose()) - p.x_star, centered(s.q),
      centered(s.y), Vector<Scalar>(s.y.colwise().mean().transpose()) - p.y_star, centered(s.w);
  return u;
}

// ---------------------------------------------------------------------------
// Reduced matrix S and eigenvalue perturbation
// ---------------------------------------------------------------------------

template <typename Scalar>
struct SMatrix {
  Matrix<Scalar> S;
  std::vector<std::complex<Scalar>> eigenvalues;
  bool stable = false;  // every eigenvalue has negative real part
};

/// S = [−(Q̄+Q̄ᵀ), −P̄ᵀ; P̄, −(R̄+R̄ᵀ)], the first-order generator of the
/// perturbed unit eigenvalues.
template <typename Scalar>
SMatrix<Scalar> build_S(const SaddleProblem<Scalar>& p) {
  if (!p.quadratic()) throw InvalidParameter("build_S needs a quadratic problem");
  SMatrix<Scalar> out;
  out.S.resize(p.px + p.py, p.px + p.py);
  out.S << -p.Q_sym, -p.P_bar.transpose(), p.P_bar, -p.R_sym;
  out.eigenvalues = eigenvalues(out.S);
  out.stable = std::all_of(out.eigenvalues.begin(), out.eigenvalues.end(),
                           [](const std::complex<Scalar>& z) { return z.real() < 0; });
  return out;
}

template <typename Scalar>
struct PerturbationPoint {
  Scalar alpha = 0;
  Scalar ratio = 0;            // max_i |λ_i(α) − 1 − α[λ_S]_i| / α
  Scalar spectral_radius = 0;  // ρ(M̃_α)
  bool ambiguous = false;      // a pairing was not unique or fell outside the guard radius
  std::vector<std::complex<Scalar>> matched;
};

template <typename Scalar>
struct PerturbationReport {
  std::vector<std::complex<Scalar>> lambda_S;
  std::vector<PerturbationPoint<Scalar>> points;
  bool ratios_decreasing = false;
};

/// For each α (β = α), pairs the eigenvalues of M̃_α that leave 1 with the
/// first-order predictions 1 + α[λ_S]_i by greedy nearest neighbour.
template <typename Scalar>
PerturbationReport<Scalar> eigen_perturbation_check(const SaddleProblem<Scalar>& p,
                                                    const WeightMatrix<Scalar>& W,
                                                    const std::vector<Scalar>& alphas) {
  if (alphas.empty()) throw InvalidParameter("need at least one alpha");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0)) throw InvalidParameter("alphas must be positive");
    if (i > 0 && !(alphas[i] < alphas[i - 1])) throw InvalidParameter("alphas must decrease");
  }
  PerturbationReport<Scalar> rep;
  rep.lambda_S = build_S(p).eigenvalues;
  Scalar max_abs = 0;
  for (const auto& z : rep.lambda_S) max_abs = std::max(max_abs, std::abs(z));

  for (Scalar a : alphas) {
    const auto lti = build_quad_lti(p, W, a, a);
    const auto ev = eigenvalues(lti.Mtilde);
    PerturbationPoint<Scalar> pt;
    pt.alpha = a;
    const Scalar guard = 10 * a * max_abs;
    std::vector<bool> used(ev.size(), false);
    Scalar worst = 0;
    for (const auto& ls : rep.lambda_S) {
      const std::complex<Scalar> target = Scalar(1) + a * ls;
      std::size_t best = ev.size();
      Scalar d1 = std::numeric_limits<Scalar>::infinity();
      Scalar d2 = std::numeric_limits<Scalar>::infinity();
      for (std::size_t j = 0; j < ev.size(); ++j) {
        if (used[j]) continue;
        const Scalar d = std::abs(ev[j] - target);
        if (d < d1) {
          d2 = d1;
          d1 = d;
          best = j;
        } else if (d < d2) {
          d2 = d;
        }
      }
      if (best == ev.size()) {
        pt.ambiguous = true;
        continue;
      }
      used[best] = true;
      pt.matched.push_back(ev[best]);
      if (d1 > guard) pt.ambiguous = true;
      // Equidistant candidates that are genuinely different eigenvalues.
      if (d2 - d1 <= Scalar(1e-14) * std::max(Scalar(1), d1) && d2 > 0 && d1 < guard) {
        bool same = false;
        for (std::size_t j = 0; j < ev.size(); ++j)
          if (!used[j] && std::abs(std::abs(ev[j] - target) - d2) <= Scalar(1e-14) &&
              std::abs(ev[j] - ev[best]) <= Scalar(1e-14))
            same = true;
        if (!same) pt.ambiguous = true;
      }
      worst = std::max(worst, d1);
    }
    pt.ratio = worst / a;
    pt.spectral_radius = spectral_radius(lti.Mtilde);
    rep.points.push_back(std::move(pt));
  }
  rep.ratios_decreasing = true;
  for (std::size_t i = 1; i < rep.points.size(); ++i)
    if (!(rep.points[i].ratio < rep.points[i - 1].ratio)) rep.ratios_decreasing = false;
  return rep;
}

}  // namespace gtgda
