#pragma once

#include "gtgda/linalg.hpp"
#include "gtgda/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gtgda {

enum class CostKind { quadratic, regression_strong, regression_convex, constrained };

inline std::string to_string(CostKind kind) {
  switch (kind) {
    case CostKind::quadratic: return "quadratic";
    case CostKind::regression_strong: return "regression-strong";
    case CostKind::regression_convex: return "regression-convex";
    case CostKind::constrained: return "constrained";
  }
  return "unknown";
}

inline CostKind cost_kind_from_string(std::string_view s) {
  if (s == "quadratic") return CostKind::quadratic;
  if (s == "regression-strong") return CostKind::regression_strong;
  if (s == "regression-convex") return CostKind::regression_convex;
  if (s == "constrained") return CostKind::constrained;
  throw InvalidParameter("unknown problem kind '" + std::string(s) + "'");
}

/// Private cost of one node,
///
///   f_i(x, y) = g_i(x) + ⟨y, P x⟩ − h_i(y),
///   g_i(x)    = xᵀQx + qᵀx + q0 + s · Σ_j (1/t)[log(1 + e^{t x_j}) + log(1 + e^{−t x_j})],
///   h_i(y)    = yᵀRy + rᵀy + r0.
///
/// Q and R need not be symmetric; gradients use Q + Qᵀ and R + Rᵀ. The smooth
/// log-cosh term (s > 0) is the only non-quadratic piece.
///
/// Regression data enters with a minus sign on the coupling: the regression
/// saddle ⟨y, b⟩ − ½‖y‖²_C − ⟨y, A x⟩ is stored as P = −A, R = C/2, r = −b.
template <typename Scalar>
struct LocalCost {
  Matrix<Scalar> Q;
  Vector<Scalar> q;
  Scalar q0 = 0;
  Scalar smooth_scale = 0;
  Scalar smooth_sharpness = 1;
  Matrix<Scalar> R;
  Vector<Scalar> r;
  Scalar r0 = 0;
  Matrix<Scalar> P;

  Index px() const { return P.cols(); }
  Index py() const { return P.rows(); }
  bool quadratic() const { return smooth_scale == Scalar(0); }

  static LocalCost zeros(Index px, Index py) {
    LocalCost c;
    c.Q = Matrix<Scalar>::Zero(px, px);
    c.q = Vector<Scalar>::Zero(px);
    c.R = Matrix<Scalar>::Zero(py, py);
    c.r = Vector<Scalar>::Zero(py);
    c.P = Matrix<Scalar>::Zero(py, px);
    return c;
  }
};

namespace detail {

template <typename Scalar>
Scalar softplus(Scalar z) {
  return std::max(z, Scalar(0)) + std::log1p(std::exp(-std::abs(z)));
}

template <typename Scalar>
void check_dims(const LocalCost<Scalar>& c, Index xs, Index ys) {
  if (xs != c.px() || ys != c.py())
    throw InvalidParameter("gradient oracle called with mismatched dimensions");
}

}  // namespace detail

template <typename Scalar>
Vector<Scalar> grad_g(const LocalCost<Scalar>& c, const Vector<Scalar>& x) {
  Vector<Scalar> g = c.Q * x + c.Q.transpose() * x + c.q;
  if (c.smooth_scale != Scalar(0)) {
    const Scalar t = c.smooth_sharpness;
    for (Index j = 0; j < x.size(); ++j) g(j) += c.smooth_scale * std::tanh(t * x(j) / 2);
  }
  return g;
}

template <typename Scalar>
Vector<Scalar> grad_h(const LocalCost<Scalar>& c, const Vector<Scalar>& y) {
  return c.R * y + c.R.transpose() * y + c.r;
}

template <typename Scalar>
Scalar value(const LocalCost<Scalar>& c, const Vector<Scalar>& x, const Vector<Scalar>& y) {
  detail::check_dims(c, x.size(), y.size());
  Scalar g = x.dot(c.Q * x) + c.q.dot(x) + c.q0;
  if (c.smooth_scale != Scalar(0)) {
    const Scalar t = c.smooth_sharpness;
    for (Index j = 0; j < x.size(); ++j)
      g += c.smooth_scale / t * (detail::softplus(t * x(j)) + detail::softplus(-t * x(j)));
  }
  const Scalar h = y.dot(c.R * y) + c.r.dot(y) + c.r0;
  return g + y.dot(c.P * x) - h;
}

/// ∇ₓ f_i = ∇g_i(x) + Pᵀy.
template <typename Scalar>
Vector<Scalar> grad_x(const LocalCost<Scalar>& c, const Vector<Scalar>& x, const Vector<Scalar>& y) {
  detail::check_dims(c, x.size(), y.size());
  return grad_g(c, x) + c.P.transpose() * y;
}

/// ∇ᵧ f_i = P x − ∇h_i(y).
template <typename Scalar>
Vector<Scalar> grad_y(const LocalCost<Scalar>& c, const Vector<Scalar>& x, const Vector<Scalar>& y) {
  detail::check_dims(c, x.size(), y.size());
  return c.P * x - grad_h(c, y);
}

/// Same oracles evaluated with a substitute coupling matrix (the node's
/// current consensus estimate of P̄).
template <typename Scalar>
Vector<Scalar> grad_x(const LocalCost<Scalar>& c, const Matrix<Scalar>& coupling,
                      const Vector<Scalar>& x, const Vector<Scalar>& y) {
  detail::check_dims(c, x.size(), y.size());
  return grad_g(c, x) + coupling.transpose() * y;
}

template <typename Scalar>
Vector<Scalar> grad_y(const LocalCost<Scalar>& c, const Matrix<Scalar>& coupling,
                      const Vector<Scalar>& x, const Vector<Scalar>& y) {
  detail::check_dims(c, x.size(), y.size());
  return coupling * x - grad_h(c, y);
}

template <typename Scalar>
struct SaddleProblem {
  CostKind kind = CostKind::quadratic;
  std::vector<LocalCost<Scalar>> locals;
  Index px = 0;
  Index py = 0;

  // Network averages. Q_bar and R_bar are the raw averages; gradients use
  // their symmetrized versions Q_sym = Q_bar + Q_barᵀ, R_sym = R_bar + R_barᵀ.
  Matrix<Scalar> P_bar;
  Matrix<Scalar> Q_bar;
  Matrix<Scalar> R_bar;
  Matrix<Scalar> Q_sym;
  Matrix<Scalar> R_sym;
  Vector<Scalar> q_bar;
  Vector<Scalar> r_bar;

  Vector<Scalar> x_star;
  Vector<Scalar> y_star;

  Index n() const { return static_cast<Index>(locals.size()); }

  bool quadratic() const {
    for (const auto& c : locals)
      if (!c.quadratic()) return false;
    return true;
  }

  /// ∇G(x) = (1/n) Σ ∇g_i(x).
  Vector<Scalar> grad_G(const Vector<Scalar>& x) const {
    Vector<Scalar> g = Q_sym * x + q_bar;
    for (const auto& c : locals) {
      if (c.smooth_scale == Scalar(0)) continue;
      for (Index j = 0; j < px; ++j)
        g(j) += c.smooth_scale * std::tanh(c.smooth_sharpness * x(j) / 2) / Scalar(n());
    }
    return g;
  }

  Matrix<Scalar> hess_G(const Vector<Scalar>& x) const {
    Matrix<Scalar> h = Q_sym;
    for (const auto& c : locals) {
      if (c.smooth_scale == Scalar(0)) continue;
      const Scalar t = c.smooth_sharpness;
      for (Index j = 0; j < px; ++j) {
        const Scalar th = std::tanh(t * x(j) / 2);
        h(j, j) += c.smooth_scale * t / 2 * (1 - th * th) / Scalar(n());
      }
    }
    return h;
  }

  Vector<Scalar> grad_H(const Vector<Scalar>& y) const { return R_sym * y + r_bar; }

  /// ∇ₓF and ∇ᵧF of the global cost F = (1/n) Σ f_i.
  Vector<Scalar> grad_x(const Vector<Scalar>& x, const Vector<Scalar>& y) const {
    return grad_G(x) + P_bar.transpose() * y;
  }
  Vector<Scalar> grad_y(const Vector<Scalar>& x, const Vector<Scalar>& y) const {
    return P_bar * x - grad_H(y);
  }

  bool full_column_rank() const {
    if (py < px) return false;
    Eigen::JacobiSVD<Matrix<Scalar>> svd(P_bar);
    const auto& s = svd.singularValues();
    return s(s.size() - 1) > Scalar(1e-10) * std::max(s(0), Scalar(1));
  }
};

/// Unique y with ∇H(y) = z, i.e. ∇H*(z).
template <typename Scalar>
Vector<Scalar> grad_H_star(const SaddleProblem<Scalar>& p, const Vector<Scalar>& z) {
  if (z.size() != p.py) throw InvalidParameter("grad_H_star: dimension mismatch");
  Eigen::LLT<Matrix<Scalar>> llt(p.R_sym);
  if (llt.info() != Eigen::Success || symmetric_min_eigenvalue(p.R_sym) <= Scalar(0))
    throw AssumptionViolation(1, "H is not strongly convex, ∇H is not invertible");
  return llt.solve(z - p.r_bar);
}

namespace detail {

template <typename Scalar>
Scalar stationarity_residual(const SaddleProblem<Scalar>& p, const Vector<Scalar>& x,
                             const Vector<Scalar>& y) {
  return std::max(p.grad_x(x, y).norm(), p.grad_y(x, y).norm());
}

template <typename Scalar>
std::pair<Vector<Scalar>, Vector<Scalar>> solve_kkt(const SaddleProblem<Scalar>& p) {
  const Index m = p.px + p.py;
  Matrix<Scalar> k(m, m);
  k << p.Q_sym, p.P_bar.transpose(), p.P_bar, -p.R_sym;
  Vector<Scalar> rhs(m);
  rhs << -p.q_bar, p.r_bar;
  Vector<Scalar> z = k.completeOrthogonalDecomposition().solve(rhs);
  return {z.head(p.px), z.tail(p.py)};
}

// Damped Newton on the stacked first-order conditions; used when G carries
// the smooth log-cosh term.
template <typename Scalar>
std::pair<Vector<Scalar>, Vector<Scalar>> newton_saddle(const SaddleProblem<Scalar>& p) {
  const Index m = p.px + p.py;
  Vector<Scalar> z = Vector<Scalar>::Zero(m);
  auto residual = [&](const Vector<Scalar>& zz) {
    Vector<Scalar> f(m);
    f << p.grad_x(zz.head(p.px), zz.tail(p.py)), p.grad_y(zz.head(p.px), zz.tail(p.py));
    return f;
  };
  Vector<Scalar> f = residual(z);
  for (int it = 0; it < 200 && f.norm() > Scalar(1e-15); ++it) {
    Matrix<Scalar> j(m, m);
    j << p.hess_G(z.head(p.px)), p.P_bar.transpose(), p.P_bar, -p.R_sym;
    const Vector<Scalar> step = j.fullPivLu().solve(-f);
    Scalar t = 1;
    Vector<Scalar> trial = z + step;
    Vector<Scalar> ft = residual(trial);
    while (ft.norm() >= f.norm() && t > Scalar(1e-8)) {
      t /= 2;
      trial = z + t * step;
      ft = residual(trial);
    }
    if (ft.norm() >= f.norm()) break;
    z = trial;
    f = ft;
  }
  return {z.head(p.px), z.tail(p.py)};
}

}  // namespace detail

/// Saddle point of the global problem: a dense solve of the stacked
/// first-order conditions for quadratic costs, damped Newton otherwise.
template <typename Scalar>
std::pair<Vector<Scalar>, Vector<Scalar>> reference_saddle(const SaddleProblem<Scalar>& p) {
  auto sol = p.quadratic() ? detail::solve_kkt(p) : detail::newton_saddle(p);
  const Scalar res = detail::stationarity_residual(p, sol.first, sol.second);
  if (!std::isfinite(res) || res > Scalar(1e-10))
    throw ReferenceFailure("reference saddle residual " + std::to_string(double(res)) +
                           " exceeds 1e-10");
  return sol;
}

/// Centralized simultaneous GDA with exact gradients. Slow; kept as an
/// iterative cross-check for the direct solvers above.
template <typename Scalar>
std::pair<Vector<Scalar>, Vector<Scalar>> reference_saddle_gda(const SaddleProblem<Scalar>& p,
                                                               Scalar alpha, Scalar beta,
                                                               Scalar tol = 1e-14,
                                                               std::size_t max_iters = 10000000) {
  Vector<Scalar> x = Vector<Scalar>::Zero(p.px);
  Vector<Scalar> y = Vector<Scalar>::Zero(p.py);
  for (std::size_t k = 0; k < max_iters; ++k) {
    const Vector<Scalar> gx = p.grad_x(x, y);
    const Vector<Scalar> gy = p.grad_y(x, y);
    const Scalar joint = std::sqrt(gx.squaredNorm() + gy.squaredNorm());
    if (!std::isfinite(joint)) throw ReferenceFailure("centralized GDA diverged");
    if (joint <= tol) return {x, y};
    x -= alpha * gx;
    y += beta * gy;
  }
  throw ReferenceFailure("centralized GDA did not reach the gradient tolerance");
}

/// Builds a problem from explicit local costs: computes averages and the
/// reference saddle. Validates the coupling rank unless `allow_rank_deficient`
/// (regression with a strongly convex regularizer keeps a unique saddle
/// without it).
template <typename Scalar>
SaddleProblem<Scalar> make_problem(CostKind kind, std::vector<LocalCost<Scalar>> locals,
                                   bool allow_rank_deficient = false) {
  if (locals.empty()) throw InvalidParameter("a problem needs at least one node");
  SaddleProblem<Scalar> p;
  p.kind = kind;
  p.px = locals.front().px();
  p.py = locals.front().py();
  if (p.px < 1 || p.py < 1) throw InvalidParameter("dimensions must be positive");
  for (const auto& c : locals) {
    if (c.px() != p.px || c.py() != p.py || c.Q.rows() != p.px || c.Q.cols() != p.px ||
        c.q.size() != p.px || c.R.rows() != p.py || c.R.cols() != p.py || c.r.size() != p.py)
      throw InvalidParameter("local cost dimensions are inconsistent");
  }
  p.locals = std::move(locals);
  const Scalar inv_n = Scalar(1) / Scalar(p.n());
  p.P_bar = Matrix<Scalar>::Zero(p.py, p.px);
  p.Q_bar = Matrix<Scalar>::Zero(p.px, p.px);
  p.R_bar = Matrix<Scalar>::Zero(p.py, p.py);
  p.q_bar = Vector<Scalar>::Zero(p.px);
  p.r_bar = Vector<Scalar>::Zero(p.py);
  for (const auto& c : p.locals) {
    p.P_bar += c.P;
    p.Q_bar += c.Q;
    p.R_bar += c.R;
    p.q_bar += c.q;
    p.r_bar += c.r;
  }
  p.P_bar *= inv_n;
  p.Q_bar *= inv_n;
  p.R_bar *= inv_n;
  p.q_bar *= inv_n;
  p.r_bar *= inv_n;
  p.Q_sym = symmetrized(p.Q_bar);
  p.R_sym = symmetrized(p.R_bar);

  if (!allow_rank_deficient && !p.full_column_rank())
    throw AssumptionViolation(3, "P_bar does not have full column rank");

  auto [xs, ys] = reference_saddle(p);
  p.x_star = std::move(xs);
  p.y_star = std::move(ys);
  return p;
}

template <typename Scalar>
struct ProblemConstants {
  Scalar L1 = 0;  // max over nodes of the smoothness of g_i
  Scalar L2 = 0;  // max over nodes of the smoothness of h_i
  Scalar L = 0;
  Scalar mu = 0;  // strong convexity of H
  Scalar sigma_M = 0;
  Scalar sigma_m = 0;
  Scalar kappa = 0;
  Scalar gamma = 0;
  Scalar tau = 0;         // ‖P⁰ − W∞P⁰‖ over the stacked local couplings
  Scalar tau_mean = 0;    // (1/n) Σ ‖P_i − P̄‖
};

/// Smoothness, strong-convexity and coupling constants.
///
/// L1 and L2 are taken over the local functions (each g_i is L1-smooth, each
/// h_i is L2-smooth), μ and the singular values over the network averages.
template <typename Scalar>
ProblemConstants<Scalar> aggregate_constants(const SaddleProblem<Scalar>& p,
                                             bool require_strong_concavity = true) {
  ProblemConstants<Scalar> c;
  for (const auto& lc : p.locals) {
    Scalar l1 = spectral_norm(symmetrized(lc.Q));
    if (lc.smooth_scale != Scalar(0)) l1 += std::abs(lc.smooth_scale) * lc.smooth_sharpness / 2;
    c.L1 = std::max(c.L1, l1);
    c.L2 = std::max(c.L2, spectral_norm(symmetrized(lc.R)));
  }
  c.L = std::max(c.L1, c.L2);
  c.mu = symmetric_min_eigenvalue(p.R_sym);
  if (require_strong_concavity && !(c.mu > Scalar(0)))
    throw AssumptionViolation(1, "H is not strongly convex (mu = " + std::to_string(double(c.mu)) + ")");

  Eigen::JacobiSVD<Matrix<Scalar>> svd(p.P_bar);
  const auto& s = svd.singularValues();
  c.sigma_M = s(0);
  c.sigma_m = p.py >= p.px ? s(s.size() - 1) : Scalar(0);
  c.kappa = c.mu > Scalar(0) ? c.L / c.mu : std::numeric_limits<Scalar>::infinity();
  c.gamma = c.sigma_m > Scalar(0) ? c.sigma_M / c.sigma_m : std::numeric_limits<Scalar>::infinity();

  Matrix<Scalar> dev(p.n() * p.py, p.px);
  for (Index i = 0; i < p.n(); ++i) {
    dev.block(i * p.py, 0, p.py, p.px) = p.locals[static_cast<std::size_t>(i)].P - p.P_bar;
    c.tau_mean += spectral_norm(p.locals[static_cast<std::size_t>(i)].P - p.P_bar);
  }
  c.tau = spectral_norm(dev);
  c.tau_mean /= Scalar(p.n());
  return c;
}

// ---------------------------------------------------------------------------
// Problem generators
// ---------------------------------------------------------------------------

namespace detail {

class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

  double operator()() { return normal_(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  template <typename Scalar>
  Matrix<Scalar> matrix(Index rows, Index cols, double scale = 1.0) {
    Matrix<Scalar> m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = Scalar(scale * (*this)());
    return m;
  }

  // n draws shifted to have zero mean.
  template <typename Scalar>
  std::vector<Matrix<Scalar>> centered(Index n, Index rows, Index cols, double scale) {
    std::vector<Matrix<Scalar>> out;
    Matrix<Scalar> mean = Matrix<Scalar>::Zero(rows, cols);
    for (Index i = 0; i < n; ++i) {
      out.push_back(matrix<Scalar>(rows, cols, scale));
      mean += out.back();
    }
    mean /= Scalar(n);
    for (auto& m : out) m -= mean;
    return out;
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Shift the diagonal so that λ_min(M + Mᵀ) equals `floor`.
template <typename Scalar>
void shift_symmetric_part(Matrix<Scalar>& m, Scalar floor) {
  const Scalar lmin = symmetric_min_eigenvalue(symmetrized(m));
  m.diagonal().array() += (floor - lmin) / 2;
}

template <typename Scalar>
Matrix<Scalar> full_rank_coupling(Gaussian& g, Index px, Index py) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Matrix<Scalar> p = g.matrix<Scalar>(py, px, 1.0 / std::sqrt(double(px)));
    if (py < px) continue;
    Eigen::JacobiSVD<Matrix<Scalar>> svd(p);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) > Scalar(1e-3) * s(0)) return p;
  }
  throw GenerationFailure("no full-column-rank coupling matrix after 100 attempts");
}

template <typename Scalar>
Matrix<Scalar> random_spd(Gaussian& g, Index p) {
  Matrix<Scalar> a = g.matrix<Scalar>(p, p);
  return a * a.transpose() / Scalar(p) + Matrix<Scalar>::Identity(p, p);
}

}  // namespace detail

struct QuadraticSpec {
  Index px = 3;
  Index py = 3;
  Index n = 4;
  double heterogeneity = 1.0;
  std::uint64_t seed = 0;
  bool identical_coupling = false;  // heterogeneity only on g_i, h_i
};

/// Random quadratic family. Averages are drawn first so the global problem
/// depends on the seed only; each node then adds heterogeneity × a zero-mean
/// perturbation. λ_min(Q̄ + Q̄ᵀ) = λ_min(R̄ + R̄ᵀ) = 1.
template <typename Scalar = double>
SaddleProblem<Scalar> make_quadratic(const QuadraticSpec& spec) {
  if (spec.px < 1 || spec.py < 1 || spec.n < 1) throw InvalidParameter("dims and n must be >= 1");
  if (spec.heterogeneity < 0) throw InvalidParameter("heterogeneity must be >= 0");
  const Index px = spec.px, py = spec.py, n = spec.n;
  detail::Gaussian g(spec.seed);

  Matrix<Scalar> q_bar_mat = g.matrix<Scalar>(px, px, 1.0 / std::sqrt(double(px)));
  detail::shift_symmetric_part(q_bar_mat, Scalar(1));
  Matrix<Scalar> r_bar_mat = g.matrix<Scalar>(py, py, 1.0 / std::sqrt(double(py)));
  detail::shift_symmetric_part(r_bar_mat, Scalar(1));
  const Matrix<Scalar> p_bar = detail::full_rank_coupling<Scalar>(g, px, py);
  const Vector<Scalar> q_lin = g.matrix<Scalar>(px, 1);
  const Vector<Scalar> r_lin = g.matrix<Scalar>(py, 1);

  const double h = spec.heterogeneity;
  auto dq = g.centered<Scalar>(n, px, px, h / std::sqrt(double(px)));
  auto dr = g.centered<Scalar>(n, py, py, h / std::sqrt(double(py)));
  auto dp = g.centered<Scalar>(n, py, px, h / std::sqrt(double(px)));
  auto dql = g.centered<Scalar>(n, px, 1, h);
  auto drl = g.centered<Scalar>(n, py, 1, h);

  std::vector<LocalCost<Scalar>> locals;
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    LocalCost<Scalar> c;
    c.Q = q_bar_mat + dq[k];
    c.q = q_lin + dql[k];
    c.R = r_bar_mat + dr[k];
    c.r = r_lin + drl[k];
    c.P = spec.identical_coupling ? p_bar : Matrix<Scalar>(p_bar + dp[k]);
    locals.push_back(std::move(c));
  }
  return make_problem(CostKind::quadratic, std::move(locals));
}

template <typename Scalar = double>
SaddleProblem<Scalar> make_quadratic(Index px, Index py, Index n, double heterogeneity,
                                     std::uint64_t seed) {
  return make_quadratic<Scalar>(QuadraticSpec{px, py, n, heterogeneity, seed, false});
}

enum class Regularizer { strong, convex_schmidt };

struct RegressionSpec {
  Regularizer regularizer = Regularizer::strong;
  Index px = 10;
  Index py = 4;
  Index n = 8;
  double heterogeneity = 1.0;
  std::uint64_t seed = 0;
  double reg_scale = 1.0;
  bool identical_coupling = false;
};

/// Weighted regression in saddle form,
///   F(x, y) = G(x) − ⟨y, Āx⟩ + ⟨y, b⟩ − ½‖y‖²_C,
/// with G(x) = reg_scale · xᵀSx (strong) or the averaged log-cosh penalty
/// (1/n) Σ_i reg_scale · (1/t_i)[log(1+e^{t_i x_j}) + log(1+e^{−t_i x_j})]
/// summed over coordinates, t_i log-uniform in [0.1, 10]. Every C_i is SPD.
template <typename Scalar = double>
SaddleProblem<Scalar> make_regression(const RegressionSpec& spec) {
  if (spec.px < 1 || spec.py < 1 || spec.n < 1) throw InvalidParameter("dims and n must be >= 1");
  if (spec.heterogeneity < 0) throw InvalidParameter("heterogeneity must be >= 0");
  const Index px = spec.px, py = spec.py, n = spec.n;
  detail::Gaussian g(spec.seed);

  const Matrix<Scalar> a_bar = g.matrix<Scalar>(py, px, 1.0 / std::sqrt(double(px)));
  const Vector<Scalar> b_bar = g.matrix<Scalar>(py, 1);
  const Matrix<Scalar> c_bar = detail::random_spd<Scalar>(g, py);
  const Matrix<Scalar> s_bar = detail::random_spd<Scalar>(g, px);

  const double h = spec.heterogeneity;
  auto da = g.centered<Scalar>(n, py, px, h / std::sqrt(double(px)));
  auto db = g.centered<Scalar>(n, py, 1, h);
  auto ds = g.centered<Scalar>(n, px, px, 0.5 * h / std::sqrt(double(px)));
  for (auto& m : ds) m = (m + m.transpose().eval()) / 2;

  std::vector<Matrix<Scalar>> c_local;
  for (int attempt = 0;; ++attempt) {
    if (attempt == 100) throw GenerationFailure("could not draw SPD local C_i in 100 attempts");
    auto dc = g.centered<Scalar>(n, py, py, 0.5 * h / std::sqrt(double(py)));
    c_local.clear();
    bool spd = true;
    for (auto& m : dc) {
      c_local.push_back(c_bar + (m + m.transpose()) / 2);
      spd = spd && symmetric_min_eigenvalue(c_local.back()) > Scalar(1e-3);
    }
    if (spd) break;
  }

  std::vector<LocalCost<Scalar>> locals;
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    auto c = LocalCost<Scalar>::zeros(px, py);
    c.P = -(spec.identical_coupling ? a_bar : Matrix<Scalar>(a_bar + da[k]));
    c.R = c_local[k] / 2;
    c.r = -(b_bar + db[k]);
    if (spec.regularizer == Regularizer::strong) {
      c.Q = Scalar(spec.reg_scale) * (s_bar + ds[k]);
    } else {
      c.smooth_scale = Scalar(spec.reg_scale);
      c.smooth_sharpness = Scalar(std::exp(g.uniform(std::log(0.1), std::log(10.0))));
    }
    locals.push_back(std::move(c));
  }
  const CostKind kind = spec.regularizer == Regularizer::strong ? CostKind::regression_strong
                                                                : CostKind::regression_convex;
  // G's own curvature makes the saddle unique even when p_y < p_x.
  return make_problem(kind, std::move(locals), spec.reg_scale > 0);
}

struct ConstrainedSpec {
  Index px = 3;
  Index py = 3;
  Index n = 4;
  double heterogeneity = 1.0;
  std::uint64_t seed = 0;
};

/// min G(x) s.t. P̄x = b in Lagrangian form: h_i(y) = ⟨b_i, y⟩, so H is
/// linear (μ = 0). b is placed in the range of P̄ so the constraint is
/// feasible. Outside the strongly-concave setting; demonstration only.
template <typename Scalar = double>
SaddleProblem<Scalar> make_constrained(const ConstrainedSpec& spec) {
  if (spec.px < 1 || spec.py < 1 || spec.n < 1) throw InvalidParameter("dims and n must be >= 1");
  if (spec.py < spec.px) throw InvalidParameter("constrained problems need p_y >= p_x");
  const Index px = spec.px, py = spec.py, n = spec.n;
  detail::Gaussian g(spec.seed);

  Matrix<Scalar> q_bar_mat = g.matrix<Scalar>(px, px, 1.0 / std::sqrt(double(px)));
  detail::shift_symmetric_part(q_bar_mat, Scalar(1));
  const Matrix<Scalar> p_bar = detail::full_rank_coupling<Scalar>(g, px, py);
  const Vector<Scalar> q_lin = g.matrix<Scalar>(px, 1);
  const Vector<Scalar> x_feasible = g.matrix<Scalar>(px, 1);

  const double h = spec.heterogeneity;
  auto dq = g.centered<Scalar>(n, px, px, h / std::sqrt(double(px)));
  auto dp = g.centered<Scalar>(n, py, px, h / std::sqrt(double(px)));
  auto dql = g.centered<Scalar>(n, px, 1, h);

  std::vector<LocalCost<Scalar>> locals;
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    auto c = LocalCost<Scalar>::zeros(px, py);
    c.Q = q_bar_mat + dq[k];
    c.q = q_lin + dql[k];
    c.P = p_bar + dp[k];
    c.r = c.P * x_feasible;  // averages to P̄ x_feasible
    locals.push_back(std::move(c));
  }
  return make_problem(CostKind::constrained, std::move(locals));
}

}  // namespace gtgda
