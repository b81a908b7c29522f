#pragma once

#include "gtgda/linalg.hpp"
#include "gtgda/types.hpp"

#include <cmath>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gtgda {

enum class TopologyKind { exponential, ring, complete };

inline std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::exponential: return "exponential";
    case TopologyKind::ring: return "ring";
    case TopologyKind::complete: return "complete";
  }
  return "unknown";
}

inline TopologyKind topology_kind_from_string(std::string_view s) {
  if (s == "exponential") return TopologyKind::exponential;
  if (s == "ring") return TopologyKind::ring;
  if (s == "complete") return TopologyKind::complete;
  throw InvalidParameter("unknown topology kind '" + std::string(s) + "'");
}

/// Directed communication graph. An edge (i, r) means node r sends to node i.
struct Topology {
  TopologyKind kind = TopologyKind::exponential;
  Index n = 0;
  std::vector<Index> offsets;  // circulant offsets (i - r) mod n, sorted
  std::set<std::pair<Index, Index>> edges;

  bool has_edge(Index i, Index r) const { return edges.count({i, r}) != 0; }

  Index in_degree(Index i) const {
    Index d = 0;
    for (Index r = 0; r < n; ++r) d += has_edge(i, r) ? 1 : 0;
    return d;
  }

  Index out_degree(Index r) const {
    Index d = 0;
    for (Index i = 0; i < n; ++i) d += has_edge(i, r) ? 1 : 0;
    return d;
  }

  bool strongly_connected() const {
    if (n == 0) return false;
    auto reach = [&](bool forward) {
      std::vector<bool> seen(static_cast<std::size_t>(n), false);
      std::vector<Index> stack{0};
      seen[0] = true;
      while (!stack.empty()) {
        Index v = stack.back();
        stack.pop_back();
        for (const auto& [i, r] : edges) {
          Index from = forward ? r : i;
          Index to = forward ? i : r;
          if (from == v && !seen[static_cast<std::size_t>(to)]) {
            seen[static_cast<std::size_t>(to)] = true;
            stack.push_back(to);
          }
        }
      }
      for (bool s : seen)
        if (!s) return false;
      return true;
    };
    return reach(true) && reach(false);
  }
};

/// Circulant topologies: exponential uses offsets {0} ∪ {2^j mod n},
/// ring uses {0, 1}, complete uses every offset.
inline Topology build_topology(TopologyKind kind, Index n) {
  if (n < 1) throw InvalidParameter("topology needs n >= 1");
  if (kind == TopologyKind::ring && n < 2) throw InvalidParameter("ring topology needs n >= 2");

  std::set<Index> offs{0};
  switch (kind) {
    case TopologyKind::exponential: {
      Index steps = 0;
      while ((Index{1} << steps) < n) ++steps;  // ceil(log2 n)
      for (Index j = 0; j < steps; ++j) offs.insert((Index{1} << j) % n);
      break;
    }
    case TopologyKind::ring:
      offs.insert(1 % n);
      break;
    case TopologyKind::complete:
      for (Index k = 0; k < n; ++k) offs.insert(k);
      break;
  }

  Topology t;
  t.kind = kind;
  t.n = n;
  t.offsets.assign(offs.begin(), offs.end());
  for (Index i = 0; i < n; ++i)
    for (Index off : t.offsets) t.edges.insert({i, ((i - off) % n + n) % n});
  return t;
}

/// Spectral norm of W − W∞ by power iteration on (W − W∞)ᵀ(W − W∞).
///
/// The start vector is a normalized ramp: the all-ones vector lies in the
/// kernel of W − W∞ and would terminate the iteration at zero.
template <typename Derived>
typename Derived::Scalar spectral_gap(const Eigen::MatrixBase<Derived>& w,
                                      typename Derived::Scalar rel_tol = 1e-12,
                                      std::size_t max_iters = 10000) {
  using Scalar = typename Derived::Scalar;
  const Index n = w.rows();
  if (w.cols() != n) throw InvalidParameter("spectral_gap needs a square matrix");
  const Matrix<Scalar> d = w - averaging_matrix<Scalar>(n);
  const Matrix<Scalar> gram = d.transpose() * d;

  Vector<Scalar> v(n);
  for (Index i = 0; i < n; ++i) v(i) = Scalar(i + 1);
  v.normalize();

  Scalar estimate = 0;
  for (std::size_t it = 1; it <= max_iters; ++it) {
    Vector<Scalar> next = gram * v;
    const Scalar norm = next.norm();
    if (norm == Scalar(0)) return Scalar(0);
    const Scalar rayleigh = v.dot(next);
    v = next / norm;
    if (it > 1 && std::abs(rayleigh - estimate) <= rel_tol * std::abs(rayleigh)) {
      return std::sqrt(std::max(rayleigh, Scalar(0)));
    }
    estimate = rayleigh;
  }
  throw NumericFailure("spectral_gap power iteration did not converge", max_iters);
}

template <typename Scalar>
struct WeightMatrix {
  Matrix<Scalar> W;
  Scalar lambda = 0;  // ‖W − W∞‖₂, cached at construction

  Index n() const { return W.rows(); }
};

/// Uniform weights 1/d over each node's in-neighbourhood (self-loop
/// included). Doubly stochastic only when every node has the same in- and
/// out-degree, which holds for the circulant topologies built above.
template <typename Scalar = double>
WeightMatrix<Scalar> make_weights(const Topology& t) {
  if (t.n < 1) throw InvalidParameter("empty topology");
  const Index d = t.in_degree(0);
  for (Index i = 0; i < t.n; ++i) {
    if (t.in_degree(i) != d || t.out_degree(i) != d)
      throw UnsupportedTopology("uniform weights need equal in/out degree at every node");
    if (!t.has_edge(i, i)) throw UnsupportedTopology("every node needs a self-loop");
  }
  if (!t.strongly_connected()) throw UnsupportedTopology("topology is not strongly connected");

  WeightMatrix<Scalar> out;
  out.W = Matrix<Scalar>::Zero(t.n, t.n);
  for (const auto& [i, r] : t.edges) out.W(i, r) = Scalar(1) / Scalar(d);
  // The Rayleigh-change test stops short of the true value by about
  // change·r/(1−r); a tight tolerance keeps λᵏ an upper bound for k ≤ 20.
  out.lambda = spectral_gap(out.W, Scalar(1e-15), 100000);
  return out;
}

}  // namespace gtgda
