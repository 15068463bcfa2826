#pragma once

// Curves in a metric space, their lengths and the weighted functionals.
//
// Points are flat Eigen vectors. Two ambient spaces are supported: R^n with
// the Euclidean norm, and a uniform 1D grid carrying n-component values with
// the grid-weighted L2 norm h * sum_j |v_j|^2. Both are diagonal metrics, so
// every routine below only needs the per-coordinate weights.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hetcon/errors.hpp"

namespace hetcon {

using Point = Eigen::VectorXd;
using Index = Eigen::Index;

/// Sentinel for an infinite weight. Any weighted product that meets it is
/// infinite, including the product with a zero length.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline double weighted_product(double weight, double length) {
  if (std::isinf(weight)) return kInfinity;
  if (length == 0.0) return 0.0;
  return weight * length;
}

class AmbientSpace {
 public:
  enum class Kind { euclidean, grid_l2 };

  static AmbientSpace euclidean(Index dim) {
    detail::require(dim >= 1, "euclidean space needs dim >= 1");
    AmbientSpace s;
    s.kind_ = Kind::euclidean;
    s.components_ = dim;
    s.grid_points_ = 1;
    s.spacing_ = 1.0;
    s.weights_ = Eigen::VectorXd::Ones(dim);
    return s;
  }

  /// Values of an n-component function at `grid_points` window nodes with
  /// spacing h, stored node-major (index j * n + c).
  static AmbientSpace grid_l2(Index grid_points, Index components, double spacing) {
    detail::require(grid_points >= 1 && components >= 1, "grid space needs points and components");
    detail::require(spacing > 0.0, "grid spacing must be positive");
    AmbientSpace s;
    s.kind_ = Kind::grid_l2;
    s.components_ = components;
    s.grid_points_ = grid_points;
    s.spacing_ = spacing;
    s.weights_ = Eigen::VectorXd::Constant(grid_points * components, spacing);
    return s;
  }

  Kind kind() const { return kind_; }
  Index dim() const { return weights_.size(); }
  Index components() const { return components_; }
  Index grid_points() const { return grid_points_; }
  double spacing() const { return spacing_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  bool same_as(const AmbientSpace& o) const {
    return kind_ == o.kind_ && components_ == o.components_ && grid_points_ == o.grid_points_ &&
           spacing_ == o.spacing_;
  }

  void check(const Point& p) const {
    if (p.size() != dim())
      throw InvalidArgument("point of dimension " + std::to_string(p.size()) +
                            " does not belong to a space of dimension " + std::to_string(dim()));
  }

  double inner(const Point& a, const Point& b) const {
    check(a);
    check(b);
    return (a.array() * weights_.array() * b.array()).sum();
  }
  double norm(const Point& v) const { return std::sqrt(inner(v, v)); }
  double distance(const Point& a, const Point& b) const {
    check(a);
    check(b);
    return std::sqrt(((a - b).array().square() * weights_.array()).sum());
  }

 private:
  AmbientSpace() = default;

  Kind kind_ = Kind::euclidean;
  Index components_ = 1;
  Index grid_points_ = 1;
  double spacing_ = 1.0;
  Eigen::VectorXd weights_;
};

/// A curve stored as ordered (time, point) nodes, affine between nodes.
class SampledCurve {
 public:
  SampledCurve(std::vector<double> times, std::vector<Point> nodes)
      : times_(std::move(times)), nodes_(std::move(nodes)) {
    detail::require(times_.size() == nodes_.size(), "curve needs one time per node");
    detail::require(nodes_.size() >= 2, "curve needs at least two nodes");
    for (std::size_t i = 1; i < times_.size(); ++i) {
      if (!(times_[i] > times_[i - 1]))
        throw InvalidArgument("curve times must be strictly increasing (index " +
                              std::to_string(i) + ")");
      if (nodes_[i].size() != nodes_[0].size())
        throw InvalidArgument("curve nodes must share one dimension");
    }
  }

  /// Nodes spaced uniformly on [t0, t1].
  static SampledCurve uniform(std::vector<Point> nodes, double t0 = 0.0, double t1 = 1.0) {
    detail::require(nodes.size() >= 2, "curve needs at least two nodes");
    std::vector<double> t(nodes.size());
    const double n = static_cast<double>(nodes.size() - 1);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = t0 + (t1 - t0) * static_cast<double>(i) / n;
    t.back() = t1;
    return SampledCurve(std::move(t), std::move(nodes));
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t segments() const { return nodes_.size() - 1; }
  Index dim() const { return nodes_.front().size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Point>& nodes() const { return nodes_; }
  const Point& node(std::size_t i) const { return nodes_[i]; }
  double time(std::size_t i) const { return times_[i]; }
  double t0() const { return times_.front(); }
  double t1() const { return times_.back(); }
  const Point& front() const { return nodes_.front(); }
  const Point& back() const { return nodes_.back(); }

  /// Affine interpolation; constant extension outside [t0, t1].
  Point evaluate(double t) const {
    if (t <= times_.front()) return nodes_.front();
    if (t >= times_.back()) return nodes_.back();
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
    const double lam = (t - times_[i]) / (times_[i + 1] - times_[i]);
    return (1.0 - lam) * nodes_[i] + lam * nodes_[i + 1];
  }

  void check_in(const AmbientSpace& space) const {
    for (const auto& p : nodes_) space.check(p);
  }

 private:
  std::vector<double> times_;
  std::vector<Point> nodes_;
};

/// An ambient space with a nonnegative weight K and its declared zero set.
struct WeightedSpace {
  AmbientSpace space;
  std::function<double(const Point&)> weight;
  /// Partial derivatives of K in raw coordinates. Optional; central
  /// differences are used when empty.
  std::function<Point(const Point&)> weight_gradient;
  std::vector<Point> zeros;

  double operator()(const Point& x) const {
    const double k = weight(x);
    if (std::isnan(k)) throw InvalidArgument("weight evaluated to NaN");
    return k;
  }

  Point gradient(const Point& x) const {
    if (weight_gradient) return weight_gradient(x);
    Point g(x.size());
    Point xp = x;
    for (Index i = 0; i < x.size(); ++i) {
      const double step = 1e-6 * std::max(1.0, std::abs(x[i]));
      xp[i] = x[i] + step;
      const double fp = weight(xp);
      xp[i] = x[i] - step;
      const double fm = weight(xp);
      xp[i] = x[i];
      g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
  }
};

/// Metric derivative |γ̇| on each segment: d(node_{i+1}, node_i) / Δt.
inline std::vector<double> metric_derivative(const SampledCurve& curve, const AmbientSpace& space) {
  curve.check_in(space);
  std::vector<double> out(curve.segments());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = space.distance(curve.node(i + 1), curve.node(i)) / (curve.time(i + 1) - curve.time(i));
  return out;
}

inline std::vector<double> segment_lengths(const SampledCurve& curve, const AmbientSpace& space) {
  curve.check_in(space);
  std::vector<double> out(curve.segments());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = space.distance(curve.node(i + 1), curve.node(i));
  return out;
}

inline double length_d(const SampledCurve& curve, const AmbientSpace& space) {
  double total = 0.0;
  for (double l : segment_lengths(curve, space)) total += l;
  return total;
}

enum class Quadrature { midpoint, min_endpoint, simpson };

namespace detail {

inline std::vector<double> node_weights(const SampledCurve& curve, const WeightedSpace& ws) {
  std::vector<double> k(curve.size());
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = ws(curve.node(i));
  return k;
}

// Σ (min of K over nodes [idx_k, idx_{k+1}]) * d(node_{idx_k}, node_{idx_{k+1}}).
// k_length(min_endpoint) and a_k_functional share this loop so that the finest
// subdivision reproduces the quadrature bit for bit.
inline double subdivision_sum(const SampledCurve& curve, const AmbientSpace& space,
                              const std::vector<double>& k, std::span<const std::size_t> idx) {
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < idx.size(); ++s) {
    double kmin = k[idx[s]];
    for (std::size_t j = idx[s] + 1; j <= idx[s + 1]; ++j) kmin = std::min(kmin, k[j]);
    total += weighted_product(kmin, space.distance(curve.node(idx[s]), curve.node(idx[s + 1])));
  }
  return total;
}

inline std::vector<std::size_t> finest_subdivision(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace detail

/// Weighted length ∫ K(γ)|γ̇|. The midpoint rule evaluates K at segment
/// midpoints; the min-endpoint rule is the lower quadrature matching A_K.
inline double k_length(const SampledCurve& curve, const WeightedSpace& ws,
                       Quadrature rule = Quadrature::midpoint) {
  curve.check_in(ws.space);
  if (rule == Quadrature::min_endpoint) {
    const auto k = detail::node_weights(curve, ws);
    const auto idx = detail::finest_subdivision(curve.size());
    return detail::subdivision_sum(curve, ws.space, k, idx);
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const Point mid = 0.5 * (curve.node(i) + curve.node(i + 1));
    double k = ws(mid);
    if (rule == Quadrature::simpson) k = (ws(curve.node(i)) + 4.0 * k + ws(curve.node(i + 1))) / 6.0;
    total += weighted_product(k, ws.space.distance(curve.node(i), curve.node(i + 1)));
  }
  return total;
}

/// Discrete A_K over a subdivision given as increasing node indices.
inline double a_k_functional(const SampledCurve& curve, const WeightedSpace& ws,
                             std::span<const std::size_t> subdivision) {
  curve.check_in(ws.space);
  if (subdivision.size() < 2) throw InvalidArgument("A_K needs a subdivision with at least two indices");
  for (std::size_t s = 0; s < subdivision.size(); ++s) {
    if (subdivision[s] >= curve.size()) throw InvalidArgument("subdivision index out of range");
    if (s > 0 && subdivision[s] <= subdivision[s - 1])
      throw InvalidArgument("subdivision indices must be strictly increasing");
  }
  const auto k = detail::node_weights(curve, ws);
  return detail::subdivision_sum(curve, ws.space, k, subdivision);
}

enum class ArcMetric { d, d_k_wedge_1 };

/// Per-segment lengths in d or in d_{K∧1} (midpoint weight min(K,1)).
inline std::vector<double> arc_lengths(const SampledCurve& curve, const WeightedSpace& ws, ArcMetric metric) {
  auto len = segment_lengths(curve, ws.space);
  if (metric == ArcMetric::d_k_wedge_1) {
    for (std::size_t i = 0; i < len.size(); ++i) {
      if (len[i] == 0.0) continue;
      const Point mid = 0.5 * (curve.node(i) + curve.node(i + 1));
      // A segment whose midpoint sits on a zero of K keeps a tiny positive
      // length so that times stay strictly increasing.
      len[i] *= std::max(std::min(ws(mid), 1.0), 1e-12);
    }
  }
  return len;
}

/// Reassigns times on [0, 1] proportional to cumulative arc length in the
/// chosen metric. Nodes are kept; exact duplicates of the previous node are
/// dropped since they cannot carry a positive time step.
inline SampledCurve reparametrize_constant_speed(const SampledCurve& curve, const WeightedSpace& ws,
                                                 ArcMetric metric = ArcMetric::d) {
  const auto len = arc_lengths(curve, ws, metric);
  double total = 0.0;
  for (double l : len) total += l;
  if (!(total > 0.0)) throw InvalidArgument("cannot reparametrize a curve of zero length");
  std::vector<Point> nodes{curve.front()};
  std::vector<double> times{0.0};
  double acc = 0.0;
  for (std::size_t i = 0; i < len.size(); ++i) {
    if (len[i] == 0.0) continue;
    acc += len[i];
    nodes.push_back(curve.node(i + 1));
    times.push_back(acc / total);
  }
  times.back() = 1.0;
  return SampledCurve(std::move(times), std::move(nodes));
}

struct DkLowerBound {
  double value = 0.0;        ///< K_r(x) * r
  double radius = 0.0;       ///< r = d(x, y)
  double min_weight = 0.0;   ///< sampled minimum of K over the closed ball
  Point argmin;
  double sampling_slack = 0.0;  ///< Lipschitz-based bound on what sampling may have missed
};

namespace detail {

inline double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

inline constexpr std::uint64_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

// Deterministic points of the closed unit ball (in the space's own norm),
// half on the boundary sphere. 1D uses an equispaced grid including ±1.
inline std::vector<Point> ball_samples(const AmbientSpace& space, int count) {
  const Index n = space.dim();
  std::vector<Point> pts;
  if (n == 1) {
    for (int k = 0; k < count; ++k) {
      Point p(1);
      p[0] = count == 1 ? 0.0 : -1.0 + 2.0 * k / (count - 1);
      pts.push_back(p);
    }
    return pts;
  }
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  auto raw = [&](std::uint64_t k) {
    Point p(n);
    for (Index c = 0; c < n; ++c) {
      if (n <= 16)
        p[c] = 2.0 * radical_inverse(k + 1, kPrimes[c]) - 1.0;
      else
        p[c] = normal(rng);
    }
    return p;
  };
  std::uint64_t k = 0;
  for (int s = 0; s < count; ++s) {
    Point p = raw(k++);
    const double nrm = space.norm(p);
    if (nrm == 0.0) continue;
    if (s % 2 == 0) {
      pts.push_back(p / nrm);
    } else {
      const double rad = std::pow(radical_inverse(static_cast<std::uint64_t>(s) + 1, 2),
                                  1.0 / static_cast<double>(std::min<Index>(n, 16)));
      pts.push_back(rad * p / nrm);
    }
  }
  pts.push_back(Point::Zero(n));
  return pts;
}

}  // namespace detail

/// Lower bound K_r(x) * r ≤ d_K(x, y) with r = d(x, y), K_r(x) the sampled
/// minimum of K over the closed ball B(x, r).
inline DkLowerBound dk_lower_bound(const Point& x, const Point& y, const WeightedSpace& ws, int r_samples = 257) {
  ws.space.check(x);
  ws.space.check(y);
  DkLowerBound out;
  out.radius = ws.space.distance(x, y);
  out.min_weight = ws(x);
  out.argmin = x;
  if (out.radius == 0.0) return out;
  const auto unit = detail::ball_samples(ws.space, std::max(r_samples, 2));
  const double kx = ws(x);
  double lip = 0.0;
  auto consider = [&](const Point& p) {
    const double k = ws(p);
    if (k < out.min_weight) {
      out.min_weight = k;
      out.argmin = p;
    }
    const double dist = ws.space.distance(p, x);
    if (dist > 0.0 && std::isfinite(k) && std::isfinite(kx)) lip = std::max(lip, std::abs(k - kx) / dist);
  };
  for (const auto& u : unit) consider(x + out.radius * u);
  consider(y);
  out.value = weighted_product(out.min_weight, out.radius);
  const double dim = static_cast<double>(std::min<Index>(ws.space.dim(), 16));
  out.sampling_slack = lip * out.radius * out.radius * 2.0 / std::pow(static_cast<double>(unit.size()), 1.0 / dim);
  return out;
}

}  // namespace hetcon
