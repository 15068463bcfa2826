#pragma once

// Minimization of the discrete K-length over polylines with pinned endpoints,
// loop removal at zeros of K, and adaptive node insertion.

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "hetcon/errors.hpp"
#include "hetcon/metric.hpp"
#include "hetcon/optimize.hpp"

namespace hetcon {

/// Linear embedding full = E * reduced where every column of E has entries
/// ±1. Used to optimize over a symmetric subspace.
struct Embedding {
  Eigen::SparseMatrix<double> E;
  std::vector<Index> representative;  ///< full index read back for each reduced coordinate

  Index full_dim() const { return E.rows(); }
  Index reduced_dim() const { return E.cols(); }
  Point expand(const Point& r) const { return E * r; }
  Point pullback(const Point& g) const { return E.transpose() * g; }
  Point restrict(const Point& full) const {
    Point r(reduced_dim());
    for (Index i = 0; i < r.size(); ++i) r[i] = full[representative[i]] * E.coeff(representative[i], i);
    return r;
  }
};

struct GeodesicOptions {
  int nodes = 101;
  int max_iter = 4000;
  double tol = 1e-9;
  int memory = 10;
  ArcMetric output_metric = ArcMetric::d_k_wedge_1;
  std::vector<Point> via;  ///< optional seed vertices between the endpoints
  double k_floor = 1e-8;   ///< segments with a smaller midpoint weight contribute no gradient
  /// Drop the gradient component along the local tangent. Node motion along
  /// the curve only changes the quadrature, and left free it lets a long
  /// segment centre itself on an interior zero of K.
  bool tangential_gauge = true;
  int max_rounds = 20;
  int coarse_nodes = 51;   ///< continuation starts below twice this count
  std::optional<Embedding> embedding;
  /// midpoint or simpson; Simpson suppresses zigzags across narrow valleys
  /// of K that the midpoint rule cannot see.
  Quadrature rule = Quadrature::midpoint;
};

struct GeodesicResult {
  SampledCurve curve;
  double value = 0.0;
  std::vector<double> trace;
  SolverStatus status = SolverStatus::converged;
  int iterations = 0;
  double gradient_norm = 0.0;
};

namespace detail {

// Polyline through the given vertices with `n` nodes spread by arc length.
inline std::vector<Point> seed_polyline(const std::vector<Point>& vertices, int n, const AmbientSpace& space) {
  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < vertices.size(); ++i) cum.push_back(cum.back() + space.distance(vertices[i], vertices[i - 1]));
  std::vector<Point> out;
  out.reserve(n);
  out.push_back(vertices.front());
  for (int k = 1; k + 1 < n; ++k) {
    const double target = cum.back() * k / (n - 1);
    std::size_t seg = 0;
    while (seg + 2 < vertices.size() && cum[seg + 1] < target) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double lam = len > 0.0 ? (target - cum[seg]) / len : 0.0;
    out.push_back((1.0 - lam) * vertices[seg] + lam * vertices[seg + 1]);
  }
  out.push_back(vertices.back());
  return out;
}

// K-length of the node chain (midpoint or Simpson rule per segment) and its
// gradient with respect to every node (raw coordinates).
inline double k_length_with_gradient(const std::vector<Point>& x, const WeightedSpace& ws, double k_floor,
                                     std::vector<Point>* grad, Quadrature rule = Quadrature::midpoint) {
  detail::require(rule != Quadrature::min_endpoint, "the geodesic solver needs a midpoint or Simpson rule");
  const auto& w = ws.space.weights();
  const std::size_t n = x.size();
  const bool simpson = rule == Quadrature::simpson;
  if (grad) {
    grad->assign(n, Point::Zero(x[0].size()));
  }
  std::vector<double> kn;
  if (simpson) {
    kn.resize(n);
    for (std::size_t i = 0; i < n; ++i) kn[i] = ws(x[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Point diff = x[i + 1] - x[i];
    const double len = std::sqrt((diff.array().square() * w.array()).sum());
    const Point mid = 0.5 * (x[i] + x[i + 1]);
    const double km = ws(mid);
    const double k = simpson ? (kn[i] + 4.0 * km + kn[i + 1]) / 6.0 : km;
    total += weighted_product(k, len);
    if (!grad || !(k >= k_floor) || !std::isfinite(k)) continue;
    Point gi = Point::Zero(diff.size());
    if (len > 0.0) gi = -k * (w.array() * diff.array()).matrix() / len;
    if (simpson) {
      const Point dm = (len / 3.0) * ws.gradient(mid);
      (*grad)[i] += gi + dm + (len / 6.0) * ws.gradient(x[i]);
      (*grad)[i + 1] += -gi + dm + (len / 6.0) * ws.gradient(x[i + 1]);
    } else {
      const Point half_dk = 0.5 * len * ws.gradient(mid);
      (*grad)[i] += gi + half_dk;
      (*grad)[i + 1] += -gi + half_dk;
    }
  }
  return total;
}

}  // namespace detail

/// Descent on the interior nodes of `initial`, endpoints pinned. The result
/// is reparametrized to constant speed in `opts.output_metric`.
inline GeodesicResult minimize_k_length(const WeightedSpace& ws, const SampledCurve& initial,
                                        const GeodesicOptions& opts = {}) {
  initial.check_in(ws.space);
  const Point xm = initial.front(), xp = initial.back();
  const std::size_t n = initial.size();
  const Index dim = ws.space.dim();
  const bool embedded = opts.embedding.has_value();
  const Index rdim = embedded ? opts.embedding->reduced_dim() : dim;
  if (embedded) detail::require(opts.embedding->full_dim() == dim, "embedding does not match the space");

  std::vector<Point> nodes = initial.nodes();
  const std::size_t interior = n - 2;
  Eigen::VectorXd x0(static_cast<Index>(interior) * rdim);
  for (std::size_t i = 0; i < interior; ++i)
    x0.segment(static_cast<Index>(i) * rdim, rdim) = embedded ? opts.embedding->restrict(nodes[i + 1]) : nodes[i + 1];

  auto unpack = [&](const Eigen::VectorXd& v, std::vector<Point>& out) {
    out.resize(n);
    out.front() = xm;
    out.back() = xp;
    for (std::size_t i = 0; i < interior; ++i) {
      const Point r = v.segment(static_cast<Index>(i) * rdim, rdim);
      out[i + 1] = embedded ? opts.embedding->expand(r) : r;
    }
  };

  std::vector<Point> work, grad;
  auto fg = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) {
    unpack(v, work);
    const double f = detail::k_length_with_gradient(work, ws, opts.k_floor, &grad, opts.rule);
    if (opts.tangential_gauge) {
      const auto& w = ws.space.weights();
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const Point tau = work[i + 1] - work[i - 1];
        const Point wtau = (w.array() * tau.array()).matrix();
        const double nn = tau.dot(wtau);
        if (nn > 0.0) grad[i] -= (grad[i].dot(tau) / nn) * wtau;
      }
    }
    g.resize(v.size());
    for (std::size_t i = 0; i < interior; ++i)
      g.segment(static_cast<Index>(i) * rdim, rdim) = embedded ? opts.embedding->pullback(grad[i + 1]) : grad[i + 1];
    return f;
  };

  unpack(x0, work);
  const double f0 = detail::k_length_with_gradient(work, ws, opts.k_floor, nullptr, opts.rule);
  if (!std::isfinite(f0)) throw InvalidArgument("K-length is not finite at the initial curve");

  GeodesicResult res{initial};
  if (ws.space.distance(xm, xp) == 0.0 && interior == 0) {
    res.value = 0.0;
    res.trace = {0.0};
    return res;
  }
  LbfgsOptions lo;
  lo.max_iter = opts.max_iter;
  lo.memory = opts.memory;
  lo.grad_tol = opts.tol;
  lo.rel_tol = opts.tol * 1e-3;
  // Rounds of descent separated by redistribution of the nodes at equal
  // d-arc-length. A redistribution is kept only if it does not raise the
  // energy; the rounds stop when one no longer helps.
  Eigen::VectorXd x = x0;
  double f = f0;
  res.trace = {f0};
  int used = 0;
  for (int round = 0; round < opts.max_rounds && interior > 0; ++round) {
    lo.max_iter = opts.max_iter - used;
    if (lo.max_iter <= 0) break;
    const auto opt = minimize_lbfgs(fg, x, lo);
    used += opt.iterations;
    res.trace.insert(res.trace.end(), opt.trace.begin() + 1, opt.trace.end());
    x = opt.x;
    const double before = f;
    f = opt.value;
    res.status = opt.status;
    res.iterations = used;
    res.gradient_norm = opt.grad_norm;
    if (opt.status == SolverStatus::converged && round > 0 && before - f <= opts.tol * std::max(1.0, f)) break;
    unpack(x, work);
    auto spread = detail::seed_polyline(work, static_cast<int>(n), ws.space);
    spread.front() = xm;
    spread.back() = xp;
    const double fs = detail::k_length_with_gradient(spread, ws, opts.k_floor, nullptr, opts.rule);
    if (!(fs <= f)) break;
    for (std::size_t i = 0; i < interior; ++i)
      x.segment(static_cast<Index>(i) * rdim, rdim) =
          embedded ? opts.embedding->restrict(spread[i + 1]) : spread[i + 1];
    if (f - fs <= opts.tol * std::max(1.0, f) && opt.status == SolverStatus::converged) {
      f = fs;
      res.trace.push_back(f);
      break;
    }
    f = fs;
    res.trace.push_back(f);
  }
  unpack(x, nodes);

  SampledCurve raw = SampledCurve::uniform(nodes);
  if (length_d(raw, ws.space) == 0.0) {
    res.curve = SampledCurve::uniform({xm, xp});
    res.value = 0.0;
    return res;
  }
  res.curve = reparametrize_constant_speed(raw, ws, opts.output_metric);
  res.value = k_length(res.curve, ws, opts.rule);
  return res;
}

/// Straight-line (or via-point) seed with `opts.nodes` nodes. Large node
/// counts are reached by continuation: the problem is solved on a coarse
/// polyline, which is resampled at equal arc length with about twice the
/// nodes and solved again. Trace and status refer to the final level.
inline GeodesicResult minimize_k_length(const WeightedSpace& ws, const Point& xm, const Point& xp,
                                        const GeodesicOptions& opts = {}) {
  ws.space.check(xm);
  ws.space.check(xp);
  if (ws.space.distance(xm, xp) == 0.0) {
    GeodesicResult res{SampledCurve::uniform({xm, xp})};
    res.trace = {0.0};
    return res;
  }
  detail::require(opts.nodes >= 2, "geodesic needs at least two nodes");
  std::vector<int> levels{opts.nodes};
  while (levels.back() > 2 * opts.coarse_nodes) levels.push_back((levels.back() + 1) / 2);
  std::reverse(levels.begin(), levels.end());
  std::vector<Point> verts{xm};
  for (const auto& v : opts.via) verts.push_back(v);
  verts.push_back(xp);
  std::optional<GeodesicResult> res;
  for (int n : levels) {
    const auto seed = detail::seed_polyline(res ? res->curve.nodes() : verts, n, ws.space);
    res = minimize_k_length(ws, SampledCurve::uniform(seed), opts);
  }
  return *res;
}

/// Excises the arc between the first and the last node within `hit_tol` of
/// each zero of K, left to right, keeping the original time span. A cut that
/// would increase the K-length is skipped.
inline SampledCurve remove_sigma_loops(const SampledCurve& curve, const WeightedSpace& ws, double hit_tol = 1e-6) {
  SampledCurve cur = curve;
  for (const auto& sigma : ws.zeros) {
    const auto& nodes = cur.nodes();
    std::size_t first = nodes.size(), last = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (ws.space.distance(nodes[i], sigma) <= hit_tol) {
        if (first == nodes.size()) first = i;
        last = i;
      }
    if (first == nodes.size() || last <= first) continue;
    std::vector<Point> kept(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(first) + 1);
    kept.insert(kept.end(), nodes.begin() + static_cast<std::ptrdiff_t>(last) + 1, nodes.end());
    std::vector<double> t(cur.times().begin(), cur.times().begin() + static_cast<std::ptrdiff_t>(first) + 1);
    for (std::size_t i = last + 1; i < nodes.size(); ++i) t.push_back(cur.time(i) - cur.time(last) + cur.time(first));
    if (kept.size() < 2) {
      kept = {nodes[first], nodes[last]};
      t = {cur.t0(), cur.t1()};
    }
    // Rescale affinely back onto the original span.
    const double a = cur.t0(), b = cur.t1(), ta = t.front(), tb = t.back();
    if (tb > ta)
      for (auto& ti : t) ti = a + (ti - ta) * (b - a) / (tb - ta);
    else
      t = {a, b};
    t.back() = b;
    SampledCurve cut(std::move(t), std::move(kept));
    if (k_length(cut, ws) <= k_length(cur, ws)) cur = std::move(cut);
  }
  return cur;
}

/// Splits the segments with the largest K(mid)·d contribution at their
/// midpoints until the curve has `target` nodes.
inline SampledCurve refine_nodes(const SampledCurve& curve, const WeightedSpace& ws, std::size_t target) {
  detail::require(target >= curve.size(), "refine_nodes cannot reduce the node count");
  if (target == curve.size()) return curve;
  struct Seg {
    double t0, t1;
    Point a, b;
    double weight;
  };
  auto make = [&](double t0, double t1, const Point& a, const Point& b) {
    const double w = weighted_product(ws(0.5 * (a + b)), ws.space.distance(a, b));
    return Seg{t0, t1, a, b, w};
  };
  auto cmp = [](const Seg& l, const Seg& r) {
    if (l.weight != r.weight) return l.weight < r.weight;
    return l.t0 > r.t0;
  };
  std::priority_queue<Seg, std::vector<Seg>, decltype(cmp)> pq(cmp);
  for (std::size_t i = 0; i + 1 < curve.size(); ++i)
    pq.push(make(curve.time(i), curve.time(i + 1), curve.node(i), curve.node(i + 1)));
  std::size_t count = curve.size();
  while (count < target) {
    Seg s = pq.top();
    pq.pop();
    const double tm = 0.5 * (s.t0 + s.t1);
    if (!(tm > s.t0 && tm < s.t1)) throw InvalidArgument("segment too short to split");
    const Point m = 0.5 * (s.a + s.b);
    pq.push(make(s.t0, tm, s.a, m));
    pq.push(make(tm, s.t1, m, s.b));
    ++count;
  }
  std::vector<Seg> segs;
  while (!pq.empty()) {
    segs.push_back(pq.top());
    pq.pop();
  }
  std::sort(segs.begin(), segs.end(), [](const Seg& l, const Seg& r) { return l.t0 < r.t0; });
  std::vector<double> t{segs.front().t0};
  std::vector<Point> nodes{curve.front()};
  for (const auto& s : segs) {
    t.push_back(s.t1);
    nodes.push_back(s.b);
  }
  nodes.back() = curve.back();
  return SampledCurve(std::move(t), std::move(nodes));
}

}  // namespace hetcon
