#pragma once

// A weight K = |∇f| on the plane whose decay along {y = 0} is integrable.
// Every curve joining P+ = (0, 1) to P- = (0, -1) crosses {y = 0} at some
// x0 and then costs at least 2(2G(∞) - G(|x0|)) > 2G(∞), while three-leg
// curves pushed out to x = x_n approach 2G(∞). So no minimizer exists.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "hetcon/errors.hpp"
#include "hetcon/geodesic.hpp"
#include "hetcon/metric.hpp"
#include "hetcon/potentials.hpp"

namespace hetcon {

namespace detail {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// ∫₁^x g from cumulative node values plus one 7-point Gauss panel; the
// nodes are 5% apart, so the panel is exact to rounding for smooth g.
struct CumulativeTable {
  std::vector<double> t, G;
  std::function<double(double)> g;

  double operator()(double x) const {
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
    if (x == t[i]) return G[i];
    return G[i] + boost::math::quadrature::gauss<double, 7>::integrate(g, t[i], x);
  }
};

}  // namespace detail

/// The construction's weight for a decay profile g on [1, ∞), extended by
/// s g(1) on [0, 1].
class CounterexampleWeight {
 public:
  /// g(s) = s⁻² on [1, ∞); closed forms throughout.
  static CounterexampleWeight default_weight() {
    CounterexampleWeight w;
    w.name_ = "inverse_square";
    w.g_ = [](double s) { return 1.0 / (s * s); };
    w.dg_ = [](double s) { return -2.0 / (s * s * s); };
    w.G_inf_ = 1.5;
    w.closed_ = true;
    return w;
  }

  /// User profile on [1, ∞). Throws when ∫₁^∞ g does not converge or g is
  /// not positive. `dg` is optional; central differences are used otherwise.
  static CounterexampleWeight from_callable(std::string name, std::function<double(double)> g,
                                            std::function<double(double)> dg = nullptr) {
    detail::require(static_cast<bool>(g), "counterexample profile g is empty");
    for (double s : {1.0, 2.0, 10.0, 100.0})
      if (!(g(s) > 0.0) || !std::isfinite(g(s))) throw InvalidArgument("counterexample profile g must be positive and finite on [1, inf)");
    double err = 0.0, l1 = 0.0, tail = 0.0;
    try {
      boost::math::quadrature::exp_sinh<double> es;
      tail = es.integrate(g, 1.0, std::numeric_limits<double>::infinity(), 1e-10, &err, &l1);
    } catch (const std::exception&) {
      tail = kInfinity;
    }
    if (!std::isfinite(tail) || err > 1e-6 * std::max(1.0, std::abs(tail)))
      throw InvalidArgument("the integral of g over [1, inf) does not converge (estimate " + std::to_string(tail) +
                            ", error " + std::to_string(err) + ")");
    CounterexampleWeight w;
    w.name_ = std::move(name);
    w.g_ = std::move(g);
    if (dg) {
      w.dg_ = std::move(dg);
    } else {
      w.dg_ = [gg = w.g_](double s) {
        const double e = 1e-6 * std::max(1.0, s);
        return (gg(s + e) - gg(std::max(1.0, s - e))) / (s + e - std::max(1.0, s - e));
      };
    }
    w.G_inf_ = 0.5 * w.g_(1.0) + tail;
    w.build_table();
    return w;
  }

  /// g(s) = s^-p on [1, ∞), p > 1.
  static CounterexampleWeight power(double p) {
    if (p == 2.0) return default_weight();
    return from_callable("power_" + std::to_string(p), [p](double s) { return std::pow(s, -p); },
                         [p](double s) { return -p * std::pow(s, -p - 1.0); });
  }

  const std::string& name() const { return name_; }
  bool closed_form() const { return closed_; }

  double g(double s) const {
    s = std::abs(s);
    return s < 1.0 ? s * g_(1.0) : g_(s);
  }
  double dg(double s) const {  // s ≥ 0
    return s < 1.0 ? g_(1.0) : dg_(s);
  }
  double G(double t) const {
    t = std::abs(t);
    if (t <= 1.0) return 0.5 * g_(1.0) * t * t;
    if (closed_) return 1.5 - 1.0 / t;
    if (t <= table_->t.back()) return 0.5 * g_(1.0) + (*table_)(t);
    double err = 0.0;
    boost::math::quadrature::exp_sinh<double> es;
    return G_inf_ - es.integrate(g_, t, std::numeric_limits<double>::infinity(), 1e-12, &err);
  }
  double G_inf() const { return G_inf_; }

  /// Raised cosine on [-1, 1]; beyond, ½ q r²/(1 + q r²) with r = |y| - 1 and
  /// q = π²/2, which matches h, h', h'' at ±1 and keeps h' ≠ 0 there.
  static double h(double y) {
    const double a = std::abs(y);
    if (a <= 1.0) return 0.5 * (1.0 + std::cos(detail::kPi * y));
    const double r = a - 1.0, q = 0.5 * detail::kPi * detail::kPi;
    return 0.5 * q * r * r / (1.0 + q * r * r);
  }
  static double dh(double y) {
    const double a = std::abs(y);
    if (a <= 1.0) return -0.5 * detail::kPi * std::sin(detail::kPi * y);
    const double r = a - 1.0, q = 0.5 * detail::kPi * detail::kPi, d = 1.0 + q * r * r;
    return (y > 0 ? 1.0 : -1.0) * q * r / (d * d);
  }
  static double d2h(double y) {
    const double a = std::abs(y);
    if (a <= 1.0) return -0.5 * detail::kPi * detail::kPi * std::cos(detail::kPi * y);
    const double r = a - 1.0, q = 0.5 * detail::kPi * detail::kPi, d = 1.0 + q * r * r;
    return q * (1.0 - 3.0 * q * r * r) / (d * d * d);
  }

  double f(double x, double y) const {
    const double Gx = G(x), hy = h(y);
    return hy * (2.0 * G_inf_ - Gx) + (1.0 - hy) * Gx;
  }
  Point grad_f(double x, double y) const {
    const double sx = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
    return make_point({sx * g(x) * (1.0 - 2.0 * h(y)), 2.0 * dh(y) * (G_inf_ - G(x))});
  }
  double K(double x, double y) const { return grad_f(x, y).norm(); }
  /// ∇K = ∇²f ∇f / |∇f|; zero on Σ.
  Point grad_K(double x, double y) const {
    const Point gf = grad_f(x, y);
    const double k = gf.norm();
    if (k == 0.0) return Point::Zero(2);
    const double ax = std::abs(x), sx = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
    const double fxx = dg(ax) * (1.0 - 2.0 * h(y));
    const double fxy = -2.0 * sx * g(ax) * dh(y);
    const double fyy = 2.0 * d2h(y) * (G_inf_ - G(x));
    return make_point({(fxx * gf[0] + fxy * gf[1]) / k, (fxy * gf[0] + fyy * gf[1]) / k});
  }

  static std::vector<Point> zeros() { return {make_point({0.0, -1.0}), make_point({0.0, 0.0}), make_point({0.0, 1.0})}; }
  static Point P_plus() { return make_point({0.0, 1.0}); }
  static Point P_minus() { return make_point({0.0, -1.0}); }

  WeightedSpace weighted() const {
    const CounterexampleWeight self = *this;
    return WeightedSpace{AmbientSpace::euclidean(2), [self](const Point& p) { return self.K(p[0], p[1]); },
                         [self](const Point& p) { return self.grad_K(p[0], p[1]); }, zeros()};
  }

 private:
  void build_table() {
    auto tab = std::make_shared<detail::CumulativeTable>();
    double t = 1.0, acc = 0.0;
    tab->t.push_back(t);
    tab->G.push_back(0.0);
    tab->g = g_;
    while (t < 1e5) {
      const double next = std::min(1e5, t * 1.05);
      acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g_, t, next, 10, 1e-13);
      t = next;
      tab->t.push_back(t);
      tab->G.push_back(acc);
    }
    table_ = std::move(tab);
  }

  std::string name_;
  std::function<double(double)> g_, dg_;
  double G_inf_ = 0.0;
  bool closed_ = false;
  std::shared_ptr<const detail::CumulativeTable> table_;
};

/// Lower bound 2(2G(∞) - G(|x0|)) for any P+ -> P- curve crossing {y = 0} at x0.
inline double crossing_lower_bound(double x0, const CounterexampleWeight& w) {
  return 2.0 * (2.0 * w.G_inf() - w.G(x0));
}

namespace detail {

inline double integrate_K(const CounterexampleWeight& w, const Point& a, const Point& b, std::vector<double> cuts = {}) {
  const double len = (b - a).norm();
  if (len == 0.0) return 0.0;
  cuts.push_back(0.0);
  cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    // Each piece is mapped onto [0, 1]: the adaptive rule stalls on very short intervals.
    const double c0 = cuts[i], dc = cuts[i + 1] - cuts[i];
    total += dc * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                      [&](double u) {
                        const Point p = a + (c0 + u * dc) * (b - a);
                        return w.K(p[0], p[1]);
                      },
                      0.0, 1.0, 20, 1e-12);
  }
  return total * len;
}

// Parameters on [0, 1] where the segment a->b meets x = ±1, x = 0, y = 0, ±½, ±1.
inline std::vector<double> segment_cuts(const Point& a, const Point& b) {
  std::vector<double> c;
  auto add = [&](double av, double bv, double level) {
    if ((av - level) * (bv - level) < 0.0) c.push_back((level - av) / (bv - av));
  };
  for (double l : {-1.0, 0.0, 1.0}) add(a[0], b[0], l);
  for (double l : {-1.0, -0.5, 0.0, 0.5, 1.0}) add(a[1], b[1], l);
  return c;
}

}  // namespace detail

/// Weighted length of a polyline, segment by segment with adaptive quadrature.
inline double polyline_k_length(const std::vector<Point>& nodes, const CounterexampleWeight& w) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    total += detail::integrate_K(w, nodes[i], nodes[i + 1], detail::segment_cuts(nodes[i], nodes[i + 1]));
  return total;
}

struct CandidateLength {
  int n = 0;
  double x_n = 0.0;
  double top = 0.0, vertical = 0.0, bottom = 0.0;
  double total = 0.0;
  double vertical_bound = 0.0;  ///< 2π (g(x_n) + G(∞) - G(x_n))
};

/// Three-leg curve (0,1) -> (x_n,1) -> (x_n,-1) -> (0,-1) with x_n = base^n.
inline CandidateLength candidate_length(int n, const CounterexampleWeight& w, double base = 2.0) {
  detail::require(n >= 0, "candidate index must be nonnegative");
  detail::require(base > 1.0, "candidate schedule base must exceed 1");
  CandidateLength c;
  c.n = n;
  c.x_n = std::pow(base, n);
  const Point A = make_point({0.0, 1.0}), B = make_point({c.x_n, 1.0}), C = make_point({c.x_n, -1.0}),
              D = make_point({0.0, -1.0});
  c.top = detail::integrate_K(w, A, B, detail::segment_cuts(A, B));
  c.vertical = detail::integrate_K(w, B, C, detail::segment_cuts(B, C));
  c.bottom = detail::integrate_K(w, C, D, detail::segment_cuts(C, D));
  c.total = c.top + c.vertical + c.bottom;
  // |1 - 2h| ≤ 1 and 2|h'| ≤ π along a leg of length 2.
  c.vertical_bound = 2.0 * detail::kPi * (w.g(c.x_n) + w.G_inf() - w.G(c.x_n));
  return c;
}

struct BoxRun {
  double R = 0.0;
  double best = 0.0;           ///< exact weighted length of the clamped solver curve
  double bound_R = 0.0;        ///< crossing_lower_bound(R)
  double crossing = 0.0;       ///< crossing abscissa with the largest bound
  double bound_crossing = 0.0;
  int crossings = 0;
  SolverStatus status = SolverStatus::converged;
  std::vector<Point> curve;
};

struct NonexistenceReport {
  double infimum = 0.0;  ///< 2G(∞)
  std::vector<BoxRun> runs;
  bool monotone = true;         ///< best strictly decreases as R grows
  bool strict_gap = true;       ///< best(R) - 2G(∞) ≥ bound(R) - 2G(∞) > 0
  bool dominance = true;        ///< best ≥ bound(crossing) - 1e-6
  std::string conclusion;
};

struct NonexistenceOptions {
  std::vector<double> radii{4.0, 8.0, 16.0, 32.0, 64.0};
  int nodes = 161;
  int max_iter = 4000;
  double penalty = 100.0;  ///< weight added per squared unit outside |x| ≤ R
};

/// Box-confined geodesics: the solver works with K + μ (|x| - R)₊², then the
/// nodes are clamped into the box and the clamped polyline is measured with
/// the true K.
inline BoxRun solve_in_box(const CounterexampleWeight& w, double R, const NonexistenceOptions& opts = {}) {
  detail::require(R > 0.0, "box half-width must be positive");
  WeightedSpace ws = w.weighted();
  const double mu = opts.penalty;
  auto base = ws.weight;
  auto base_grad = ws.weight_gradient;
  ws.weight = [=](const Point& p) {
    const double e = std::max(0.0, std::abs(p[0]) - R);
    return base(p) + mu * e * e;
  };
  ws.weight_gradient = [=](const Point& p) {
    Point g = base_grad(p);
    const double e = std::max(0.0, std::abs(p[0]) - R);
    g[0] += 2.0 * mu * e * (p[0] > 0 ? 1.0 : -1.0);
    return g;
  };
  GeodesicOptions go;
  go.nodes = opts.nodes;
  go.max_iter = opts.max_iter;
  go.output_metric = ArcMetric::d;
  go.rule = Quadrature::simpson;
  go.via = {make_point({R, 1.0}), make_point({R, -1.0})};
  const auto geo = minimize_k_length(ws, CounterexampleWeight::P_plus(), CounterexampleWeight::P_minus(), go);
  BoxRun run;
  run.R = R;
  run.status = geo.status;
  for (const auto& p : geo.curve.nodes()) run.curve.push_back(make_point({std::clamp(p[0], -R, R), p[1]}));
  run.best = polyline_k_length(run.curve, w);
  run.bound_R = crossing_lower_bound(R, w);
  run.bound_crossing = -kInfinity;
  for (std::size_t i = 0; i + 1 < run.curve.size(); ++i) {
    const Point& a = run.curve[i];
    const Point& b = run.curve[i + 1];
    if (a[1] == 0.0 || (a[1] > 0.0) != (b[1] > 0.0)) {
      if (a[1] == b[1]) continue;
      const double s = a[1] / (a[1] - b[1]);
      const double x0 = a[0] + s * (b[0] - a[0]);
      ++run.crossings;
      const double bound = crossing_lower_bound(x0, w);
      if (bound > run.bound_crossing) {
        run.bound_crossing = bound;
        run.crossing = x0;
      }
    }
  }
  return run;
}

inline NonexistenceReport nonexistence_report(const CounterexampleWeight& w, const NonexistenceOptions& opts = {}) {
  NonexistenceReport rep;
  rep.infimum = 2.0 * w.G_inf();
  for (double R : opts.radii) rep.runs.push_back(solve_in_box(w, R, opts));
  for (std::size_t i = 0; i < rep.runs.size(); ++i) {
    const auto& r = rep.runs[i];
    if (i > 0 && !(r.best < rep.runs[i - 1].best)) rep.monotone = false;
    if (!(r.best - rep.infimum >= r.bound_R - rep.infimum && r.bound_R - rep.infimum > 0.0)) rep.strict_gap = false;
    if (!(r.best >= r.bound_crossing - 1e-6)) rep.dominance = false;
  }
  rep.conclusion = rep.monotone && rep.strict_gap && rep.dominance
                       ? "boxed minimizers decrease toward 2G(inf) but each stays above its crossing bound: "
                         "nonexistence of a minimizer is demonstrated numerically, not proven"
                       : "numerical evidence is inconclusive: see the per-box rows";
  return rep;
}

/// "n,x_n,length" rows.
inline void write_candidate_plot(std::ostream& out, const std::vector<CandidateLength>& rows) {
  out << "n,x_n,length,top,vertical,bottom\n";
  out.precision(17);
  for (const auto& r : rows) out << r.n << ',' << r.x_n << ',' << r.total << ',' << r.top << ',' << r.vertical << ',' << r.bottom << '\n';
}

/// "R,best,bound_R" rows.
inline void write_box_plot(std::ostream& out, const NonexistenceReport& rep) {
  out << "R,best,bound_R,crossing,bound_crossing,infimum\n";
  out.precision(17);
  for (const auto& r : rep.runs)
    out << r.R << ',' << r.best << ',' << r.bound_R << ',' << r.crossing << ',' << r.bound_crossing << ',' << rep.infimum << '\n';
}

}  // namespace hetcon
