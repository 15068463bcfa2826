#pragma once

// Potentials W on R^n, the weight K = sqrt(2W), and report-only checkers for
// the growth and degeneracy assumptions used by the existence theory.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hetcon/errors.hpp"
#include "hetcon/metric.hpp"

namespace hetcon {

struct Potential {
  std::string name;
  Index dim = 1;
  std::function<double(const Point&)> eval;
  std::function<Point(const Point&)> grad;
  std::function<Eigen::MatrixXd(const Point&)> hessian;  ///< optional
  double lambda = 0.0;  ///< declared lower bound of the Hessian spectrum
  std::vector<Point> wells;

  Eigen::MatrixXd hess(const Point& x) const {
    if (hessian) return hessian(x);
    Eigen::MatrixXd h(dim, dim);
    Point xp = x;
    for (Index i = 0; i < dim; ++i) {
      const double step = 1e-5 * std::max(1.0, std::abs(x[i]));
      xp[i] = x[i] + step;
      const Point gp = grad(xp);
      xp[i] = x[i] - step;
      const Point gm = grad(xp);
      xp[i] = x[i];
      h.col(i) = (gp - gm) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
  }
};

/// A potential over an arbitrary ambient space; the gradient is the vector of
/// raw partial derivatives. Function-space potentials come in this form.
struct Landscape {
  AmbientSpace space;
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
  std::vector<Point> wells;
  double lambda = 0.0;

  /// Gradient with respect to the ambient inner product (raw partials divided
  /// by the metric weights).
  Point riesz_gradient(const Point& x) const { return (gradient(x).array() / space.weights().array()).matrix(); }
};

inline Landscape as_landscape(const Potential& p) {
  return Landscape{AmbientSpace::euclidean(p.dim), p.eval, p.grad, p.wells, p.lambda};
}

inline Point scalar_point(double v) {
  Point p(1);
  p[0] = v;
  return p;
}

inline Point make_point(std::initializer_list<double> v) {
  Point p(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

namespace potentials {

/// W(u) = ½(1 − u²)², wells ±1.
inline Potential double_well() {
  Potential p;
  p.name = "double_well";
  p.dim = 1;
  p.eval = [](const Point& x) {
    const double q = 1.0 - x[0] * x[0];
    return 0.5 * q * q;
  };
  p.grad = [](const Point& x) { return scalar_point(-2.0 * x[0] * (1.0 - x[0] * x[0])); };
  p.hessian = [](const Point& x) {
    Eigen::MatrixXd h(1, 1);
    h(0, 0) = 6.0 * x[0] * x[0] - 2.0;
    return h;
  };
  p.lambda = -2.0;
  p.wells = {scalar_point(-1.0), scalar_point(1.0)};
  return p;
}

/// W(u) = ½u²(1 − u²)², wells {−1, 0, 1}. The middle well sits exactly on
/// the geodesic between the outer two.
inline Potential triple_well() {
  Potential p;
  p.name = "triple_well";
  p.dim = 1;
  p.eval = [](const Point& x) {
    const double u = x[0], q = 1.0 - u * u;
    return 0.5 * u * u * q * q;
  };
  p.grad = [](const Point& x) {
    const double u = x[0];
    return scalar_point(u * (1.0 - u * u) * (1.0 - 3.0 * u * u));
  };
  p.hessian = [](const Point& x) {
    const double u2 = x[0] * x[0];
    Eigen::MatrixXd h(1, 1);
    h(0, 0) = 1.0 - 12.0 * u2 + 15.0 * u2 * u2;
    return h;
  };
  p.lambda = -1.4;
  p.wells = {scalar_point(-1.0), scalar_point(0.0), scalar_point(1.0)};
  return p;
}

/// W(u₁,u₂) = (u₁² − 1)² + β(u₂² − κ(1 − u₁²))². Even in both components,
/// wells (±1, 0). For βκ² large enough the straight path is not minimal and
/// the two minimal connections follow the valleys u₂ = ±sqrt(κ(1 − u₁²)).
inline Potential planar_two_well(double beta = 2.0, double kappa = 1.0) {
  detail::require(beta > 0.0 && kappa > 0.0, "planar_two_well needs beta > 0 and kappa > 0");
  Potential p;
  p.name = "planar_two_well";
  p.dim = 2;
  p.eval = [beta, kappa](const Point& x) {
    const double a = x[0] * x[0] - 1.0;
    const double phi = x[1] * x[1] - kappa * (1.0 - x[0] * x[0]);
    return a * a + beta * phi * phi;
  };
  p.grad = [beta, kappa](const Point& x) {
    const double u1 = x[0], u2 = x[1];
    const double phi = u2 * u2 - kappa * (1.0 - u1 * u1);
    Point g(2);
    g[0] = 4.0 * u1 * (u1 * u1 - 1.0) + 4.0 * beta * kappa * phi * u1;
    g[1] = 4.0 * beta * phi * u2;
    return g;
  };
  p.hessian = [beta, kappa](const Point& x) {
    const double u1 = x[0], u2 = x[1];
    const double phi = u2 * u2 - kappa * (1.0 - u1 * u1);
    Eigen::MatrixXd h(2, 2);
    h(0, 0) = 12.0 * u1 * u1 - 4.0 + 4.0 * beta * kappa * phi + 8.0 * beta * kappa * kappa * u1 * u1;
    h(0, 1) = h(1, 0) = 8.0 * beta * kappa * u1 * u2;
    h(1, 1) = 4.0 * beta * phi + 8.0 * beta * u2 * u2;
    return h;
  };
  // Attained at the origin; the sampled audit in the tests confirms it bounds
  // the spectrum on the region the connections visit.
  p.lambda = -4.0 - 4.0 * beta * kappa * kappa;
  p.wells = {make_point({-1.0, 0.0}), make_point({1.0, 0.0})};
  return p;
}

/// W(x) = |x|², single well at the origin.
inline Potential quadratic(Index dim = 1) {
  Potential p;
  p.name = "quadratic";
  p.dim = dim;
  p.eval = [](const Point& x) { return x.squaredNorm(); };
  p.grad = [](const Point& x) { return Point(2.0 * x); };
  p.hessian = [dim](const Point&) { return Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(dim, dim)); };
  p.lambda = 2.0;
  p.wells = {Point::Zero(dim)};
  return p;
}

/// W(u) = u⁴, a degenerate well at 0.
inline Potential quartic() {
  Potential p;
  p.name = "quartic";
  p.dim = 1;
  p.eval = [](const Point& x) { return std::pow(x[0], 4); };
  p.grad = [](const Point& x) { return scalar_point(4.0 * std::pow(x[0], 3)); };
  p.hessian = [](const Point& x) {
    Eigen::MatrixXd h(1, 1);
    h(0, 0) = 12.0 * x[0] * x[0];
    return h;
  };
  p.lambda = 0.0;
  p.wells = {scalar_point(0.0)};
  return p;
}

struct Monomial {
  double coefficient = 0.0;
  std::vector<int> exponents;
};

/// W(x) = Σ c_k Π x_i^{e_ki}, user supplied; used by configuration files.
inline Potential polynomial(Index dim, std::vector<Monomial> terms, std::vector<Point> wells, double lambda,
                            std::string name = "polynomial") {
  detail::require(dim >= 1, "polynomial potential needs dim >= 1");
  for (auto& t : terms) {
    if (static_cast<Index>(t.exponents.size()) != dim)
      throw InvalidArgument("polynomial term has " + std::to_string(t.exponents.size()) +
                            " exponents, expected " + std::to_string(dim));
    for (int e : t.exponents) detail::require(e >= 0, "polynomial exponents must be nonnegative");
  }
  auto power = [](double x, int e) {
    double r = 1.0;
    for (int k = 0; k < e; ++k) r *= x;
    return r;
  };
  Potential p;
  p.name = std::move(name);
  p.dim = dim;
  p.eval = [terms, power](const Point& x) {
    double s = 0.0;
    for (const auto& t : terms) {
      double m = t.coefficient;
      for (Index i = 0; i < x.size(); ++i) m *= power(x[i], t.exponents[i]);
      s += m;
    }
    return s;
  };
  p.grad = [terms, power, dim](const Point& x) {
    Point g = Point::Zero(dim);
    for (const auto& t : terms)
      for (Index j = 0; j < dim; ++j) {
        if (t.exponents[j] == 0) continue;
        double m = t.coefficient * t.exponents[j];
        for (Index i = 0; i < dim; ++i) m *= power(x[i], i == j ? t.exponents[i] - 1 : t.exponents[i]);
        g[j] += m;
      }
    return g;
  };
  p.hessian = [terms, power, dim](const Point& x) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& t : terms)
      for (Index j = 0; j < dim; ++j)
        for (Index k = 0; k < dim; ++k) {
          std::vector<int> e = t.exponents;
          double m = t.coefficient;
          m *= e[j];
          if (e[j] == 0) continue;
          e[j] -= 1;
          m *= e[k];
          if (e[k] == 0) continue;
          e[k] -= 1;
          for (Index i = 0; i < dim; ++i) m *= power(x[i], e[i]);
          h(j, k) += m;
        }
    return h;
  };
  p.lambda = lambda;
  p.wells = std::move(wells);
  return p;
}

}  // namespace potentials

/// Smallest Hessian eigenvalue over `samples` deterministic points of the box
/// [-half_width, half_width]^n. Audits a declared λ; cannot certify it.
inline double sampled_hessian_lower_bound(const Potential& p, double half_width, int samples = 2000) {
  double lo = kInfinity;
  for (int s = 0; s < samples; ++s) {
    Point x(p.dim);
    for (Index c = 0; c < p.dim; ++c)
      x[c] = half_width * (2.0 * detail::radical_inverse(static_cast<std::uint64_t>(s) + 1,
                                                         detail::kPrimes[c % 16]) - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.hess(x));
    lo = std::min(lo, es.eigenvalues().minCoeff());
  }
  return lo;
}

/// K = sqrt(2W) over the landscape's space; zero set = declared wells.
inline WeightedSpace make_weight(const Landscape& land) {
  auto value = land.value;
  auto grad = land.gradient;
  auto w = [value](const Point& x) {
    const double v = value(x);
    if (v < 0.0) {
      if (v < -1e-14) throw InvalidArgument("potential is negative (" + std::to_string(v) + "); W >= 0 is required");
      return 0.0;
    }
    return std::sqrt(2.0 * v);
  };
  auto wg = [w, grad](const Point& x) -> Point {
    const double k = w(x);
    if (k <= 0.0) return Point::Zero(x.size());
    return grad(x) / k;
  };
  return WeightedSpace{land.space, w, wg, land.wells};
}

inline WeightedSpace make_weight(const Potential& p) { return make_weight(as_landscape(p)); }

/// Damped Newton on ∇W = 0 from each seed; accepted when |∇W| < tol and
/// W < tol². Results within 1e-6 of each other are merged.
inline std::vector<Point> refine_wells(const Potential& p, std::span<const Point> seeds, double tol = 1e-12) {
  std::vector<Point> out;
  for (const Point& seed : seeds) {
    Point x = seed;
    bool ok = false;
    for (int it = 0; it < 100; ++it) {
      const Point g = p.grad(x);
      if (g.norm() < tol && p.eval(x) < tol * tol) {
        ok = true;
        break;
      }
      Eigen::MatrixXd h = p.hess(x);
      Point step = h.ldlt().solve(-g);
      if (!step.allFinite()) step = -g;
      double t = 1.0;
      const double g0 = g.norm();
      for (int bt = 0; bt < 30; ++bt) {
        if (p.grad(x + t * step).norm() < g0) break;
        t *= 0.5;
      }
      x += t * step;
    }
    if (!ok) {
      if (p.grad(x).norm() < tol && p.eval(x) < tol * tol)
        ok = true;
      else
        throw ConvergenceError("well refinement did not converge from seed (|grad W| = " +
                               std::to_string(p.grad(x).norm()) + ", W = " + std::to_string(p.eval(x)) + ")");
    }
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Point& q) { return (q - x).norm() < 1e-6; });
    if (!dup) out.push_back(x);
  }
  return out;
}

/// Radial lower envelope k with K(x) ≥ k(d(x, Σ)).
struct LowerEnvelope {
  std::function<double(double)> k;
};

struct H3aReport {
  double worst_margin = kInfinity;  ///< min of W(x) − k(d(x,Σ))² over samples
  Point worst_point;
  std::vector<double> radii;
  std::vector<double> partial_integrals;  ///< ∫₀^R k for each R in radii
  bool divergence_flag = false;
  double slope_floor = 0.0;
};

namespace detail {

inline std::vector<Point> unit_directions(Index dim, int count) {
  std::vector<Point> dirs;
  if (dim == 1) return {scalar_point(-1.0), scalar_point(1.0)};
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      const double th = 2.0 * M_PI * k / count;
      dirs.push_back(make_point({std::cos(th), std::sin(th)}));
    }
    return dirs;
  }
  for (int k = 0; k < count; ++k) {
    Point d(dim);
    for (Index c = 0; c < dim; ++c)
      d[c] = 2.0 * radical_inverse(static_cast<std::uint64_t>(k) + 1, kPrimes[c % 16]) - 1.0;
    if (d.norm() > 0.0) dirs.push_back(d.normalized());
  }
  for (Index c = 0; c < dim; ++c) {
    dirs.push_back(Point::Unit(dim, c));
    dirs.push_back(-Point::Unit(dim, c));
  }
  return dirs;
}

inline double distance_to_set(const Point& x, const std::vector<Point>& set) {
  double d = kInfinity;
  for (const auto& s : set) d = std::min(d, (x - s).norm());
  return d;
}

}  // namespace detail

/// Checks W(x) ≥ k(d(x,Σ))² on rays from every well and reports the partial
/// integrals ∫₀^R k. The divergence flag is a heuristic: the last three
/// increments all grow faster than `slope_floor` per unit radius.
inline H3aReport check_h3a(const Potential& p, const LowerEnvelope& env, std::span<const double> radii,
                           int directions = 16, double slope_floor = 1e-3) {
  H3aReport rep;
  rep.slope_floor = slope_floor;
  rep.radii.assign(radii.begin(), radii.end());
  std::sort(rep.radii.begin(), rep.radii.end());
  const auto dirs = detail::unit_directions(p.dim, directions);
  for (const auto& w : p.wells)
    for (double r : rep.radii)
      for (const auto& d : dirs) {
        const Point x = w + r * d;
        const double k = env.k(detail::distance_to_set(x, p.wells));
        const double margin = p.eval(x) - k * k;
        if (margin < rep.worst_margin) {
          rep.worst_margin = margin;
          rep.worst_point = x;
        }
      }
  double acc = 0.0, prev = 0.0;
  for (double r : rep.radii) {
    const int sub = 64;
    const double step = (r - prev) / sub;
    for (int i = 0; i < sub; ++i) {
      const double a = prev + i * step;
      acc += step * (env.k(a) + 4.0 * env.k(a + 0.5 * step) + env.k(a + step)) / 6.0;
    }
    rep.partial_integrals.push_back(acc);
    prev = r;
  }
  const std::size_t n = rep.partial_integrals.size();
  if (n >= 4) {
    rep.divergence_flag = true;
    for (std::size_t i = n - 3; i < n; ++i) {
      const double inc = rep.partial_integrals[i] - rep.partial_integrals[i - 1];
      const double dr = rep.radii[i] - rep.radii[i - 1];
      if (!(inc > slope_floor * dr)) rep.divergence_flag = false;
    }
  }
  return rep;
}

struct A4Report {
  double c0 = 0.0;
  double p0 = 2.0;
  bool admissible = false;
  Point worst_sample;  ///< sample with the smallest ratio q / r^p0, or the first violation
  double worst_value = 0.0;
  std::string note;
};

/// Fits ∇W(x)·(x − a) ≥ c₀|x − a|^{p₀} on the sampled ball around a well.
/// p₀ is the local growth exponent measured at the two smallest radii (worst
/// direction), snapped to an integer within 1e-2 and clamped to [2, 6); c₀ is
/// then the largest constant valid on every sample.
inline A4Report check_a4(const Potential& p, const Point& well, std::span<const double> radii, int directions = 16) {
  A4Report rep;
  detail::require(radii.size() >= 2, "check_a4 needs at least two radii");
  std::vector<double> r(radii.begin(), radii.end());
  std::sort(r.begin(), r.end());
  detail::require(r.front() > 0.0, "check_a4 radii must be positive");
  const auto dirs = detail::unit_directions(p.dim, directions);
  auto q = [&](const Point& x) { return p.grad(x).dot(x - well); };
  for (double rad : r)
    for (const auto& d : dirs) {
      const Point x = well + rad * d;
      if (!(q(x) > 0.0)) {
        rep.admissible = false;
        rep.worst_sample = x;
        rep.worst_value = q(x);
        rep.note = "grad W . (x - a) is not positive on the sampled ball";
        return rep;
      }
    }
  double p_est = 2.0;
  for (const auto& d : dirs) {
    const double q1 = q(well + r[0] * d), q2 = q(well + r[1] * d);
    p_est = std::max(p_est, std::log(q2 / q1) / std::log(r[1] / r[0]));
  }
  const double rounded = std::round(p_est);
  if (std::abs(p_est - rounded) < 1e-2) p_est = rounded;
  if (p_est >= 6.0) {
    rep.p0 = p_est;
    rep.note = "local growth exponent >= 6 is outside the supported range";
    return rep;
  }
  rep.p0 = p_est;
  rep.c0 = kInfinity;
  for (double rad : r)
    for (const auto& d : dirs) {
      const Point x = well + rad * d;
      const double ratio = q(x) / std::pow(rad, rep.p0);
      if (ratio < rep.c0) {
        rep.c0 = ratio;
        rep.worst_sample = x;
        rep.worst_value = ratio;
      }
    }
  rep.admissible = rep.c0 > 0.0;
  return rep;
}

}  // namespace hetcon
