#pragma once

// A posteriori audits for minimal action curves: second differences against
// kinetic energy, boundedness of speed and potential along the curve,
// λ-convexity sampling, and a Rayleigh-quotient look at the linearization
// A(z)v = -v'' + ∇²W(z)v around a 1D connection.

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "hetcon/errors.hpp"
#include "hetcon/field.hpp"
#include "hetcon/grid_function.hpp"
#include "hetcon/metric.hpp"
#include "hetcon/optimize.hpp"
#include "hetcon/potentials.hpp"

namespace hetcon {

struct SecondDifferenceReport {
  double lhs = 0.0;       ///< Σ h |(γ_{i+1} - 2γ_i + γ_{i-1}) / h²|²
  double kinetic = 0.0;   ///< Σ h |(γ_{i+1} - γ_i) / h|²
  double C = 1.0;         ///< max(1, 4|λ|)
  double rhs = 0.0;       ///< C * kinetic
  double fitted_C = 0.0;  ///< lhs / kinetic
  bool resampled = false;
  bool pass = false;
};

namespace detail {

inline SampledCurve uniform_resample(const SampledCurve& c) {
  const std::size_t n = c.size();
  const double t0 = c.t0(), t1 = c.t1();
  std::vector<double> t(n);
  std::vector<Point> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
    x[i] = c.evaluate(t[i]);
  }
  return SampledCurve(std::move(t), std::move(x));
}

inline bool is_uniform(const SampledCurve& c) {
  const double h = (c.t1() - c.t0()) / static_cast<double>(c.size() - 1);
  for (std::size_t i = 0; i + 1 < c.size(); ++i)
    if (std::abs(c.time(i + 1) - c.time(i) - h) > 1e-9 * std::max(1.0, std::abs(h))) return false;
  return true;
}

}  // namespace detail

inline SecondDifferenceReport second_difference_bound(const SampledCurve& path, double lambda, const AmbientSpace& space) {
  if (path.size() < 3) throw InvalidArgument("second difference bound needs at least three nodes");
  path.check_in(space);
  SecondDifferenceReport r;
  r.resampled = !detail::is_uniform(path);
  const SampledCurve c = r.resampled ? detail::uniform_resample(path) : path;
  const double h = (c.t1() - c.t0()) / static_cast<double>(c.size() - 1);
  for (std::size_t i = 1; i + 1 < c.size(); ++i) {
    const Point d2 = (c.node(i + 1) - 2.0 * c.node(i) + c.node(i - 1)) / (h * h);
    r.lhs += h * space.inner(d2, d2);
  }
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    const Point d1 = (c.node(i + 1) - c.node(i)) / h;
    r.kinetic += h * space.inner(d1, d1);
  }
  r.C = std::max(1.0, 4.0 * std::abs(lambda));
  r.rhs = r.C * r.kinetic;
  r.fitted_C = r.kinetic > 0.0 ? r.lhs / r.kinetic : 0.0;
  r.pass = r.lhs <= r.rhs;
  return r;
}

inline SecondDifferenceReport second_difference_bound(const SampledCurve& path, double lambda) {
  return second_difference_bound(path, lambda, AmbientSpace::euclidean(path.dim()));
}

struct UniformBoundsReport {
  double max_speed = 0.0;
  double max_W = 0.0;
  double max_defect = 0.0;
  std::vector<double> speed, W, defect;  ///< per node; defect = |½|γ̇|² - W|
  bool edge_growth = false;  ///< speed or W in the outer tenth exceeds the interior maximum
  std::vector<std::size_t> spikes;
  bool flagged() const { return edge_growth || !spikes.empty(); }
};

/// Speeds by centered differences (one-sided at the ends). A node is a spike
/// when its defect exceeds `spike_factor` times the 90th percentile of
/// ½|γ̇|² + W over the curve.
inline UniformBoundsReport uniform_bounds_audit(const SampledCurve& path, const std::function<double(const Point&)>& W,
                                                const AmbientSpace& space, double spike_factor = 10.0) {
  detail::require(path.size() >= 2, "bounds audit needs at least two nodes");
  path.check_in(space);
  UniformBoundsReport r;
  const std::size_t n = path.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? i : i + 1;
    const double v = space.distance(path.node(b), path.node(a)) / (path.time(b) - path.time(a));
    const double w = W(path.node(i));
    r.speed.push_back(v);
    r.W.push_back(w);
    r.defect.push_back(std::abs(0.5 * v * v - w));
    r.max_speed = std::max(r.max_speed, v);
    r.max_W = std::max(r.max_W, w);
    r.max_defect = std::max(r.max_defect, r.defect.back());
  }
  std::vector<double> scale(n);
  for (std::size_t i = 0; i < n; ++i) scale[i] = 0.5 * r.speed[i] * r.speed[i] + r.W[i];
  std::sort(scale.begin(), scale.end());
  const double p90 = scale[std::min(n - 1, (9 * n) / 10)];
  for (std::size_t i = 0; i < n; ++i)
    if (r.defect[i] > spike_factor * p90 + 1e-12) r.spikes.push_back(i);
  const std::size_t edge = std::max<std::size_t>(1, n / 10);
  if (n > 2 * edge) {
    double in_v = 0.0, in_w = 0.0, out_v = 0.0, out_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool outer = i < edge || i >= n - edge;
      (outer ? out_v : in_v) = std::max(outer ? out_v : in_v, r.speed[i]);
      (outer ? out_w : in_w) = std::max(outer ? out_w : in_w, r.W[i]);
    }
    r.edge_growth = out_v > in_v * (1.0 + 1e-6) + 1e-12 || out_w > in_w * (1.0 + 1e-6) + 1e-12;
  }
  return r;
}

inline UniformBoundsReport uniform_bounds_audit(const SampledCurve& path, const Potential& p, double spike_factor = 10.0) {
  return uniform_bounds_audit(path, p.eval, AmbientSpace::euclidean(p.dim), spike_factor);
}

/// Largest violation of W((1-s)a + sb) ≤ (1-s)W(a) + sW(b) - (λ/2)s(1-s)|a-b|²
/// over random pairs in the cube [-radius, radius]^dim.
inline double lambda_convexity_violation(const std::function<double(const Point&)>& W, double lambda, Index dim,
                                         int samples, std::uint64_t seed, double radius = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-radius, radius), s01(0.0, 1.0);
  double worst = -kInfinity;
  for (int k = 0; k < samples; ++k) {
    Point a(dim), b(dim);
    for (Index i = 0; i < dim; ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
    }
    const double s = s01(rng);
    const double lhs = W((1.0 - s) * a + s * b);
    const double rhs = (1.0 - s) * W(a) + s * W(b) - 0.5 * lambda * s * (1.0 - s) * (a - b).squaredNorm();
    worst = std::max(worst, lhs - rhs);
  }
  return worst;
}

/// max over random pairs of ||A|² + |B|² - |A+B|²/2 - |A-B|²/2| / (|A|² + |B|²).
inline double parallelogram_check(int pairs, Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    Point A(dim), B(dim);
    for (Index i = 0; i < dim; ++i) {
      A[i] = nd(rng);
      B[i] = nd(rng);
    }
    const double lhs = A.squaredNorm() + B.squaredNorm() - 0.5 * (A + B).squaredNorm();
    const double rhs = 0.5 * (A - B).squaredNorm();
    worst = std::max(worst, std::abs(lhs - rhs) / (A.squaredNorm() + B.squaredNorm()));
  }
  return worst;
}

struct SpectralReport {
  double kernel_residual = 0.0;           ///< ||A(z) z'||
  double kernel_residual_relative = 0.0;  ///< divided by ||z'||
  double c0_random = kInfinity;           ///< min Rayleigh quotient over trial directions ⊥ z'
  double c0_refined = kInfinity;          ///< after projected inverse iteration
  double c0_est = kInfinity;
  int trials = 0;
};

/// Discrete A(z): -second differences with zero ghosts plus ∇²F(s_j, z_j).
inline SparseMatrix linearization(const GridFunction& z, const FieldDensity& F) {
  const Index n = z.components(), M = z.points();
  const double h = z.grid().h;
  std::vector<Eigen::Triplet<double>> t;
  for (Index j = 0; j < M; ++j) {
    const Eigen::MatrixXd H = F.hessian(z.grid().s(j), z.node(j));
    for (Index a = 0; a < n; ++a) {
      for (Index b = 0; b < n; ++b)
        if (H(a, b) != 0.0) t.emplace_back(j * n + a, j * n + b, H(a, b));
      t.emplace_back(j * n + a, j * n + a, 2.0 / (h * h));
      if (j + 1 < M) {
        t.emplace_back(j * n + a, (j + 1) * n + a, -1.0 / (h * h));
        t.emplace_back((j + 1) * n + a, j * n + a, -1.0 / (h * h));
      }
    }
  }
  SparseMatrix A(M * n, M * n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

inline SpectralReport spectral_audit(const GridFunction& z, const FieldDensity& F, int trials, std::uint64_t seed = 1,
                                     int refine_iterations = 60) {
  detail::require(F.components == z.components(), "density and connection have different components");
  const SparseMatrix A = linearization(z, F);
  const Grid& g = z.grid();
  const double h = g.h;
  const Index n = z.components(), D = z.flat().size();
  const Point zp = z.derivative().flat();
  auto ip = [h](const Point& a, const Point& b) { return h * a.dot(b); };
  SpectralReport r;
  r.trials = trials;
  r.kernel_residual = std::sqrt(ip(A * zp, A * zp));
  const double zn = std::sqrt(ip(zp, zp));
  r.kernel_residual_relative = zn > 0.0 ? r.kernel_residual / zn : 0.0;
  auto project = [&](Point v) {
    if (zn > 0.0) v -= (ip(v, zp) / (zn * zn)) * zp;
    return v;
  };
  auto rayleigh = [&](const Point& v) { return ip(v, A * v) / ip(v, v); };

  // Smooth trial directions: a few Gaussian bumps per component.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> amp;
  std::uniform_real_distribution<double> centre(g.s0, g.last()), width(0.5, 3.0);
  Point best;
  for (int k = 0; k < trials; ++k) {
    Point v = Point::Zero(D);
    for (Index c = 0; c < n; ++c)
      for (int b = 0; b < 6; ++b) {
        const double a = amp(rng), m = centre(rng), w = width(rng);
        for (Index j = 0; j < g.points; ++j) v[j * n + c] += a * std::exp(-std::pow((g.s(j) - m) / w, 2));
      }
    v = project(v);
    if (ip(v, v) <= 0.0) continue;
    const double q = rayleigh(v);
    if (q < r.c0_random) {
      r.c0_random = q;
      best = v;
    }
  }
  if (refine_iterations > 0 && best.size() == D) {
    double shift = 1.0;
    for (Index j = 0; j < g.points; ++j) {
      const Eigen::MatrixXd H = F.hessian(g.s(j), z.node(j));
      shift = std::max(shift, 1.0 - Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().minCoeff());
    }
    SparseMatrix S = A;
    for (Index i = 0; i < D; ++i) S.coeffRef(i, i) += shift;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(S);
    if (ldlt.info() == Eigen::Success) {
      Point v = best / std::sqrt(ip(best, best));
      for (int it = 0; it < refine_iterations; ++it) {
        v = project(ldlt.solve(v));
        v /= std::sqrt(ip(v, v));
      }
      r.c0_refined = rayleigh(v);
    }
  }
  r.c0_est = std::min(r.c0_random, r.c0_refined);
  return r;
}

inline SpectralReport spectral_audit(const GridFunction& z, const Potential& p, int trials, std::uint64_t seed = 1) {
  return spectral_audit(z, FieldDensity::from_potential(p), trials, seed);
}

}  // namespace hetcon
