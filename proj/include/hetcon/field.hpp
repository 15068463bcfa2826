#pragma once

// The one-dimensional energy of a grid function and the effective potential
// it induces on function space.
//
//   E(v) = sum_{j=-1}^{M-1} |v_{j+1} - v_j|^2 / (2h) + sum_j h F(s_j, v_j)
//
// with v_{-1}, v_M the ghost values. For the line problem the ghosts are the
// wells a± and F = W; for a bounded interval they carry the Dirichlet data.
// The Euler-Lagrange operator of E is the three-point Laplacian, so a 2D
// assembly of these columns is variational for the five-point stencil.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hetcon/errors.hpp"
#include "hetcon/geodesic.hpp"
#include "hetcon/grid_function.hpp"
#include "hetcon/metric.hpp"
#include "hetcon/optimize.hpp"
#include "hetcon/potentials.hpp"

namespace hetcon {

/// Energy density F(s, v) with its v-derivatives.
struct FieldDensity {
  std::string name;
  Index components = 1;
  std::function<double(double, const Point&)> value;
  std::function<Point(double, const Point&)> gradient;
  std::function<Eigen::MatrixXd(double, const Point&)> hessian;
  double lambda = 0.0;  ///< lower bound of the v-Hessian spectrum

  static FieldDensity from_potential(const Potential& p) {
    FieldDensity d;
    d.name = p.name;
    d.components = p.dim;
    d.value = [p](double, const Point& v) { return p.eval(v); };
    d.gradient = [p](double, const Point& v) { return p.grad(v); };
    d.hessian = [p](double, const Point& v) { return p.hess(v); };
    d.lambda = p.lambda;
    return d;
  }

  /// F(y, v) = -v²/2 + (v² - sin²y)²; critical points ±sin with zero energy
  /// on (0, π) under Dirichlet data.
  static FieldDensity sin_example() {
    FieldDensity d;
    d.name = "sin_example";
    d.components = 1;
    d.value = [](double y, const Point& v) {
      const double q = v[0] * v[0] - std::sin(y) * std::sin(y);
      return -0.5 * v[0] * v[0] + q * q;
    };
    d.gradient = [](double y, const Point& v) {
      const double q = v[0] * v[0] - std::sin(y) * std::sin(y);
      return scalar_point(-v[0] + 4.0 * v[0] * q);
    };
    d.hessian = [](double y, const Point& v) {
      const double s2 = std::sin(y) * std::sin(y);
      Eigen::MatrixXd h(1, 1);
      h(0, 0) = -1.0 + 12.0 * v[0] * v[0] - 4.0 * s2;
      return h;
    };
    d.lambda = -5.0;
    return d;
  }
};

enum class SymmetryMode { none, odd_first_component };
enum class QuotientMode { none, translations };

inline const char* to_string(SymmetryMode m) { return m == SymmetryMode::none ? "none" : "odd-first-component"; }
inline const char* to_string(QuotientMode m) { return m == QuotientMode::none ? "none" : "translations"; }

class FieldEnergy {
 public:
  FieldEnergy(Grid grid, FieldDensity density, Point ghost_minus, Point ghost_plus)
      : grid_(grid), density_(std::move(density)), ghost_minus_(std::move(ghost_minus)), ghost_plus_(std::move(ghost_plus)) {
    detail::require(ghost_minus_.size() == density_.components && ghost_plus_.size() == density_.components,
                    "ghost values must match the density's components");
  }

  const Grid& grid() const { return grid_; }
  const FieldDensity& density() const { return density_; }
  Index components() const { return density_.components; }
  Index dim() const { return grid_.points * components(); }
  const Point& ghost_minus() const { return ghost_minus_; }
  const Point& ghost_plus() const { return ghost_plus_; }
  AmbientSpace space() const { return AmbientSpace::grid_l2(grid_.points, components(), grid_.h); }
  GridFunction wrap(Point flat) const { return GridFunction(grid_, std::move(flat), ghost_minus_, ghost_plus_); }

  void check(const Point& x) const {
    if (x.size() != dim())
      throw InvalidArgument("grid mismatch: function has " + std::to_string(x.size()) + " values, energy expects " +
                            std::to_string(dim()));
  }

  double kinetic(const Point& x) const {
    check(x);
    const Index n = components(), M = grid_.points;
    double k = (x.head(n) - ghost_minus_).squaredNorm() + (ghost_plus_ - x.tail(n)).squaredNorm();
    for (Index j = 0; j + 1 < M; ++j) k += (x.segment((j + 1) * n, n) - x.segment(j * n, n)).squaredNorm();
    return k / (2.0 * grid_.h);
  }

  double potential(const Point& x) const {
    check(x);
    const Index n = components();
    double p = 0.0;
    for (Index j = 0; j < grid_.points; ++j) p += density_.value(grid_.s(j), x.segment(j * n, n));
    return grid_.h * p;
  }

  double value(const Point& x) const { return kinetic(x) + potential(x); }

  /// Raw partial derivatives.
  Point gradient(const Point& x) const {
    check(x);
    const Index n = components(), M = grid_.points;
    const double h = grid_.h;
    Point g(x.size());
    for (Index j = 0; j < M; ++j) {
      const Point vj = x.segment(j * n, n);
      const Point left = j == 0 ? ghost_minus_ : Point(x.segment((j - 1) * n, n));
      const Point right = j + 1 == M ? ghost_plus_ : Point(x.segment((j + 1) * n, n));
      g.segment(j * n, n) = (2.0 * vj - left - right) / h + h * density_.gradient(grid_.s(j), vj);
    }
    return g;
  }

  SparseMatrix hessian(const Point& x) const {
    check(x);
    const Index n = components(), M = grid_.points;
    const double h = grid_.h;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(M * n * (n + 2)));
    for (Index j = 0; j < M; ++j) {
      const Eigen::MatrixXd H = density_.hessian(grid_.s(j), x.segment(j * n, n));
      for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b < n; ++b) {
          const double v = h * H(a, b) + (a == b ? 2.0 / h : 0.0);
          if (v != 0.0) t.emplace_back(j * n + a, j * n + b, v);
        }
        if (j + 1 < M) {
          t.emplace_back(j * n + a, (j + 1) * n + a, -1.0 / h);
          t.emplace_back((j + 1) * n + a, j * n + a, -1.0 / h);
        }
      }
    }
    SparseMatrix H(x.size(), x.size());
    H.setFromTriplets(t.begin(), t.end());
    return H;
  }

 private:
  Grid grid_;
  FieldDensity density_;
  Point ghost_minus_, ghost_plus_;
};

/// Embedding of functions with v₁(-s) = -v₁(s) and the other components
/// even. The reduced coordinates are the values on s >= 0; v₁(0) is zero.
inline Embedding odd_first_component_embedding(const Grid& grid, Index n) {
  detail::require(grid.symmetric(), "odd symmetry needs a grid symmetric about 0");
  const Index M = grid.points;
  std::vector<Eigen::Triplet<double>> t;
  Embedding e;
  Index r = 0;
  for (Index j = (M - 1) - (M - 1) / 2; j < M; ++j) {
    const Index mirror = M - 1 - j;
    for (Index c = 0; c < n; ++c) {
      if (mirror == j && c == 0) continue;
      t.emplace_back(j * n + c, r, 1.0);
      if (mirror != j) t.emplace_back(mirror * n + c, r, c == 0 ? -1.0 : 1.0);
      e.representative.push_back(j * n + c);
      ++r;
    }
  }
  e.E.resize(M * n, r);
  e.E.setFromTriplets(t.begin(), t.end());
  return e;
}

/// Nearest function with the odd-first-component symmetry (L2 projection).
inline Point symmetrize(const Point& x, const Embedding& e) {
  // E has orthogonal columns with squared norms 1 or 2.
  Point r = e.pullback(x);
  for (Index i = 0; i < r.size(); ++i) r[i] /= e.E.col(i).squaredNorm();
  return e.expand(r);
}

struct PolishResult {
  Point x;
  double value = 0.0;
  double gradient_norm = 0.0;
  SolverStatus status = SolverStatus::converged;
  int iterations = 0;
};

/// Newton minimization of E from `seed`, optionally inside an embedded
/// subspace. Used to turn sampled 1D connections into exact discrete wells.
inline PolishResult polish_well(const FieldEnergy& energy, const Point& seed, const std::optional<Embedding>& emb = {},
                                const NewtonOptions& opts = {}) {
  energy.check(seed);
  auto full = [&](const Eigen::VectorXd& r) -> Point { return emb ? emb->expand(r) : r; };
  auto fgh = [&](const Eigen::VectorXd& r, Eigen::VectorXd& g, SparseMatrix& H) {
    const Point x = full(r);
    const double f = energy.value(x);
    if (!std::isfinite(f)) return f;
    const Point gx = energy.gradient(x);
    const SparseMatrix Hx = energy.hessian(x);
    if (emb) {
      g = emb->pullback(gx);
      H = SparseMatrix(emb->E.transpose() * Hx * emb->E);
    } else {
      g = gx;
      H = Hx;
    }
    return f;
  };
  const Eigen::VectorXd r0 = emb ? Eigen::VectorXd(emb->restrict(symmetrize(seed, *emb))) : Eigen::VectorXd(seed);
  const auto res = minimize_newton(fgh, r0, opts);
  return PolishResult{full(res.x), res.value, res.grad_norm, res.status, res.iterations};
}

/// Function space of grid functions with the effective potential
/// W(v) = E(v) - reference and weight K = sqrt(2W).
struct EffectivePotentialSpace {
  FieldEnergy energy;
  GridFunction z_minus, z_plus;
  double reference = 0.0;  ///< discrete energy of the wells
  double d_K = std::numeric_limits<double>::quiet_NaN();  ///< continuum value, when known
  double well_gap = 0.0;   ///< |E(z+) - E(z-)|
  SymmetryMode symmetry = SymmetryMode::none;
  QuotientMode quotient = QuotientMode::none;

  const Grid& grid() const { return energy.grid(); }
  Index components() const { return energy.components(); }
  AmbientSpace space() const { return energy.space(); }
  double lambda() const { return energy.density().lambda; }

  std::optional<Embedding> embedding() const {
    if (symmetry == SymmetryMode::odd_first_component) return odd_first_component_embedding(grid(), components());
    return std::nullopt;
  }

  double W(const Point& x) const { return energy.value(x) - reference; }

  double K(const Point& x) const {
    const double w = W(x);
    return w > 0.0 ? std::sqrt(2.0 * w) : 0.0;
  }

  /// Weighted space for the geodesic solver. Slightly negative W (grid
  /// pinning of translates) is clamped to zero.
  WeightedSpace weighted() const {
    const auto self = std::make_shared<EffectivePotentialSpace>(*this);
    return WeightedSpace{space(), [self](const Point& x) { return self->K(x); },
                         [self](const Point& x) {
                           const double k = self->K(x);
                           if (!(k > 0.0)) return Point(Point::Zero(x.size()));
                           return Point(self->energy.gradient(x) / k);
                         },
                         {z_minus.flat(), z_plus.flat()}};
  }

  Landscape landscape() const {
    const auto self = std::make_shared<EffectivePotentialSpace>(*this);
    return Landscape{space(), [self](const Point& x) { return self->W(x); },
                     [self](const Point& x) { return Point(self->energy.gradient(x)); },
                     {z_minus.flat(), z_plus.flat()},
                     lambda()};
  }
};

inline double effective_potential(const GridFunction& v, const EffectivePotentialSpace& sp) {
  if (!v.grid().same_as(sp.grid()) || v.components() != sp.components())
    throw InvalidArgument("grid mismatch between function and effective space");
  return sp.W(v.flat());
}

/// Builds the space from well seeds: both are polished by Newton (inside the
/// symmetric subspace when requested) and the reference is the smaller of
/// their energies.
inline EffectivePotentialSpace make_effective_space(FieldEnergy energy, const Point& z_minus_seed,
                                                    const Point& z_plus_seed, SymmetryMode symmetry = SymmetryMode::none,
                                                    QuotientMode quotient = QuotientMode::none,
                                                    double d_K = std::numeric_limits<double>::quiet_NaN()) {
  std::optional<Embedding> emb;
  if (symmetry == SymmetryMode::odd_first_component) {
    const Point& gm = energy.ghost_minus();
    const Point& gp = energy.ghost_plus();
    detail::require(std::abs(gm[0] + gp[0]) < 1e-12 && (gm.tail(gm.size() - 1) - gp.tail(gp.size() - 1)).norm() < 1e-12,
                    "odd symmetry needs a⁻ to be the reflection of a⁺");
    emb = odd_first_component_embedding(energy.grid(), energy.components());
  }
  const auto zm = polish_well(energy, z_minus_seed, emb);
  const auto zp = polish_well(energy, z_plus_seed, emb);
  if (zm.status != SolverStatus::converged || zp.status != SolverStatus::converged)
    throw ConvergenceError("well polish did not converge (gradient " +
                           std::to_string(std::max(zm.gradient_norm, zp.gradient_norm)) + ")");
  EffectivePotentialSpace sp{energy, energy.wrap(zm.x), energy.wrap(zp.x)};
  sp.reference = std::min(zm.value, zp.value);
  sp.well_gap = std::abs(zm.value - zp.value);
  sp.d_K = d_K;
  sp.symmetry = symmetry;
  sp.quotient = quotient;
  return sp;
}

/// The sin example on (0, π) with M interior nodes, Dirichlet zero data and
/// wells ±sin(y).
inline EffectivePotentialSpace sin_example_space(Index M) {
  const Grid g = Grid::interior(0.0, std::acos(-1.0), M);
  FieldEnergy e(g, FieldDensity::sin_example(), Point::Zero(1), Point::Zero(1));
  Point s(M);
  for (Index j = 0; j < M; ++j) s[j] = std::sin(g.s(j));
  return make_effective_space(e, -s, s, SymmetryMode::none, QuotientMode::none, 0.0);
}

}  // namespace hetcon
