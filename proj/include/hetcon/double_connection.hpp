#pragma once

// Double heteroclinic connections u(x1, x2): a minimizing path between the
// two wells z± of the effective potential, equipartitioned in x2 and
// assembled column by column. Each column is a grid function of x1.
//
// Pipeline: seed (linear blend) -> K-length descent -> rounds of
// funnel projection and, in quotient mode, translation gauge fixing, each
// kept only when the K-length does not increase -> equipartition ->
// assembly -> Newton on the discrete 2D energy with the path as initial
// guess -> verification.

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hetcon/errors.hpp"
#include "hetcon/field.hpp"
#include "hetcon/funnel.hpp"
#include "hetcon/geodesic.hpp"
#include "hetcon/grid_function.hpp"
#include "hetcon/heteroclinic.hpp"
#include "hetcon/metric.hpp"
#include "hetcon/optimize.hpp"
#include "hetcon/potentials.hpp"
#include "hetcon/translation.hpp"

namespace hetcon {

struct FunnelSettings {
  bool enabled = true;
  double p0 = 2.0;
  double c = 1.0;
  double eps0 = 0.1;
  double scan_start = 1.0;  ///< first scan window [S, 2S]
};

struct DoubleConnectionOptions {
  int path_nodes = 65;
  int outer_iterations = 3;
  GeodesicOptions geodesic;  ///< `nodes` and `embedding` are set by the solver
  FunnelSettings funnel;
  int x2_nodes = 257;
  double t_max = kInfinity;  ///< cap on the half window in x2
  bool polish_2d = true;
  NewtonOptions newton{60, 1e-11};
  int residual_margin = 5;
  bool spectral_waived = false;
  std::string waiver_reason;
};

struct DoubleConnectionResult {
  Grid x1;
  std::vector<double> x2;
  std::vector<GridFunction> columns;
  GridFunction below, above;  ///< Dirichlet data beyond the x2 window
  SymmetryMode symmetry = SymmetryMode::none;
  QuotientMode quotient = QuotientMode::none;
  double c_minus = 0.0, c_plus = 0.0;
  double energy = 0.0;         ///< sum over x2 of ½||∂₂u||² + W(column)
  double energy_direct = 0.0;  ///< cellwise 2D quadrature
  std::vector<double> m_track;
  std::vector<int> m_which;
  double m_total_variation = 0.0;
  std::vector<double> outer_trace;  ///< K-length after each outer round
  int funnel_rounds_applied = 0;
  int gauge_rounds_applied = 0;
  std::vector<std::string> notes;
  SampledCurve path{std::vector<double>{0.0, 1.0}, std::vector<Point>{Point::Zero(1), Point::Zero(1)}};
  double geodesic_value = 0.0;
  double path_equipartition_defect = 0.0;
  double window = 0.0;  ///< half width of the x2 window
  SolverStatus path_status = SolverStatus::converged;
  SolverStatus polish_status = SolverStatus::converged;
  int polish_iterations = 0;
  double polish_gradient = 0.0;

  double dx2() const { return x2.size() > 1 ? x2[1] - x2[0] : 0.0; }
  /// Column k, with the Dirichlet data at k = -1 and k = size.
  const GridFunction& column(std::ptrdiff_t k) const {
    if (k < 0) return below;
    if (k >= static_cast<std::ptrdiff_t>(columns.size())) return above;
    return columns[static_cast<std::size_t>(k)];
  }
};

/// Discrete 2D energy over a uniform x2 grid with Dirichlet columns beyond it:
///   sum_k dx2 W(U_k) + sum_{k=-1}^{P-1} ||U_{k+1} - U_k||² / (2 dx2).
class PlanarEnergy {
 public:
  PlanarEnergy(const EffectivePotentialSpace& sp, Index columns, double dx2, Point below, Point above)
      : sp_(sp), P_(columns), dt_(dx2), below_(std::move(below)), above_(std::move(above)) {
    D_ = sp_.energy.dim();
  }

  Index dim() const { return P_ * D_; }
  Index column_dim() const { return D_; }

  double value(const Eigen::VectorXd& U) const {
    const double h = sp_.grid().h;
    double kin = 0.0, pot = 0.0;
    for (Index k = -1; k < P_; ++k) kin += (col(U, k + 1) - col(U, k)).squaredNorm();
    for (Index k = 0; k < P_; ++k) pot += sp_.W(U.segment(k * D_, D_));
    return h * kin / (2.0 * dt_) + dt_ * pot;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& U) const {
    const double h = sp_.grid().h;
    Eigen::VectorXd g(U.size());
    for (Index k = 0; k < P_; ++k)
      g.segment(k * D_, D_) = dt_ * sp_.energy.gradient(U.segment(k * D_, D_)) +
                              (h / dt_) * (2.0 * col(U, k) - col(U, k - 1) - col(U, k + 1));
    return g;
  }

  SparseMatrix hessian(const Eigen::VectorXd& U) const {
    const double h = sp_.grid().h;
    std::vector<Eigen::Triplet<double>> t;
    for (Index k = 0; k < P_; ++k) {
      const SparseMatrix Hk = sp_.energy.hessian(U.segment(k * D_, D_));
      for (Index c = 0; c < Hk.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(Hk, c); it; ++it)
          t.emplace_back(k * D_ + it.row(), k * D_ + it.col(), dt_ * it.value());
      for (Index i = 0; i < D_; ++i) {
        t.emplace_back(k * D_ + i, k * D_ + i, 2.0 * h / dt_);
        if (k + 1 < P_) {
          t.emplace_back(k * D_ + i, (k + 1) * D_ + i, -h / dt_);
          t.emplace_back((k + 1) * D_ + i, k * D_ + i, -h / dt_);
        }
      }
    }
    SparseMatrix H(dim(), dim());
    H.setFromTriplets(t.begin(), t.end());
    return H;
  }

 private:
  Point col(const Eigen::VectorXd& U, Index k) const {
    if (k < 0) return below_;
    if (k >= P_) return above_;
    return U.segment(k * D_, D_);
  }

  const EffectivePotentialSpace& sp_;
  Index P_, D_;
  double dt_;
  Point below_, above_;
};

struct ScanResult {
  bool found_minus = false, found_plus = false;
  double s_minus = 0.0, s_plus = 0.0;
  double excess_minus = kInfinity, excess_plus = kInfinity;  ///< best max_i |node_i(s) - a| seen
};

/// Columns s± where every path node is within eps0 of a±. Each side scans
/// [S, 2S] (mirrored on the minus side), doubling S until the window ends.
inline ScanResult s0_scan(const std::vector<GridFunction>& nodes, double eps0, double S = 1.0) {
  detail::require(!nodes.empty(), "s0 scan needs a path");
  detail::require(S > 0.0, "s0 scan start must be positive");
  const Grid& g = nodes.front().grid();
  const Point& am = nodes.front().tail_minus();
  const Point& ap = nodes.front().tail_plus();
  ScanResult out;
  auto worst = [&](Index j, const Point& a) {
    double m = 0.0;
    for (const auto& v : nodes) m = std::max(m, (v.node(j) - a).norm());
    return m;
  };
  for (double lo = S; lo <= g.last() && !out.found_plus; lo *= 2.0) {
    for (Index j = 0; j < g.points; ++j) {
      const double s = g.s(j);
      if (s < lo || s > 2.0 * lo) continue;
      const double w = worst(j, ap);
      out.excess_plus = std::min(out.excess_plus, w);
      if (w < eps0) {
        out.found_plus = true;
        out.s_plus = s;
        break;
      }
    }
  }
  for (double lo = S; -lo >= g.s0 && !out.found_minus; lo *= 2.0) {
    for (Index j = g.points - 1; j >= 0; --j) {
      const double s = g.s(j);
      if (s > -lo || s < -2.0 * lo) continue;
      const double w = worst(j, am);
      out.excess_minus = std::min(out.excess_minus, w);
      if (w < eps0) {
        out.found_minus = true;
        out.s_minus = s;
        break;
      }
    }
  }
  return out;
}

namespace detail {

inline std::vector<GridFunction> wrap_nodes(const SampledCurve& c, const EffectivePotentialSpace& sp) {
  std::vector<GridFunction> out;
  out.reserve(c.size());
  for (const auto& x : c.nodes()) out.push_back(sp.energy.wrap(x));
  return out;
}

inline SampledCurve unwrap_nodes(const std::vector<GridFunction>& v, const SampledCurve& like) {
  std::vector<Point> x;
  x.reserve(v.size());
  for (const auto& f : v) x.push_back(f.flat());
  return SampledCurve(like.times(), std::move(x));
}

inline Embedding block_embedding(const Embedding& e, Index blocks) {
  std::vector<Eigen::Triplet<double>> t;
  for (Index b = 0; b < blocks; ++b)
    for (Index c = 0; c < e.E.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(e.E, c); it; ++it)
        t.emplace_back(b * e.E.rows() + it.row(), b * e.E.cols() + it.col(), it.value());
  Embedding out;
  out.E.resize(blocks * e.E.rows(), blocks * e.E.cols());
  out.E.setFromTriplets(t.begin(), t.end());
  for (Index b = 0; b < blocks; ++b)
    for (Index r : e.representative) out.representative.push_back(b * e.E.rows() + r);
  return out;
}

}  // namespace detail

/// Per-column optimal translation against z±, with the c± end averages.
inline void track_translations(DoubleConnectionResult& r, const EffectivePotentialSpace& sp) {
  r.m_track.clear();
  r.m_which.clear();
  for (const auto& c : r.columns) {
    const auto fit = optimal_translation(c, sp.z_minus, sp.z_plus);
    r.m_track.push_back(fit.m);
    r.m_which.push_back(fit.which);
  }
  r.m_total_variation = 0.0;
  for (std::size_t k = 1; k < r.m_track.size(); ++k)
    if (r.m_which[k] == r.m_which[k - 1]) r.m_total_variation += std::abs(r.m_track[k] - r.m_track[k - 1]);
  const std::size_t P = r.m_track.size();
  const std::size_t tail = std::max<std::size_t>(1, P / 10);
  double lo = 0.0, hi = 0.0;
  for (std::size_t k = 0; k < tail; ++k) {
    lo += r.m_track[k];
    hi += r.m_track[P - 1 - k];
  }
  r.c_minus = lo / static_cast<double>(tail);
  r.c_plus = hi / static_cast<double>(tail);
}

/// Renormalized energy computed both ways.
inline void evaluate_energies(DoubleConnectionResult& r, const EffectivePotentialSpace& sp) {
  const double dt = r.dx2(), h = sp.grid().h;
  const auto P = static_cast<std::ptrdiff_t>(r.columns.size());
  double kin2 = 0.0, pot = 0.0;
  for (std::ptrdiff_t k = -1; k < P; ++k) kin2 += std::pow(r.column(k + 1).distance(r.column(k)), 2);
  for (std::ptrdiff_t k = 0; k < P; ++k) pot += sp.W(r.columns[static_cast<std::size_t>(k)].flat());
  r.energy = kin2 / (2.0 * dt) + dt * pot;

  // Cell by cell: ½|∂₁u|² h dt + ½|∂₂u|² h dt + F h dt, minus the reference per column.
  const Index n = sp.components(), M = sp.grid().points;
  const auto& F = sp.energy.density();
  double direct = 0.0;
  for (std::ptrdiff_t k = -1; k < P; ++k) {
    const GridFunction& a = r.column(k);
    const GridFunction& b = r.column(k + 1);
    for (Index j = 0; j < M; ++j) direct += h * (b.node(j) - a.node(j)).squaredNorm() / (2.0 * dt);
  }
  for (std::ptrdiff_t k = 0; k < P; ++k) {
    const GridFunction& a = r.columns[static_cast<std::size_t>(k)];
    double col = 0.0;
    for (Index j = -1; j < M; ++j) col += (a.node(j + 1) - a.node(j)).squaredNorm() / (2.0 * h);
    for (Index j = 0; j < M; ++j) col += h * F.value(sp.grid().s(j), a.node(j));
    direct += dt * (col - sp.reference);
  }
  (void)n;
  r.energy_direct = direct;
}

namespace detail {

inline DoubleConnectionResult solve_double(const EffectivePotentialSpace& sp, const DoubleConnectionOptions& opts,
                                           bool quotient) {
  if (sp.z_minus.distance(sp.z_plus) < 1e-8) throw InvalidArgument("the two wells coincide; a double connection needs two distinct wells");
  detail::require(opts.path_nodes >= 3, "path needs at least three nodes");
  detail::require(opts.x2_nodes >= 3, "assembly needs at least three x2 nodes");
  const auto ws = sp.weighted();
  const auto emb = sp.embedding();
  GeodesicOptions go = opts.geodesic;
  go.nodes = opts.path_nodes;
  go.embedding = emb;

  DoubleConnectionResult res;
  res.symmetry = sp.symmetry;
  res.quotient = sp.quotient;
  res.x1 = sp.grid();

  std::vector<Point> seed;
  for (int i = 0; i < opts.path_nodes; ++i) {
    const double lam = static_cast<double>(i) / (opts.path_nodes - 1);
    seed.push_back((1.0 - lam) * sp.z_minus.flat() + lam * sp.z_plus.flat());
  }
  auto geo = minimize_k_length(ws, SampledCurve::uniform(seed), go);
  SampledCurve path = geo.curve;
  double value = geo.value;
  res.outer_trace.push_back(value);
  res.path_status = geo.status;

  for (int round = 0; round < opts.outer_iterations; ++round) {
    bool changed = false;
    if (opts.funnel.enabled) {
      auto nodes = wrap_nodes(path, sp);
      const auto scan = s0_scan(nodes, opts.funnel.eps0, opts.funnel.scan_start);
      if (scan.found_minus && scan.found_plus) {
        const auto fp = funnel_profile(FunnelSide::plus, opts.funnel.p0, opts.funnel.c, opts.funnel.eps0, scan.s_plus);
        const auto fm = funnel_profile(FunnelSide::minus, opts.funnel.p0, opts.funnel.c, opts.funnel.eps0, scan.s_minus);
        for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
          nodes[i] = funnel_project(nodes[i], fp, nodes[i].tail_plus());
          nodes[i] = funnel_project(nodes[i], fm, nodes[i].tail_minus());
        }
        const SampledCurve projected = unwrap_nodes(nodes, path);
        const double v = k_length(projected, ws);
        if (v <= value + 1e-10) {
          path = projected;
          value = v;
          ++res.funnel_rounds_applied;
          changed = true;
        }
      } else if (round == 0) {
        res.notes.push_back("s0 scan found no column within eps0 on " +
                            std::string(scan.found_minus ? "the plus side" : "the minus side") +
                            "; funnel projection skipped");
      }
    }
    if (quotient) {
      const auto nodes = wrap_nodes(path, sp);
      const auto fixed = gauge_fix_translations(nodes);
      const SampledCurve gauged = unwrap_nodes(fixed.nodes, path);
      const double v = k_length(gauged, ws);
      if (v <= value + 1e-10) {
        path = gauged;
        value = v;
        ++res.gauge_rounds_applied;
        changed = true;
      }
    }
    if (!changed && round > 0) break;
    geo = minimize_k_length(ws, path, go);
    if (geo.value <= value) {
      path = geo.curve;
      value = geo.value;
    }
    res.path_status = geo.status;
    res.outer_trace.push_back(value);
  }
  res.path = path;
  res.geodesic_value = value;

  EquipartitionOptions eo;
  eo.t_max = opts.t_max;
  eo.output_nodes = opts.x2_nodes;
  const auto conn = reparam_equipartition(path, ws, eo);
  res.path_equipartition_defect = conn.equipartition_defect;
  res.window = conn.window;
  for (const auto& x : conn.curve.nodes()) res.columns.push_back(sp.energy.wrap(x));
  res.x2 = conn.curve.times();
  res.below = sp.energy.wrap(path.front());
  res.above = sp.energy.wrap(path.back());

  if (opts.polish_2d) {
    const Index P = static_cast<Index>(res.columns.size());
    const PlanarEnergy E2(sp, P, res.dx2(), res.below.flat(), res.above.flat());
    std::optional<Embedding> emb2;
    if (emb) emb2 = block_embedding(*emb, P);
    Eigen::VectorXd U(E2.dim());
    for (Index k = 0; k < P; ++k) U.segment(k * E2.column_dim(), E2.column_dim()) = res.columns[static_cast<std::size_t>(k)].flat();
    auto full = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd { return emb2 ? Eigen::VectorXd(emb2->expand(r)) : r; };
    auto fgh = [&](const Eigen::VectorXd& r, Eigen::VectorXd& g, SparseMatrix& H) {
      const Eigen::VectorXd x = full(r);
      const double f = E2.value(x);
      if (!std::isfinite(f)) return f;
      const Eigen::VectorXd gx = E2.gradient(x);
      const SparseMatrix Hx = E2.hessian(x);
      if (emb2) {
        g = emb2->pullback(gx);
        H = SparseMatrix(emb2->E.transpose() * Hx * emb2->E);
      } else {
        g = gx;
        H = Hx;
      }
      return f;
    };
    const Eigen::VectorXd r0 = emb2 ? Eigen::VectorXd(emb2->restrict(U)) : U;
    const auto pol = minimize_newton(fgh, r0, opts.newton);
    U = full(pol.x);
    for (Index k = 0; k < P; ++k)
      res.columns[static_cast<std::size_t>(k)] = sp.energy.wrap(U.segment(k * E2.column_dim(), E2.column_dim()));
    res.polish_status = pol.status;
    res.polish_iterations = pol.iterations;
    res.polish_gradient = pol.grad_norm;
  }
  evaluate_energies(res, sp);
  if (quotient) track_translations(res, sp);
  return res;
}

}  // namespace detail

/// Path solve in the symmetric class of the space (or unconstrained when the
/// space has no symmetry). c± are zero.
inline DoubleConnectionResult solve_symmetric(const EffectivePotentialSpace& sp, const DoubleConnectionOptions& opts = {}) {
  return detail::solve_double(sp, opts, false);
}

/// Translation-quotient solve: gauge fixing between rounds, then the
/// per-column translation track and the end averages c±.
inline DoubleConnectionResult solve_asymmetric(const EffectivePotentialSpace& sp, const DoubleConnectionOptions& opts = {}) {
  if (sp.quotient != QuotientMode::translations)
    throw InvalidArgument("asymmetric mode needs quotient mode 'translations'");
  auto r = detail::solve_double(sp, opts, true);
  if (opts.spectral_waived) r.notes.push_back("spectral audit waived: " + opts.waiver_reason);
  return r;
}

struct DoubleConnectionReport {
  double residual_max = 0.0;
  double residual_l2 = 0.0;
  double x1_edge_minus = 0.0;  ///< sup over x2 of |u(left column) - a⁻|
  double x1_edge_plus = 0.0;
  double x2_end_l2_minus = 0.0;  ///< ||u(., -X2) - z⁻(. - c⁻)||
  double x2_end_l2_plus = 0.0;
  double x2_end_sup_minus = 0.0;
  double x2_end_sup_plus = 0.0;
  std::vector<double> decay_minus, decay_plus;  ///< column distance to z± from the ends inward
  double equipartition_defect = 0.0;
  double oddness_error = 0.0;
  double energy_gap = 0.0;  ///< relative gap between the two energy evaluations
};

/// Interior five-point residual of Δu - ∇_u F(x1, u) with a margin, limits in
/// both directions, and the equipartition defect in x2.
inline DoubleConnectionReport assemble_and_verify(const DoubleConnectionResult& r, const EffectivePotentialSpace& sp,
                                                  int margin = 5) {
  DoubleConnectionReport rep;
  const auto P = static_cast<std::ptrdiff_t>(r.columns.size());
  const Index M = sp.grid().points, n = sp.components();
  const double h = sp.grid().h, dt = r.dx2();
  const auto& F = sp.energy.density();
  double sum2 = 0.0;
  std::size_t count = 0;
  for (std::ptrdiff_t k = margin; k < P - margin; ++k) {
    const GridFunction& c = r.column(k);
    const GridFunction& lo = r.column(k - 1);
    const GridFunction& hi = r.column(k + 1);
    for (Index j = margin; j < M - margin; ++j) {
      const Point u = c.node(j);
      const Point lap = (c.node(j + 1) - 2.0 * u + c.node(j - 1)) / (h * h) + (hi.node(j) - 2.0 * u + lo.node(j)) / (dt * dt);
      const Point res = lap - F.gradient(sp.grid().s(j), u);
      rep.residual_max = std::max(rep.residual_max, res.lpNorm<Eigen::Infinity>());
      sum2 += res.squaredNorm();
      ++count;
    }
  }
  rep.residual_l2 = count ? std::sqrt(sum2 * h * dt) : 0.0;
  for (const auto& c : r.columns) {
    rep.x1_edge_minus = std::max(rep.x1_edge_minus, c.tail_mismatch_minus());
    rep.x1_edge_plus = std::max(rep.x1_edge_plus, c.tail_mismatch_plus());
  }
  const GridFunction zm = sp.z_minus.shifted(r.c_minus), zp = sp.z_plus.shifted(r.c_plus);
  rep.x2_end_l2_minus = r.columns.front().distance(zm);
  rep.x2_end_l2_plus = r.columns.back().distance(zp);
  rep.x2_end_sup_minus = r.columns.front().sup_distance(zm);
  rep.x2_end_sup_plus = r.columns.back().sup_distance(zp);
  for (std::ptrdiff_t k = 0; k < P; ++k) {
    rep.decay_minus.push_back(r.columns[static_cast<std::size_t>(k)].distance(zm));
    rep.decay_plus.push_back(r.columns[static_cast<std::size_t>(P - 1 - k)].distance(zp));
  }
  for (std::ptrdiff_t k = 0; k < P; ++k) {
    const double speed = r.column(k + 1).distance(r.column(k - 1)) / (2.0 * dt);
    rep.equipartition_defect =
        std::max(rep.equipartition_defect, std::abs(0.5 * speed * speed - sp.W(r.columns[static_cast<std::size_t>(k)].flat())));
  }
  if (r.symmetry == SymmetryMode::odd_first_component) {
    for (const auto& c : r.columns)
      for (Index j = 0; j < M; ++j) {
        const Point a = c.node(j), b = c.node(M - 1 - j);
        rep.oddness_error = std::max(rep.oddness_error, std::abs(a[0] + b[0]));
        for (Index q = 1; q < n; ++q) rep.oddness_error = std::max(rep.oddness_error, std::abs(a[q] - b[q]));
      }
  }
  rep.energy_gap = std::abs(r.energy - r.energy_direct) / std::max(1e-300, std::abs(r.energy));
  return rep;
}

/// Samples a 1D connection between wells of W onto the grid: geodesic through
/// `via`, equipartition capped at `t_max`, centered at the d_K midpoint.
inline GridFunction line_connection(const Potential& p, const Point& a_minus, const Point& a_plus,
                                    const std::vector<Point>& via, const Grid& grid, double t_max = kInfinity,
                                    int nodes = 401) {
  const auto ws = make_weight(p);
  GeodesicOptions o;
  o.nodes = nodes;
  o.via = via;
  const auto g = minimize_k_length(ws, a_minus, a_plus, o);
  EquipartitionOptions eo;
  eo.t_max = t_max;
  eo.output_nodes = 4001;
  const auto c = reparam_equipartition(g.curve, ws, eo);
  return GridFunction::sample(grid, [&](double s) { return c.curve.evaluate(s); }, a_minus, a_plus);
}

}  // namespace hetcon
