#pragma once

// From a K-geodesic to a minimal-action connection on a finite time window:
// the reparametrization φ = G⁻¹ with G = ∫ 1/F, F = K∘γ₀, and the action
// 𝔈_W = ∫ ½|γ̇|² + W(γ).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hetcon/errors.hpp"
#include "hetcon/metric.hpp"
#include "hetcon/potentials.hpp"

namespace hetcon {

/// Midpoint quadrature of ½|γ̇|² + W(γ) with W given on the curve's space.
template <class WFn>
double action_with(const SampledCurve& curve, const AmbientSpace& space, WFn&& W) {
  curve.check_in(space);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const double dt = curve.time(i + 1) - curve.time(i);
    const double d = space.distance(curve.node(i + 1), curve.node(i));
    total += 0.5 * d * d / dt + dt * W(0.5 * (curve.node(i) + curve.node(i + 1)));
  }
  return total;
}

inline double action_EW(const SampledCurve& curve, const Potential& p) {
  return action_with(curve, AmbientSpace::euclidean(p.dim), [&](const Point& x) { return p.eval(x); });
}

inline double action_EW(const SampledCurve& curve, const Landscape& land) {
  return action_with(curve, land.space, land.value);
}

/// Action with W = ½K².
inline double action_EW(const SampledCurve& curve, const WeightedSpace& ws) {
  return action_with(curve, ws.space, [&](const Point& x) {
    const double k = ws(x);
    return 0.5 * k * k;
  });
}

/// max over segments of |½|γ̇|² − ½K(mid)²|.
inline double equipartition_defect(const SampledCurve& curve, const WeightedSpace& ws) {
  double worst = 0.0;
  const auto speed = metric_derivative(curve, ws.space);
  for (std::size_t i = 0; i < speed.size(); ++i) {
    const double k = ws(0.5 * (curve.node(i) + curve.node(i + 1)));
    worst = std::max(worst, std::abs(0.5 * speed[i] * speed[i] - 0.5 * k * k));
  }
  return worst;
}

struct EquipartitionOptions {
  double t_max = kInfinity;       ///< cap on the half window T
  double t_required = 0.0;        ///< fail if the available half window is shorter
  int output_nodes = 2001;
  double floor_fraction = 1e-8;   ///< clamp level of F near a vanishing endpoint, relative to max F
};

struct ConnectionResult {
  SampledCurve curve;
  Point limit_minus, limit_plus;
  double action = 0.0;
  double geodesic_value = 0.0;  ///< midpoint K-length of the input geodesic
  double equipartition_defect = 0.0;
  double window = 0.0;          ///< half width T of [−T, T]
  bool clamped_minus = false;
  bool clamped_plus = false;
  double clamp_level = 0.0;
  double young_slack = 0.0;     ///< action − geodesic_value
};

namespace detail {

// ∫ ds / F over a segment of length ds where F is affine from fa to fb.
inline double inverse_affine_integral(double fa, double fb, double ds) {
  const double diff = fb - fa;
  if (std::abs(diff) <= 1e-12 * std::max(fa, fb)) return ds * 2.0 / (fa + fb);
  return ds * (std::log(fb) - std::log(fa)) / diff;
}

// Position σ ∈ [0, ds] where ∫₀^σ 1/F = g for F affine from fa to fb.
inline double invert_affine_integral(double fa, double fb, double ds, double g) {
  const double diff = fb - fa;
  if (std::abs(diff) <= 1e-12 * std::max(fa, fb)) return std::clamp(g * 0.5 * (fa + fb), 0.0, ds);
  const double slope = diff / ds;
  const double f = fa * std::exp(slope * g);
  return std::clamp((f - fa) / slope, 0.0, ds);
}

// Position σ ∈ [0, ds] where ∫₀^σ F = target for F affine from fa to fb.
inline double invert_affine_mass(double fa, double fb, double ds, double target) {
  const double slope = (fb - fa) / ds;
  if (std::abs(slope) * ds <= 1e-12 * std::max(fa, fb)) return std::clamp(target / fa, 0.0, ds);
  const double disc = std::max(fa * fa + 2.0 * slope * target, 0.0);
  return std::clamp((std::sqrt(disc) - fa) / slope, 0.0, ds);
}

}  // namespace detail

/// Builds the equipartitioned connection γ = γ₀∘G⁻¹ from a geodesic γ₀. The
/// geodesic is read by its nodes; its arc length in d is recomputed. Where F
/// vanishes at an endpoint the integration starts at the point of the end
/// segment where F reaches the clamp level, and the window is derived from
/// the clamped G-range. The output is centered at the d_K midpoint.
inline ConnectionResult reparam_equipartition(const SampledCurve& geodesic, const WeightedSpace& ws,
                                              const EquipartitionOptions& opts = {}) {
  geodesic.check_in(ws.space);
  detail::require(opts.output_nodes >= 3, "equipartition needs at least three output nodes");
  std::vector<Point> x{geodesic.front()};
  for (std::size_t i = 1; i < geodesic.size(); ++i)
    if (ws.space.distance(geodesic.node(i), x.back()) > 0.0) x.push_back(geodesic.node(i));
  if (x.size() < 2) throw InvalidArgument("geodesic has zero length");
  const std::size_t n = x.size();
  std::vector<double> s(n, 0.0), F(n);
  for (std::size_t i = 1; i < n; ++i) s[i] = s[i - 1] + ws.space.distance(x[i], x[i - 1]);
  for (std::size_t i = 0; i < n; ++i) F[i] = ws(x[i]);
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (!(F[i] > 0.0))
      throw InvalidArgument("K vanishes at interior node " + std::to_string(i) +
                            "; remove loops through wells or check the strict triangle inequality");
  if (n == 2 && !(F[0] > 0.0 || F[1] > 0.0)) throw InvalidArgument("K vanishes on the whole geodesic");
  const double fmax = *std::max_element(F.begin(), F.end());
  double level = opts.floor_fraction * fmax;

  // Working node set: possibly clamped start, interior nodes, possibly clamped end.
  std::vector<double> ws_s = s, ws_F = F;
  ConnectionResult res{geodesic};
  auto clamp_end = [&](std::size_t e, std::size_t in) {
    const double fin = F[in];
    const double lv = std::min(level, 0.5 * fin);
    const double lam = (lv - F[e]) / (fin - F[e]);
    ws_s[e] = s[e] + lam * (s[in] - s[e]);
    ws_F[e] = lv;
    return lam;
  };
  double lam_start = 0.0, lam_end = 0.0;
  if (!(F[0] > level)) {
    res.clamped_minus = true;
    lam_start = clamp_end(0, 1);
  }
  if (!(F[n - 1] > level)) {
    res.clamped_plus = true;
    lam_end = clamp_end(n - 1, n - 2);
  }
  res.clamp_level = level;
  Point start = x[0] + lam_start * (x[1] - x[0]);
  Point end = x[n - 1] + lam_end * (x[n - 2] - x[n - 1]);

  std::vector<double> G(n, 0.0);
  for (std::size_t i = 1; i < n; ++i)
    G[i] = G[i - 1] + detail::inverse_affine_integral(ws_F[i - 1], ws_F[i], ws_s[i] - ws_s[i - 1]);

  // d_K midpoint, using the full arc including the clamped ends.
  double mass = 0.0;
  std::vector<double> cum(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) cum[i] = cum[i - 1] + 0.5 * (F[i - 1] + F[i]) * (s[i] - s[i - 1]);
  mass = cum.back();
  double s_mid = 0.5 * (s.front() + s.back());
  if (mass > 0.0) {
    std::size_t k = 0;
    while (k + 2 < n && cum[k + 1] < 0.5 * mass) ++k;
    s_mid = s[k] + detail::invert_affine_mass(F[k], F[k + 1], s[k + 1] - s[k], 0.5 * mass - cum[k]);
  }
  s_mid = std::clamp(s_mid, ws_s.front(), ws_s.back());
  auto F_at = [&](std::size_t k, double ss) {
    const double lam = (ss - ws_s[k]) / (ws_s[k + 1] - ws_s[k]);
    return ws_F[k] + lam * (ws_F[k + 1] - ws_F[k]);
  };
  std::size_t km = 0;
  while (km + 2 < n && ws_s[km + 1] < s_mid) ++km;
  const double G_mid = G[km] + detail::inverse_affine_integral(ws_F[km], F_at(km, s_mid), s_mid - ws_s[km]);

  double T = std::min({G_mid - G.front(), G.back() - G_mid, opts.t_max});
  if (!(T > 0.0)) throw InvalidArgument("equipartition window is empty");
  if (T < opts.t_required)
    throw InvalidArgument("G-range half width " + std::to_string(T) + " is smaller than the requested window " +
                          std::to_string(opts.t_required));

  auto point_at = [&](double g) -> Point {
    g = std::clamp(g, G.front(), G.back());
    std::size_t k = static_cast<std::size_t>(std::upper_bound(G.begin(), G.end(), g) - G.begin());
    k = std::clamp<std::size_t>(k, 1, n - 1) - 1;
    const double ds = ws_s[k + 1] - ws_s[k];
    const double sigma = detail::invert_affine_integral(ws_F[k], ws_F[k + 1], ds, g - G[k]);
    const double lam = sigma / ds;
    const Point a = k == 0 ? start : x[k];
    const Point b = k + 1 == n - 1 ? end : x[k + 1];
    return a + lam * (b - a);
  };

  const int m = opts.output_nodes;
  std::vector<double> times(m);
  std::vector<Point> nodes(m);
  for (int i = 0; i < m; ++i) {
    times[i] = -T + 2.0 * T * i / (m - 1);
    if (i == m - 1) times[i] = T;
    nodes[i] = point_at(G_mid + times[i]);
  }
  res.curve = SampledCurve(std::move(times), std::move(nodes));
  res.limit_minus = geodesic.front();
  res.limit_plus = geodesic.back();
  res.window = T;
  res.geodesic_value = k_length(geodesic, ws);
  res.action = action_EW(res.curve, ws);
  res.equipartition_defect = equipartition_defect(res.curve, ws);
  res.young_slack = res.action - res.geodesic_value;
  return res;
}

struct ConnectionReport {
  double action_gap = 0.0;           ///< action − d_K
  double equipartition_defect = 0.0;
  double approach_minus = 0.0;       ///< |γ(−T) − x⁻|
  double approach_plus = 0.0;        ///< |γ(T) − x⁺|
  double el_residual = 0.0;          ///< max |γ″ − ∇W(γ)| over interior nodes
};

/// Report-only checks of a connection against a landscape W.
inline ConnectionReport verify_connection(const ConnectionResult& r, const Landscape& land) {
  ConnectionReport rep;
  const auto& c = r.curve;
  rep.action_gap = action_EW(c, land) - r.geodesic_value;
  const auto speed = metric_derivative(c, land.space);
  for (std::size_t i = 0; i < speed.size(); ++i)
    rep.equipartition_defect = std::max(
        rep.equipartition_defect,
        std::abs(0.5 * speed[i] * speed[i] - land.value(0.5 * (c.node(i) + c.node(i + 1)))));
  rep.approach_minus = land.space.distance(c.front(), r.limit_minus);
  rep.approach_plus = land.space.distance(c.back(), r.limit_plus);
  for (std::size_t i = 1; i + 1 < c.size(); ++i) {
    const double hm = c.time(i) - c.time(i - 1), hp = c.time(i + 1) - c.time(i);
    const Point acc = 2.0 * ((c.node(i + 1) - c.node(i)) / hp - (c.node(i) - c.node(i - 1)) / hm) / (hp + hm);
    rep.el_residual = std::max(rep.el_residual, land.space.norm(acc - land.riesz_gradient(c.node(i))));
  }
  return rep;
}

inline ConnectionReport verify_connection(const ConnectionResult& r, const Potential& p) {
  return verify_connection(r, as_landscape(p));
}

}  // namespace hetcon
