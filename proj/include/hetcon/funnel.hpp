#pragma once

// Decreasing funnels around a well: envelopes E solving E'' = c E^{p0-1}
// with E(s0) = eps0 and E -> 0, and the radial projection onto
// {|v(s) - a| <= E(s) beyond s0}.

#include <cmath>
#include <string>

#include "hetcon/errors.hpp"
#include "hetcon/grid_function.hpp"

namespace hetcon {

enum class FunnelSide { plus, minus };

struct FunnelProfile {
  FunnelSide side = FunnelSide::plus;
  double p0 = 2.0;
  double c = 1.0;
  double eps0 = 0.1;
  double s0 = 0.0;
  // Derived. For p0 > 2, E = amplitude * (tau + tau_star)^(-alpha) with tau
  // the distance past s0; s_star = s0 - tau_star on the plus side.
  double alpha = 0.0;
  double amplitude = 0.0;
  double tau_star = 0.0;
  double s_star = 0.0;

  /// Distance past s0 on the funnel side; negative before it.
  double tau(double s) const { return side == FunnelSide::plus ? s - s0 : s0 - s; }
  bool active(double s) const { return tau(s) > 0.0; }

  /// Envelope as a function of tau >= 0.
  double envelope(double t) const {
    if (p0 == 2.0) return eps0 * std::exp(-std::sqrt(c) * t);
    return amplitude * std::pow(t + tau_star, -alpha);
  }
  double envelope_d1(double t) const {
    if (p0 == 2.0) return -std::sqrt(c) * envelope(t);
    return -alpha * amplitude * std::pow(t + tau_star, -alpha - 1.0);
  }
  double envelope_d2(double t) const {
    if (p0 == 2.0) return c * envelope(t);
    return alpha * (alpha + 1.0) * amplitude * std::pow(t + tau_star, -alpha - 2.0);
  }

  double E(double s) const { return envelope(tau(s)); }
  /// d/ds, with the sign of the side.
  double dE(double s) const { return side == FunnelSide::plus ? envelope_d1(tau(s)) : -envelope_d1(tau(s)); }
  double d2E(double s) const { return envelope_d2(tau(s)); }

  /// Integral of E² past s0.
  double tail_l2_squared() const {
    if (p0 == 2.0) return eps0 * eps0 / (2.0 * std::sqrt(c));
    return amplitude * amplitude * std::pow(tau_star, 1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0);
  }

  /// First abscissa past s0 where E drops below `level`.
  double reach(double level) const {
    detail::require(level > 0.0 && level <= eps0, "reach level must lie in (0, eps0]");
    double t;
    if (p0 == 2.0)
      t = std::log(eps0 / level) / std::sqrt(c);
    else
      t = std::pow(amplitude / level, 1.0 / alpha) - tau_star;
    return side == FunnelSide::plus ? s0 + t : s0 - t;
  }
};

inline FunnelProfile funnel_profile(FunnelSide side, double p0, double c, double eps0, double s0) {
  if (!(p0 >= 2.0 && p0 < 6.0)) throw InvalidArgument("funnel exponent p0 must lie in [2, 6), got " + std::to_string(p0));
  if (!(c > 0.0)) throw InvalidArgument("funnel constant c must be positive");
  if (!(eps0 > 0.0 && eps0 < 1.0)) throw InvalidArgument("funnel radius eps0 must lie in (0, 1)");
  FunnelProfile f;
  f.side = side;
  f.p0 = p0;
  f.c = c;
  f.eps0 = eps0;
  f.s0 = s0;
  if (p0 > 2.0) {
    f.alpha = 2.0 / (p0 - 2.0);
    f.amplitude = std::pow(f.alpha * (f.alpha + 1.0) / c, f.alpha / 2.0);
    f.tau_star = std::pow(f.amplitude / eps0, 1.0 / f.alpha);
  }
  f.s_star = side == FunnelSide::plus ? s0 - f.tau_star : s0 + f.tau_star;
  return f;
}

/// Radial clamp of v onto the funnel around `well`. Requires
/// |v(s0) - well| < eps0.
inline GridFunction funnel_project(const GridFunction& v, const FunnelProfile& f, const Point& well) {
  detail::require(well.size() == v.components(), "well dimension does not match the function");
  const double entry = (v.at(f.s0) - well).norm();
  if (!(entry < f.eps0))
    throw InvalidArgument("funnel entry condition fails: |v(s0) - a| = " + std::to_string(entry) +
                          " >= eps0 = " + std::to_string(f.eps0));
  const Index n = v.components();
  Point out = v.flat();
  for (Index j = 0; j < v.points(); ++j) {
    const double s = v.grid().s(j);
    if (!f.active(s)) continue;
    const Point d = out.segment(j * n, n) - well;
    const double r = d.norm(), e = f.E(s);
    if (r > e) out.segment(j * n, n) = well + (e / r) * d;
  }
  return v.with_values(std::move(out));
}

/// Largest excess of |v - well| over E on the active side; 0 when inside.
inline double funnel_violation(const GridFunction& v, const FunnelProfile& f, const Point& well) {
  double worst = 0.0;
  for (Index j = 0; j < v.points(); ++j) {
    const double s = v.grid().s(j);
    if (f.active(s)) worst = std::max(worst, (v.node(j) - well).norm() - f.E(s));
  }
  return worst;
}

}  // namespace hetcon
