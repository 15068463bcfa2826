#pragma once

// Strict triangle inequality audit of d_K at third wells.

#include <functional>
#include <string>
#include <vector>

#include "hetcon/geodesic.hpp"
#include "hetcon/metric.hpp"

namespace hetcon {

struct StiEntry {
  Point well;
  double d_left = 0.0;    ///< d_K(a⁻, a) upper estimate
  double d_right = 0.0;   ///< d_K(a, a⁺) upper estimate
  double d_direct = 0.0;  ///< d_K(a⁻, a⁺) upper estimate
  double margin = 0.0;    ///< d_left + d_right − d_direct
  bool pass = false;
};

struct StiReport {
  std::vector<StiEntry> entries;
  bool vacuous = false;
  bool pass = true;
  double tolerance = 0.0;  ///< absolute margin threshold used
  std::string note = "margins use minimized upper bounds of d_K; they are estimates, not certificates";
};

using DistanceOracle = std::function<double(const Point&, const Point&)>;

/// For each well other than a⁻, a⁺ reports d_K(a⁻,a) + d_K(a,a⁺) − d_K(a⁻,a⁺).
/// A margin at or below `rel_tolerance * d_direct` fails; the slack absorbs
/// the quadrature error of the three separate solves.
inline StiReport check_sti(const Point& a_minus, const Point& a_plus, const std::vector<Point>& wells,
                           const DistanceOracle& oracle, double rel_tolerance = 1e-3) {
  StiReport rep;
  std::vector<Point> third;
  for (const auto& w : wells)
    if ((w - a_minus).norm() > 1e-9 && (w - a_plus).norm() > 1e-9) third.push_back(w);
  if (third.empty()) {
    rep.vacuous = true;
    return rep;
  }
  const double direct = oracle(a_minus, a_plus);
  rep.tolerance = rel_tolerance * direct;
  for (const auto& a : third) {
    StiEntry e;
    e.well = a;
    e.d_left = oracle(a_minus, a);
    e.d_right = oracle(a, a_plus);
    e.d_direct = direct;
    e.margin = e.d_left + e.d_right - e.d_direct;
    e.pass = e.margin > rep.tolerance;
    rep.pass = rep.pass && e.pass;
    rep.entries.push_back(e);
  }
  return rep;
}

/// Same audit with minimize_k_length as the oracle.
inline StiReport check_sti(const WeightedSpace& ws, const Point& a_minus, const Point& a_plus,
                           const GeodesicOptions& opts = {}, double rel_tolerance = 1e-3) {
  auto oracle = [&](const Point& x, const Point& y) { return minimize_k_length(ws, x, y, opts).value; };
  return check_sti(a_minus, a_plus, ws.zeros, oracle, rel_tolerance);
}

}  // namespace hetcon
