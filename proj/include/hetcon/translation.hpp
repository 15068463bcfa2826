#pragma once

// Translation geometry on the line: the objective F(m) = ||v - z(. - m)||²,
// the optimal translation onto a pair of wells, and the gauge fix that
// removes the translation component from a path of grid functions.

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "hetcon/errors.hpp"
#include "hetcon/grid_function.hpp"
#include "hetcon/metric.hpp"

namespace hetcon {

struct TranslationValue {
  double F = 0.0;
  double dF = 0.0;
  double d2F = 0.0;
};

/// F, F' = 2(z'(. - m), v - z(. - m)) and
/// F'' = 2||z'(. - m)||² - 2(z''(. - m), v - z(. - m)), with z, z', z''
/// translated by affine interpolation.
inline TranslationValue translation_objective(const GridFunction& v, const GridFunction& z, double m) {
  v.check_compatible(z);
  const GridFunction zs = z.shifted(m);
  const GridFunction d1 = z.derivative().shifted(m);
  const GridFunction d2 = z.second_derivative().shifted(m);
  const double h = v.grid().h;
  const Point r = v.flat() - zs.flat();
  TranslationValue out;
  out.F = h * r.squaredNorm();
  out.dF = 2.0 * h * d1.flat().dot(r);
  out.d2F = 2.0 * h * d1.flat().squaredNorm() - 2.0 * h * d2.flat().dot(r);
  return out;
}

namespace detail {

inline double translation_F(const GridFunction& v, const GridFunction& z, double m) {
  return v.grid().h * (v.flat() - z.shifted(m).flat()).squaredNorm();
}

// Brent refinement of a bracketed scan minimum.
inline std::pair<double, double> polish_translation(const GridFunction& v, const GridFunction& z, double lo, double hi) {
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::brent_find_minima([&](double m) { return translation_F(v, z, m); }, lo, hi,
                                                        std::numeric_limits<double>::digits / 2, iters);
  return {r.first, r.second};
}

}  // namespace detail

struct TranslationFit {
  double m = 0.0;
  int which = +1;  ///< -1 for z⁻, +1 for z⁺
  bool unique = true;
  double F = 0.0;
  double second_best = std::numeric_limits<double>::infinity();
};

struct TranslationOptions {
  double margin_abs = 1e-8;
  double margin_rel = 1e-2;
  double max_radius = std::numeric_limits<double>::infinity();
};

/// Global minimizer of ||v - z±(. - m)||² over m and the choice of well.
/// The scan radius comes from the coercivity F(m) >~ |a⁺ - a⁻|² |m| / 2 for
/// large |m|; local minima are refined with Brent's method.
inline TranslationFit optimal_translation(const GridFunction& v, const GridFunction& zm, const GridFunction& zp,
                                          const TranslationOptions& opts = {}) {
  v.check_compatible(zm);
  v.check_compatible(zp);
  const Grid& g = v.grid();
  const double jump = std::max((zp.tail_plus() - zp.tail_minus()).squaredNorm(), 1e-12);
  const double f0 = std::min(detail::translation_F(v, zm, 0.0), detail::translation_F(v, zp, 0.0));
  const double width = g.last() - g.s0;
  const double radius = std::min({2.0 + 4.0 * f0 / jump, width, opts.max_radius});
  const auto steps = static_cast<Index>(std::ceil(radius / g.h));
  struct Local {
    double m, F;
    int which;
  };
  std::vector<Local> minima;
  for (int which : {-1, +1}) {
    const GridFunction& z = which < 0 ? zm : zp;
    std::vector<double> F(static_cast<std::size_t>(2 * steps + 1));
    for (Index k = -steps; k <= steps; ++k)
      F[static_cast<std::size_t>(k + steps)] = detail::translation_F(v, z, static_cast<double>(k) * g.h);
    for (Index k = -steps; k <= steps; ++k) {
      const auto i = static_cast<std::size_t>(k + steps);
      const bool left_ok = i == 0 || F[i] <= F[i - 1];
      const bool right_ok = i + 1 == F.size() || F[i] < F[i + 1];
      if (!(left_ok && right_ok)) continue;
      const double c = static_cast<double>(k) * g.h;
      const auto [m, val] = detail::polish_translation(v, z, c - g.h, c + g.h);
      minima.push_back(val < F[i] ? Local{m, val, which} : Local{c, F[i], which});
    }
  }
  detail::require(!minima.empty(), "translation scan found no minimum");
  std::sort(minima.begin(), minima.end(), [](const Local& a, const Local& b) { return a.F < b.F; });
  TranslationFit fit{minima[0].m, minima[0].which, true, minima[0].F};
  for (std::size_t i = 1; i < minima.size(); ++i) {
    if (minima[i].which == fit.which && std::abs(minima[i].m - fit.m) <= 2.0 * g.h) continue;
    fit.second_best = minima[i].F;
    break;
  }
  fit.unique = fit.second_best > fit.F + opts.margin_abs + opts.margin_rel * fit.F;
  return fit;
}

struct GaugeFixResult {
  std::vector<GridFunction> nodes;
  std::vector<double> shifts;  ///< total translation applied to each node
};

/// Shifts node i by the m minimizing ||node_i(. - m) - fixed_{i-1}|| so that
/// consecutive nodes carry no translation component. Node 0 is kept.
inline GaugeFixResult gauge_fix_translations(const std::vector<GridFunction>& path) {
  detail::require(path.size() >= 2, "gauge fix needs at least two nodes");
  GaugeFixResult out;
  out.nodes.push_back(path.front());
  out.shifts.push_back(0.0);
  const double h = path.front().grid().h;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const GridFunction& prev = out.nodes.back();
    const GridFunction& cur = path[i];
    cur.check_compatible(prev);
    const double guess = out.shifts.back();
    const double drift = i >= 2 ? std::abs(out.shifts[i - 1] - out.shifts[i - 2]) : 0.0;
    const double radius = 4.0 * h + 2.0 * drift;
    auto F = [&](double m) { return h * (cur.shifted(m).flat() - prev.flat()).squaredNorm(); };
    // Scan then Brent on the best cell.
    const auto steps = static_cast<Index>(std::ceil(radius / (0.5 * h)));
    double best_m = guess, best_F = F(guess);
    for (Index k = -steps; k <= steps; ++k) {
      const double m = guess + static_cast<double>(k) * 0.5 * h;
      const double f = F(m);
      if (f < best_F) {
        best_F = f;
        best_m = m;
      }
    }
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::brent_find_minima(F, best_m - 0.5 * h, best_m + 0.5 * h,
                                                          std::numeric_limits<double>::digits / 2, iters);
    const double m = r.second < best_F ? r.first : best_m;
    out.nodes.push_back(cur.shifted(m));
    out.shifts.push_back(m);
  }
  return out;
}

}  // namespace hetcon
