#pragma once

// Convolution of a grid function with a raised-cosine bump of half-width
// delta. Beyond the window the function takes its tail values.

#include <cmath>
#include <string>
#include <vector>

#include "hetcon/errors.hpp"
#include "hetcon/grid_function.hpp"

namespace hetcon {

/// Discrete weights of rho(x) = (1 + cos(pi x / delta)) / (2 delta) at the
/// grid offsets k h, |k h| < delta, normalized to unit sum. Index k + K.
inline std::vector<double> mollifier_weights(double delta, double h) {
  if (!(delta >= h)) throw InvalidArgument("mollifier half-width " + std::to_string(delta) +
                                           " is below the grid spacing " + std::to_string(h));
  const double pi = std::acos(-1.0);
  const auto K = static_cast<Index>(std::ceil(delta / h)) - 1;
  std::vector<double> w(static_cast<std::size_t>(2 * K + 1));
  double sum = 0.0;
  for (Index k = -K; k <= K; ++k) {
    const double x = static_cast<double>(k) * h;
    const double r = std::abs(x) < delta ? 1.0 + std::cos(pi * x / delta) : 0.0;
    w[static_cast<std::size_t>(k + K)] = r;
    sum += r;
  }
  for (auto& x : w) x /= sum;
  return w;
}

inline GridFunction mollify(const GridFunction& v, double delta) {
  const auto w = mollifier_weights(delta, v.grid().h);
  const Index K = static_cast<Index>(w.size() / 2), n = v.components(), M = v.points();
  Point out = Point::Zero(v.flat().size());
  for (Index j = 0; j < M; ++j) {
    Point acc = Point::Zero(n);
    for (Index k = -K; k <= K; ++k) acc += w[static_cast<std::size_t>(k + K)] * v.node(j - k);
    out.segment(j * n, n) = acc;
  }
  return v.with_values(std::move(out));
}

/// Sum of h |(v_{j+1} - v_j)/h|² over the window and the two ghost links.
inline double h1_seminorm_squared(const GridFunction& v) {
  double acc = 0.0;
  for (Index j = -1; j < v.points(); ++j) acc += (v.node(j + 1) - v.node(j)).squaredNorm();
  return acc / v.grid().h;
}

}  // namespace hetcon
