#pragma once

// Functions of one real variable s sampled on a uniform grid, with declared
// constant values beyond the window.
//
// Values are stored node-major (index j * n + c), which is the layout of
// AmbientSpace::grid_l2, so a GridFunction's flat vector is a point of that
// space. One ghost node on each side of the window carries the tail value;
// differences of functions with equal tails therefore have the same L2 norm
// under the trapezoid rule on the extended grid and under h * sum over nodes.

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hetcon/errors.hpp"
#include "hetcon/metric.hpp"

namespace hetcon {

struct Grid {
  double s0 = 0.0;
  double h = 1.0;
  Index points = 1;

  /// M nodes covering [-S, S], both ends included.
  static Grid window(double S, Index M) {
    detail::require(S > 0.0 && M >= 3, "window grid needs S > 0 and at least three nodes");
    return Grid{-S, 2.0 * S / static_cast<double>(M - 1), M};
  }

  /// M interior nodes of (a, b); the ends a and b are the ghost nodes.
  static Grid interior(double a, double b, Index M) {
    detail::require(b > a && M >= 1, "interior grid needs a < b and at least one node");
    const double h = (b - a) / static_cast<double>(M + 1);
    return Grid{a + h, h, M};
  }

  double s(Index j) const { return s0 + h * static_cast<double>(j); }
  double last() const { return s(points - 1); }
  bool same_as(const Grid& o) const { return s0 == o.s0 && h == o.h && points == o.points; }
  /// True when s -> -s maps nodes to nodes.
  bool symmetric() const { return std::abs(s0 + last()) <= 1e-12 * std::max(1.0, std::abs(s0)); }
};

class GridFunction {
 public:
  GridFunction() = default;

  GridFunction(Grid grid, Point flat, Point tail_minus, Point tail_plus)
      : grid_(grid), flat_(std::move(flat)), tail_minus_(std::move(tail_minus)), tail_plus_(std::move(tail_plus)) {
    const Index n = tail_minus_.size();
    detail::require(n >= 1 && tail_plus_.size() == n, "tail values must share one positive dimension");
    detail::require(flat_.size() == grid_.points * n, "grid function has " + std::to_string(flat_.size()) +
                                                          " values, expected " + std::to_string(grid_.points * n));
  }

  static GridFunction sample(const Grid& grid, const std::function<Point(double)>& f, const Point& tail_minus,
                             const Point& tail_plus) {
    const Index n = tail_minus.size();
    Point flat(grid.points * n);
    for (Index j = 0; j < grid.points; ++j) {
      const Point v = f(grid.s(j));
      detail::require(v.size() == n, "sampled value has the wrong dimension");
      flat.segment(j * n, n) = v;
    }
    return GridFunction(grid, std::move(flat), tail_minus, tail_plus);
  }

  /// Same grid and tails, new values.
  GridFunction with_values(Point flat) const { return GridFunction(grid_, std::move(flat), tail_minus_, tail_plus_); }

  const Grid& grid() const { return grid_; }
  Index components() const { return tail_minus_.size(); }
  Index points() const { return grid_.points; }
  const Point& flat() const { return flat_; }
  const Point& tail_minus() const { return tail_minus_; }
  const Point& tail_plus() const { return tail_plus_; }
  AmbientSpace space() const { return AmbientSpace::grid_l2(grid_.points, components(), grid_.h); }

  Point node(Index j) const {
    const Index n = components();
    if (j < 0) return tail_minus_;
    if (j >= grid_.points) return tail_plus_;
    return flat_.segment(j * n, n);
  }
  double value(Index j, Index c) const { return node(j)[c]; }

  /// Piecewise-affine interpolation through the ghost nodes; tail values
  /// beyond them.
  Point at(double s) const {
    const double x = (s - grid_.s0) / grid_.h;
    if (x <= -1.0) return tail_minus_;
    if (x >= static_cast<double>(grid_.points)) return tail_plus_;
    const double fl = std::floor(x);
    const Index j = static_cast<Index>(fl);
    const double lam = x - fl;
    if (lam == 0.0) return node(j);
    return (1.0 - lam) * node(j) + lam * node(j + 1);
  }

  /// The translate s -> v(s - m), sampled on the same grid.
  GridFunction shifted(double m) const {
    if (m == 0.0) return *this;
    return sample(grid_, [&](double s) { return at(s - m); }, tail_minus_, tail_plus_);
  }

  /// Centered first differences, one-sided through the ghost nodes.
  GridFunction derivative() const {
    const Index n = components();
    Point d(flat_.size());
    for (Index j = 0; j < grid_.points; ++j) d.segment(j * n, n) = (node(j + 1) - node(j - 1)) / (2.0 * grid_.h);
    return GridFunction(grid_, std::move(d), Point::Zero(n), Point::Zero(n));
  }

  /// Second differences through the ghost nodes.
  GridFunction second_derivative() const {
    const Index n = components();
    Point d(flat_.size());
    const double h2 = grid_.h * grid_.h;
    for (Index j = 0; j < grid_.points; ++j)
      d.segment(j * n, n) = (node(j + 1) - 2.0 * node(j) + node(j - 1)) / h2;
    return GridFunction(grid_, std::move(d), Point::Zero(n), Point::Zero(n));
  }

  /// Trapezoid rule over the window nodes.
  double l2_norm() const {
    const Index n = components();
    double acc = 0.0;
    for (Index j = 0; j < grid_.points; ++j) {
      const double w = (j == 0 || j + 1 == grid_.points) ? 0.5 : 1.0;
      acc += w * flat_.segment(j * n, n).squaredNorm();
    }
    return std::sqrt(grid_.h * acc);
  }

  /// L2 distance h * sum |v_j - w_j|^2; requires a common grid.
  double distance(const GridFunction& o) const {
    check_compatible(o);
    return std::sqrt(grid_.h * (flat_ - o.flat_).squaredNorm());
  }
  double inner(const GridFunction& o) const {
    check_compatible(o);
    return grid_.h * flat_.dot(o.flat_);
  }

  double sup_distance(const GridFunction& o) const {
    check_compatible(o);
    const Index n = components();
    double m = 0.0;
    for (Index j = 0; j < grid_.points; ++j) m = std::max(m, (flat_.segment(j * n, n) - o.flat_.segment(j * n, n)).norm());
    return m;
  }

  /// |v(window edge) - tail|, reported rather than enforced.
  double tail_mismatch_minus() const { return (node(0) - tail_minus_).norm(); }
  double tail_mismatch_plus() const { return (node(grid_.points - 1) - tail_plus_).norm(); }

  void check_compatible(const GridFunction& o) const {
    if (!grid_.same_as(o.grid_) || components() != o.components())
      throw InvalidArgument("grid functions live on different grids");
  }

  /// CSV with header "s,v1,...,vn".
  void write_csv(std::ostream& os) const {
    const Index n = components();
    os << "s";
    for (Index c = 0; c < n; ++c) os << ",v" << (c + 1);
    os << "\n";
    os.precision(17);
    for (Index j = 0; j < grid_.points; ++j) {
      os << grid_.s(j);
      for (Index c = 0; c < n; ++c) os << ',' << flat_[j * n + c];
      os << "\n";
    }
  }

  /// Reads the layout written by write_csv. Tails default to the edge values.
  static GridFunction read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("s", 0) != 0) throw InvalidArgument("grid function CSV: bad header");
    Index n = 0;
    for (char ch : line) n += ch == ',';
    detail::require(n >= 1, "grid function CSV: no value columns");
    std::vector<double> s, vals;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::vector<double> row;
      while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
      if (static_cast<Index>(row.size()) != n + 1) throw InvalidArgument("grid function CSV: ragged row");
      s.push_back(row[0]);
      vals.insert(vals.end(), row.begin() + 1, row.end());
    }
    detail::require(s.size() >= 2, "grid function CSV: need two rows");
    const Grid g{s.front(), (s.back() - s.front()) / static_cast<double>(s.size() - 1), static_cast<Index>(s.size())};
    const Point flat = Eigen::Map<const Point>(vals.data(), static_cast<Index>(vals.size()));
    return GridFunction(g, flat, flat.head(n), flat.tail(n));
  }

 private:
  Grid grid_;
  Point flat_;
  Point tail_minus_, tail_plus_;
};

}  // namespace hetcon
