#include <gtest/gtest.h>

#include <random>

#include "hetcon/geodesic.hpp"
#include "hetcon/heteroclinic.hpp"

using namespace hetcon;

namespace {

SampledCurve tanh_curve(double T, int n) {
  std::vector<Point> nodes;
  for (int i = 0; i < n; ++i) nodes.push_back(scalar_point(std::tanh(-T + 2.0 * T * i / (n - 1))));
  return SampledCurve::uniform(nodes, -T, T);
}

ConnectionResult golden() {
  const auto ws = make_weight(potentials::double_well());
  GeodesicOptions o;
  o.nodes = 401;
  const auto g = minimize_k_length(ws, scalar_point(-1), scalar_point(1), o);
  return reparam_equipartition(g.curve, ws);
}

// Time at which a scalar curve crosses zero.
double zero_crossing(const SampledCurve& c) {
  for (std::size_t i = 0; i + 1 < c.size(); ++i)
    if (c.node(i)[0] <= 0.0 && c.node(i + 1)[0] > 0.0) {
      const double a = c.node(i)[0], b = c.node(i + 1)[0];
      return c.time(i) + (c.time(i + 1) - c.time(i)) * (-a) / (b - a);
    }
  return 0.0;
}

}  // namespace

TEST(ActionEW, ConstantAtWellIsZero) {
  const auto c = SampledCurve::uniform({scalar_point(1), scalar_point(1), scalar_point(1)});
  EXPECT_EQ(action_EW(c, potentials::double_well()), 0.0);
}

TEST(ActionEW, TanhMatchesDk) {
  EXPECT_NEAR(action_EW(tanh_curve(10.0, 2001), potentials::double_well()), 4.0 / 3.0, 1e-4);
}

TEST(ActionEW, StraightTraversalHasYoungSlack) {
  std::vector<Point> nodes;
  for (int i = 0; i <= 1000; ++i) nodes.push_back(scalar_point(-1.0 + 2.0 * i / 1000));
  const auto fine = SampledCurve::uniform(nodes, 0.0, 2.0);
  // ½·1²·2 + ∫₀² ½(1 − u²)² dt with u = t − 1 → 1 + 8/15
  EXPECT_NEAR(action_EW(fine, potentials::double_well()), 1.0 + 8.0 / 15.0, 1e-5);
  EXPECT_GT(action_EW(fine, potentials::double_well()), 4.0 / 3.0);
}

TEST(ActionEW, YoungInequalityOnRandomCurves) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  const auto p = potentials::planar_two_well();
  const auto ws = make_weight(p);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Point> nodes;
    std::vector<double> t{0.0};
    for (int i = 0; i < 30; ++i) {
      nodes.push_back(make_point({g(rng), g(rng)}));
      if (i > 0) t.push_back(t.back() + std::exp(g(rng)));
    }
    const SampledCurve c(t, nodes);
    EXPECT_GE(action_EW(c, p), k_length(c, ws) - 1e-9);
  }
}

TEST(ReparamEquipartition, ConstantWeightIsConstantSpeed) {
  const WeightedSpace ws{AmbientSpace::euclidean(1), [](const Point&) { return 2.0; }, nullptr, {}};
  EquipartitionOptions o;
  o.output_nodes = 11;
  const auto r = reparam_equipartition(SampledCurve::uniform({scalar_point(0), scalar_point(1)}), ws, o);
  // G(s) = s/2 on [0,1] so the window is [−¼, ¼] and φ has slope 2.
  EXPECT_NEAR(r.window, 0.25, 1e-15);
  for (std::size_t i = 0; i < r.curve.size(); ++i) EXPECT_NEAR(r.curve.node(i)[0], 0.5 + 2.0 * r.curve.time(i), 1e-14);
  EXPECT_FALSE(r.clamped_minus);
  EXPECT_FALSE(r.clamped_plus);
}

TEST(ReparamEquipartition, DoubleWellMatchesTanh) {
  const auto r = golden();
  const double t0 = zero_crossing(r.curve);
  double err = 0.0;
  for (std::size_t i = 0; i < r.curve.size(); ++i) {
    const double t = r.curve.time(i);
    if (std::abs(t) <= 5.0) err = std::max(err, std::abs(r.curve.node(i)[0] - std::tanh(t - t0)));
  }
  EXPECT_LT(err, 1e-3);
  EXPECT_LT(r.equipartition_defect, 1e-3);
  EXPECT_NEAR(r.action, 4.0 / 3.0, 1e-3);
  EXPECT_NEAR(r.geodesic_value, 4.0 / 3.0, 1e-3);
  EXPECT_TRUE(r.clamped_minus);
  EXPECT_TRUE(r.clamped_plus);
  EXPECT_GT(r.window, 5.0);
}

TEST(ReparamEquipartition, MonotoneInTime) {
  const auto r = golden();
  for (std::size_t i = 1; i < r.curve.size(); ++i) EXPECT_GE(r.curve.node(i)[0], r.curve.node(i - 1)[0]);
}

TEST(ReparamEquipartition, InteriorZeroThrows) {
  const auto ws = make_weight(potentials::triple_well());
  const auto c = SampledCurve::uniform({scalar_point(-1), scalar_point(-0.5), scalar_point(0), scalar_point(0.5), scalar_point(1)});
  EXPECT_THROW(reparam_equipartition(c, ws), InvalidArgument);
}

TEST(ReparamEquipartition, RequiredWindowTooLongThrows) {
  const WeightedSpace ws{AmbientSpace::euclidean(1), [](const Point&) { return 2.0; }, nullptr, {}};
  EquipartitionOptions o;
  o.t_required = 1.0;
  EXPECT_THROW(reparam_equipartition(SampledCurve::uniform({scalar_point(0), scalar_point(1)}), ws, o), InvalidArgument);
}

TEST(VerifyConnection, GoldenFixtureDefectsSmall) {
  const auto r = golden();
  const auto rep = verify_connection(r, potentials::double_well());
  EXPECT_LT(std::abs(rep.action_gap), 1e-3);
  EXPECT_LT(rep.equipartition_defect, 1e-3);
  EXPECT_LT(rep.approach_minus, 1e-3);
  EXPECT_LT(rep.approach_plus, 1e-3);
  EXPECT_LT(rep.el_residual, 1e-3);
}

TEST(VerifyConnection, ConstantAtWell) {
  ConnectionResult r{SampledCurve::uniform({scalar_point(1), scalar_point(1), scalar_point(1)})};
  r.limit_minus = r.limit_plus = scalar_point(1);
  const auto rep = verify_connection(r, potentials::double_well());
  EXPECT_EQ(rep.el_residual, 0.0);
  EXPECT_EQ(rep.action_gap, 0.0);
}

TEST(VerifyConnection, UnconvergedGeodesicShowsGap) {
  const auto ws = make_weight(potentials::planar_two_well());
  GeodesicOptions o;
  o.nodes = 41;
  o.max_iter = 3;
  o.max_rounds = 1;
  o.via = {make_point({0.0, 1.5})};
  const auto g = minimize_k_length(ws, make_point({-1, 0}), make_point({1, 0}), o);
  const auto r = reparam_equipartition(g.curve, ws);
  GeodesicOptions full;
  full.nodes = 41;
  full.via = {make_point({0.0, 1.0})};
  const double dk = minimize_k_length(ws, make_point({-1, 0}), make_point({1, 0}), full).value;
  ConnectionResult shifted = r;
  shifted.geodesic_value = dk;
  const auto rep = verify_connection(shifted, potentials::planar_two_well());
  EXPECT_GT(rep.action_gap, 0.0);
}

TEST(ReparamEquipartition, PlanarFixture) {
  const auto p = potentials::planar_two_well();
  const auto ws = make_weight(p);
  GeodesicOptions o;
  o.nodes = 401;
  o.via = {make_point({0.0, 1.0})};
  const auto g = minimize_k_length(ws, p.wells[0], p.wells[1], o);
  // The wells are quartic along the valleys, so the approach is algebraic and
  // the window is capped.
  EquipartitionOptions eo;
  eo.t_max = 30.0;
  eo.output_nodes = 4001;
  const auto r = reparam_equipartition(g.curve, ws, eo);
  EXPECT_LT(r.equipartition_defect, 5e-2);
  EXPECT_EQ(r.window, 30.0);
  const auto rep = verify_connection(r, p);
  EXPECT_LT(std::abs(rep.action_gap), 5e-3);
  // The minimal connection leaves the axis: the straight path costs 3.266.
  EXPECT_LT(r.geodesic_value, 3.0);
}
