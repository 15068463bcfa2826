#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hetcon/field.hpp"
#include "hetcon/funnel.hpp"
#include "hetcon/grid_function.hpp"
#include "hetcon/mollify.hpp"
#include "hetcon/translation.hpp"

using namespace hetcon;

namespace {

const Point kMinus = scalar_point(-1.0), kPlus = scalar_point(1.0);

GridFunction scalar_fn(const Grid& g, const std::function<double(double)>& f) {
  return GridFunction::sample(g, [&](double s) { return scalar_point(f(s)); }, kMinus, kPlus);
}

FieldEnergy double_well_energy(const Grid& g) {
  return FieldEnergy(g, FieldDensity::from_potential(potentials::double_well()), kMinus, kPlus);
}

// Scalar Allen-Cahn space with the odd well tanh.
const EffectivePotentialSpace& tanh_space() {
  static const EffectivePotentialSpace sp = [] {
    const Grid g = Grid::window(12.0, 481);
    const auto z = scalar_fn(g, [](double s) { return std::tanh(s); });
    return make_effective_space(double_well_energy(g), z.flat(), z.flat(), SymmetryMode::odd_first_component,
                                QuotientMode::none, 4.0 / 3.0);
  }();
  return sp;
}

// tanh plus a few Gaussian bumps supported well inside the window.
GridFunction random_profile(const Grid& g, std::mt19937_64& rng, double amp, double lo, double hi) {
  std::uniform_real_distribution<double> a(-amp, amp), c(lo, hi), w(0.3, 1.5);
  std::vector<std::array<double, 3>> bumps(4);
  for (auto& b : bumps) b = {a(rng), c(rng), w(rng)};
  return scalar_fn(g, [&](double s) {
    double v = std::tanh(s);
    for (const auto& b : bumps) v += b[0] * std::exp(-(s - b[1]) * (s - b[1]) / (b[2] * b[2]));
    return v;
  });
}

}  // namespace

TEST(GridFunction, InterpolationTailsAndShift) {
  const Grid g = Grid::window(2.0, 5);
  const auto v = scalar_fn(g, [](double s) { return 0.5 * s; });
  EXPECT_DOUBLE_EQ(v.at(0.5)[0], 0.25);
  EXPECT_EQ(v.at(2.5)[0], 0.5 * (1.0 + 1.0));  // halfway to the ghost node
  EXPECT_EQ(v.at(10.0)[0], 1.0);
  EXPECT_EQ(v.at(-10.0)[0], -1.0);
  const auto w = v.shifted(1.0);
  EXPECT_DOUBLE_EQ(w.node(2)[0], -0.5);
  EXPECT_EQ(v.shifted(0.0).flat(), v.flat());
}

TEST(GridFunction, NormsAndDerivatives) {
  const Grid g = Grid::window(1.0, 201);
  const auto v = GridFunction::sample(g, [](double s) { return scalar_point(s * s); }, Point::Ones(1), Point::Ones(1));
  EXPECT_NEAR(v.l2_norm(), std::sqrt(2.0 / 5.0), 1e-4);
  const auto d = v.derivative();
  EXPECT_NEAR(d.node(50)[0], 2.0 * g.s(50), 1e-12);
  EXPECT_NEAR(v.second_derivative().node(100)[0], 2.0, 1e-9);
  EXPECT_NEAR(v.tail_mismatch_plus(), 0.0, 1e-15);
}

TEST(GridFunction, CsvRoundTrip) {
  const Grid g = Grid::window(3.0, 31);
  const auto v = GridFunction::sample(
      g, [](double s) { return make_point({std::tanh(s), 1.0 / std::cosh(s)}); }, make_point({-1, 0}), make_point({1, 0}));
  std::stringstream ss;
  v.write_csv(ss);
  const auto r = GridFunction::read_csv(ss);
  EXPECT_EQ(r.points(), v.points());
  EXPECT_LT((r.flat() - v.flat()).norm(), 1e-14);
  EXPECT_NEAR(r.grid().h, g.h, 1e-14);
  std::stringstream bad("x,y\n1,2\n");
  EXPECT_THROW(GridFunction::read_csv(bad), InvalidArgument);
}

TEST(GridFunction, MetricDerivativeIsL2NormOfDifferences) {
  const Grid g = Grid::window(5.0, 101);
  std::vector<Point> nodes;
  for (int i = 0; i < 5; ++i) nodes.push_back(scalar_fn(g, [i](double s) { return std::tanh(s - 0.3 * i); }).flat());
  const auto c = SampledCurve::uniform(nodes, 0.0, 2.0);
  const auto space = AmbientSpace::grid_l2(g.points, 1, g.h);
  const auto md = metric_derivative(c, space);
  for (std::size_t i = 0; i < md.size(); ++i) {
    const GridFunction a = scalar_fn(g, [i](double s) { return std::tanh(s - 0.3 * i); });
    const GridFunction b = scalar_fn(g, [i](double s) { return std::tanh(s - 0.3 * (i + 1)); });
    EXPECT_DOUBLE_EQ(md[i], a.distance(b) / 0.5);
  }
}

TEST(FieldEnergy, GradientAndHessianMatchDifferences) {
  const Grid g = Grid::window(3.0, 41);
  const FieldEnergy e(g, FieldDensity::from_potential(potentials::planar_two_well()), make_point({-1, 0}),
                      make_point({1, 0}));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.5);
  Point x(e.dim());
  for (Index i = 0; i < x.size(); ++i) x[i] = n(rng);
  const Point gr = e.gradient(x);
  const Eigen::MatrixXd H = Eigen::MatrixXd(e.hessian(x));
  for (Index i = 0; i < x.size(); i += 7) {
    Point a = x, b = x;
    a[i] += 1e-6;
    b[i] -= 1e-6;
    EXPECT_NEAR(gr[i], (e.value(a) - e.value(b)) / 2e-6, 1e-5 * std::max(1.0, std::abs(gr[i])));
    const Point col = (e.gradient(a) - e.gradient(b)) / 2e-6;
    EXPECT_LT((H.col(i) - col).norm(), 1e-4 * std::max(1.0, col.norm()));
  }
}

TEST(FieldEnergy, GridMismatchThrows) {
  const FieldEnergy e = double_well_energy(Grid::window(2.0, 11));
  EXPECT_THROW(e.value(Point::Zero(10)), InvalidArgument);
  const auto& sp = tanh_space();
  const auto other = scalar_fn(Grid::window(2.0, 11), [](double s) { return s; });
  EXPECT_THROW(effective_potential(other, sp), InvalidArgument);
}

TEST(OddEmbedding, ReflectsFirstComponent) {
  const Grid g = Grid::window(1.0, 5);
  const auto e = odd_first_component_embedding(g, 2);
  Point r(e.reduced_dim());
  for (Index i = 0; i < r.size(); ++i) r[i] = 1.0 + static_cast<double>(i);
  const Point x = e.expand(r);
  for (Index j = 0; j < 5; ++j) {
    EXPECT_EQ(x[j * 2], -x[(4 - j) * 2]);
    EXPECT_EQ(x[j * 2 + 1], x[(4 - j) * 2 + 1]);
  }
  EXPECT_EQ(x[4], 0.0);
  EXPECT_EQ(e.restrict(x), r);
}

TEST(EffectivePotential, WellIsZeroAndReferenceIsDk) {
  const auto& sp = tanh_space();
  EXPECT_NEAR(effective_potential(sp.z_plus, sp), 0.0, 1e-3);
  EXPECT_NEAR(sp.reference, 4.0 / 3.0, 1e-3);
  EXPECT_LT(sp.z_plus.sup_distance(scalar_fn(sp.grid(), [](double s) { return std::tanh(s); })), 1e-3);
}

TEST(EffectivePotential, BumpRaisesTheValue) {
  const auto& sp = tanh_space();
  const auto bump = scalar_fn(sp.grid(), [](double s) { return std::exp(-s * s); });
  const double size = bump.distance(scalar_fn(sp.grid(), [](double) { return 0.0; }));
  for (double sign : {1.0, -1.0}) {
    const Point v = sp.z_plus.flat() + sign * (0.1 / size) * bump.flat();
    EXPECT_GT(effective_potential(sp.z_plus.with_values(v), sp), 1e-4);
  }
}

TEST(EffectivePotential, SinExample) {
  const auto sp = sin_example_space(255);
  const auto s = GridFunction::sample(sp.grid(), [](double y) { return scalar_point(std::sin(y)); }, Point::Zero(1),
                                      Point::Zero(1));
  // Continuum value 0; the discrete wells sit O(h²) from sin.
  EXPECT_NEAR(sp.energy.value(s.flat()), 0.0, 1e-3);
  EXPECT_NEAR(effective_potential(s, sp), 0.0, 1e-3);
  EXPECT_NEAR(sp.reference, 0.0, 1e-3);
  EXPECT_LT(sp.well_gap, 1e-12);
  EXPECT_LT(sp.z_plus.sup_distance(s), 1e-3);
  EXPECT_GT(effective_potential(s.with_values(0.5 * s.flat()), sp), 0.1);
}

TEST(EffectiveWeight, SquareIsTwiceThePotential) {
  const auto& sp = tanh_space();
  const auto ws = sp.weighted();
  const auto v = scalar_fn(sp.grid(), [](double s) { return std::tanh(2.0 * s); });
  const double w = effective_potential(v, sp);
  EXPECT_NEAR(ws(v.flat()) * ws(v.flat()), 2.0 * w, 1e-12);
  EXPECT_EQ(ws(sp.z_plus.flat()), 0.0);
}

TEST(Funnel, ExplicitProfiles) {
  const auto f2 = funnel_profile(FunnelSide::plus, 2.0, 1.0, 0.1, 0.0);
  EXPECT_NEAR(f2.E(1.0), 0.1 * std::exp(-1.0), 1e-15);
  // With c = 2 the p0 = 4 profile is c / (2 (s - s*)).
  const auto f4 = funnel_profile(FunnelSide::plus, 4.0, 2.0, 0.2, 1.0);
  EXPECT_EQ(f4.alpha, 1.0);
  for (double s : {1.0, 2.0, 7.5}) EXPECT_NEAR(f4.E(s), 2.0 / (2.0 * (s - f4.s_star)), 1e-14);
  for (double p0 : {2.0, 2.5, 3.0, 4.0, 5.5})
    for (double eps : {0.01, 0.3, 0.9}) {
      EXPECT_DOUBLE_EQ(funnel_profile(FunnelSide::plus, p0, 0.7, eps, -2.0).E(-2.0), eps);
      EXPECT_DOUBLE_EQ(funnel_profile(FunnelSide::minus, p0, 0.7, eps, 3.0).E(3.0), eps);
    }
}

TEST(Funnel, OdeResidualAndMonotonicity) {
  for (double p0 : {2.0, 2.4, 3.0, 4.0, 5.0, 5.9}) {
    for (auto side : {FunnelSide::plus, FunnelSide::minus}) {
      const auto f = funnel_profile(side, p0, 1.3, 0.2, 0.5);
      double prev = f.E(0.5);
      for (int k = 1; k <= 400; ++k) {
        const double s = side == FunnelSide::plus ? 0.5 + 0.05 * k : 0.5 - 0.05 * k;
        EXPECT_LT(std::abs(f.d2E(s) - f.c * std::pow(f.E(s), p0 - 1.0)), 1e-10);
        EXPECT_LT(f.E(s), prev);
        prev = f.E(s);
      }
      EXPECT_TRUE(std::isfinite(f.tail_l2_squared()));
    }
  }
}

TEST(Funnel, OdeResidualByFiniteDifferences) {
  const auto f = funnel_profile(FunnelSide::plus, 3.0, 0.8, 0.3, 0.0);
  const double h = 1e-3;
  for (double s : {0.5, 1.0, 4.0}) {
    const double fd = (f.E(s + h) - 2.0 * f.E(s) + f.E(s - h)) / (h * h);
    EXPECT_NEAR(fd, f.c * std::pow(f.E(s), 2.0), 1e-6);
    EXPECT_NEAR((f.E(s + h) - f.E(s - h)) / (2 * h), f.dE(s), 1e-6);
  }
}

TEST(Funnel, ScalingInEps0) {
  for (double p0 : {2.0, 3.0, 4.0, 5.0}) {
    const auto a = funnel_profile(FunnelSide::plus, p0, 0.9, 0.05, 0.0);
    const auto b = funnel_profile(FunnelSide::plus, p0, 0.9, 0.10, 0.0);
    EXPECT_NEAR(std::abs(b.dE(0.0)) / std::abs(a.dE(0.0)), std::pow(2.0, p0 / 2.0), 1e-9);
    EXPECT_NEAR(b.tail_l2_squared() / a.tail_l2_squared(), std::pow(2.0, 3.0 - p0 / 2.0), 1e-9);
  }
}

TEST(Funnel, TailIntegralMatchesQuadrature) {
  const auto f = funnel_profile(FunnelSide::minus, 4.0, 1.0, 0.2, 0.0);
  double acc = 0.0;
  const double h = 1e-3;
  for (int k = 0; k < 4000000; ++k) acc += h * f.E(-(k + 0.5) * h) * f.E(-(k + 0.5) * h);
  // Remaining tail beyond 4000 is amplitude² / (4000 + tau*).
  acc += f.amplitude * f.amplitude / (4000.0 + f.tau_star);
  EXPECT_NEAR(acc, f.tail_l2_squared(), 1e-8);
}

TEST(Funnel, DomainErrors) {
  EXPECT_THROW(funnel_profile(FunnelSide::plus, 6.0, 1.0, 0.1, 0.0), InvalidArgument);
  EXPECT_THROW(funnel_profile(FunnelSide::plus, 1.5, 1.0, 0.1, 0.0), InvalidArgument);
  EXPECT_THROW(funnel_profile(FunnelSide::plus, 2.0, 0.0, 0.1, 0.0), InvalidArgument);
  EXPECT_THROW(funnel_profile(FunnelSide::plus, 2.0, 1.0, 1.0, 0.0), InvalidArgument);
}

TEST(FunnelProject, InsideIsUnchanged) {
  const Grid g = Grid::window(10.0, 201);
  const auto f = funnel_profile(FunnelSide::plus, 2.0, 1.0, 0.1, 4.0);
  const auto v = scalar_fn(g, [](double s) { return std::tanh(s); });
  EXPECT_EQ(funnel_project(v, f, kPlus).flat(), v.flat());
  EXPECT_EQ(funnel_violation(v, f, kPlus), 0.0);
}

TEST(FunnelProject, RadialClamp) {
  const Grid g = Grid::window(5.0, 101);
  const auto f = funnel_profile(FunnelSide::plus, 2.0, 1.0, 0.5, 0.0);
  const Point a = make_point({1.0, 0.0});
  const Point e = make_point({0.6, 0.8});
  const auto v = GridFunction::sample(
      g, [&](double s) { return Point(s > 0.0 ? Point(a + 2.0 * f.E(s) * e) : a); }, make_point({-1, 0}), a);
  const auto p = funnel_project(v, f, a);
  for (Index j = 0; j < g.points; ++j) {
    const double s = g.s(j);
    const Point want = s > 0.0 ? Point(a + f.E(s) * e) : a;
    EXPECT_LT((p.node(j) - want).norm(), 1e-15);
  }
}

TEST(FunnelProject, EntryConditionChecked) {
  const Grid g = Grid::window(5.0, 101);
  const auto f = funnel_profile(FunnelSide::plus, 2.0, 1.0, 0.1, 0.0);
  const auto v = scalar_fn(g, [](double s) { return std::tanh(s); });
  EXPECT_THROW(funnel_project(v, f, kPlus), InvalidArgument);
}

TEST(FunnelProject, EnergyDecreasesOnRandomPerturbations) {
  const Grid g = Grid::window(10.0, 401);
  const auto e = double_well_energy(g);
  std::mt19937_64 rng(11);
  int tested = 0;
  for (int trial = 0; tested < 100; ++trial) {
    const auto v = random_profile(g, rng, 0.4, -9.0, 9.0);
    for (auto side : {FunnelSide::plus, FunnelSide::minus}) {
      const double s0 = side == FunnelSide::plus ? 3.0 : -3.0;
      const Point& a = side == FunnelSide::plus ? kPlus : kMinus;
      const auto f = funnel_profile(side, 2.0, 2.0, 0.1, s0);
      if (!((v.at(s0) - a).norm() < f.eps0)) continue;
      const auto p = funnel_project(v, f, a);
      EXPECT_LE(e.value(p.flat()), e.value(v.flat()) + 1e-10);
      ++tested;
    }
  }
}

TEST(FunnelProject, DegenerateWellProfile) {
  // Quartic well at 0: W = u⁴/4 has p0 = 4 and c0 = 1.
  auto p = potentials::polynomial(1, {{0.25, {4}}}, {scalar_point(0)}, 0.0);
  const Grid g = Grid::window(20.0, 801);
  const FieldEnergy e(g, FieldDensity::from_potential(p), Point::Zero(1), Point::Zero(1));
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> a(-0.3, 0.3), c(2.0, 18.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double a1 = a(rng), c1 = c(rng), a2 = a(rng), c2 = c(rng);
    const auto v = GridFunction::sample(
        g,
        [&](double s) {
          return scalar_point(0.05 * std::exp(-s * s) + a1 * std::exp(-(s - c1) * (s - c1)) +
                              a2 * std::exp(-(s - c2) * (s - c2) / 4.0));
        },
        Point::Zero(1), Point::Zero(1));
    const auto f = funnel_profile(FunnelSide::plus, 4.0, 0.5, 0.1, 0.0);
    const auto pr = funnel_project(v, f, Point::Zero(1));
    EXPECT_LE(e.value(pr.flat()), e.value(v.flat()) + 1e-10);
  }
}

TEST(FunnelProject, OneLipschitz) {
  const Grid g = Grid::window(10.0, 401);
  std::mt19937_64 rng(13);
  const auto f = funnel_profile(FunnelSide::plus, 2.0, 2.0, 0.3, 2.0);
  int tested = 0;
  while (tested < 100) {
    const auto v = random_profile(g, rng, 0.5, -9.0, 9.0);
    const auto w = random_profile(g, rng, 0.5, -9.0, 9.0);
    if (!((v.at(2.0) - kPlus).norm() < 0.3 && (w.at(2.0) - kPlus).norm() < 0.3)) continue;
    EXPECT_LE(funnel_project(v, f, kPlus).distance(funnel_project(w, f, kPlus)), v.distance(w) + 1e-14);
    ++tested;
  }
}

TEST(Mollify, ConstantUnchanged) {
  const Grid g = Grid::window(4.0, 81);
  const auto v = GridFunction::sample(g, [](double) { return make_point({0.7, -2.0}); }, make_point({0.7, -2.0}),
                                      make_point({0.7, -2.0}));
  const auto m = mollify(v, 8 * g.h);
  EXPECT_LT((m.flat() - v.flat()).lpNorm<Eigen::Infinity>(), 1e-15);
  EXPECT_THROW(mollify(v, 0.5 * g.h), InvalidArgument);
  const auto w = mollifier_weights(4 * g.h, g.h);
  double sum = 0.0;
  for (double x : w) sum += x;
  EXPECT_NEAR(sum, 1.0, 1e-15);
  EXPECT_EQ(w.size(), 7u);
}

TEST(Mollify, H1SeminormDoesNotIncrease) {
  const Grid g = Grid::window(12.0, 481);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = random_profile(g, rng, 0.5, -8.0, 8.0);
    for (int k : {4, 8, 16})
      EXPECT_LE(h1_seminorm_squared(mollify(v, k * g.h)), h1_seminorm_squared(v) + 1e-12);
  }
}

TEST(Mollify, SmoothingInequality) {
  const auto& sp = tanh_space();
  const double h = sp.grid().h, lam = std::abs(sp.lambda());
  std::mt19937_64 rng(22);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = random_profile(sp.grid(), rng, 0.6, -8.0, 8.0);
    Point x = v.flat();
    for (Index j = 0; j < x.size(); ++j)
      if (std::abs(sp.grid().s(j)) < 8.0) x[j] += noise(rng);
    v = v.with_values(x);
    const double w = effective_potential(v, sp);
    for (int k : {4, 8, 16}) {
      const double delta = k * h;
      const double lhs = effective_potential(mollify(v, delta), sp);
      EXPECT_LE(lhs, w + 8.0 * delta * delta * lam * (w + sp.d_K) + 10.0 * h) << "delta = " << delta;
    }
  }
}

TEST(Translation, ObjectiveIdentities) {
  const Grid g = Grid::window(10.0, 401);
  const auto z = scalar_fn(g, [](double s) { return std::tanh(s); });
  const auto t0 = translation_objective(z, z, 0.0);
  EXPECT_EQ(t0.F, 0.0);
  EXPECT_EQ(t0.dF, 0.0);
  EXPECT_DOUBLE_EQ(t0.d2F, 2.0 * std::pow(z.derivative().distance(z.derivative().with_values(Point::Zero(g.points))), 2));
  const auto v = z.shifted(1.3);
  const auto t1 = translation_objective(v, z, 1.3);
  EXPECT_EQ(t1.F, 0.0);
  EXPECT_EQ(t1.dF, 0.0);
}

TEST(Translation, DerivativeMatchesDifferencesAndCauchySchwarz) {
  const Grid g = Grid::window(10.0, 801);
  const auto z = scalar_fn(g, [](double s) { return std::tanh(s); });
  const auto v = scalar_fn(g, [](double s) { return std::tanh(1.2 * (s - 0.4)) + 0.1 * std::exp(-s * s); });
  for (double m = -3.0; m <= 3.0; m += 0.137) {
    const auto t = translation_objective(v, z, m);
    const double dm = 1e-4;
    const double fd = (translation_objective(v, z, m + dm).F - translation_objective(v, z, m - dm).F) / (2 * dm);
    // The formula uses centered z'; the interpolated objective differs at O(h).
    EXPECT_NEAR(t.dF, fd, 2e-2 * std::max(1.0, std::abs(fd)));
    const double zn = z.derivative().shifted(m).distance(z.derivative().with_values(Point::Zero(g.points)));
    EXPECT_LE(std::abs(t.dF), 2.0 * zn * std::sqrt(t.F) + 1e-12);
  }
  // Near the minimum F'' is positive.
  EXPECT_GT(translation_objective(v, z, 0.4).d2F, 0.0);
}

TEST(OptimalTranslation, ShiftedAndExactWells) {
  const Grid g = Grid::window(12.0, 481);
  const Point am = make_point({-1, 0}), ap = make_point({1, 0});
  const auto zp = GridFunction::sample(
      g, [](double s) { return make_point({std::tanh(s), 0.5 / std::cosh(s)}); }, am, ap);
  const auto zm = GridFunction::sample(
      g, [](double s) { return make_point({std::tanh(s), -0.5 / std::cosh(s)}); }, am, ap);
  const auto f = optimal_translation(zp.shifted(3.0), zm, zp);
  EXPECT_NEAR(f.m, 3.0, 1e-6);
  EXPECT_EQ(f.which, +1);
  EXPECT_TRUE(f.unique);
  const auto f0 = optimal_translation(zm, zm, zp);
  EXPECT_NEAR(f0.m, 0.0, 1e-6);
  EXPECT_EQ(f0.which, -1);
  EXPECT_TRUE(f0.unique);
  // Equidistant from both wells: not unique.
  const auto mid = zm.with_values(0.5 * (zm.flat() + zp.flat()));
  EXPECT_FALSE(optimal_translation(mid, zm, zp).unique);
}

TEST(OptimalTranslation, LipschitzNearTheWell) {
  const Grid g = Grid::window(12.0, 481);
  const auto z = scalar_fn(g, [](double s) { return std::tanh(s); });
  std::mt19937_64 rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto v1 = random_profile(g, rng, 0.03, -6.0, 6.0).shifted(0.5);
    const auto v2 = random_profile(g, rng, 0.03, -6.0, 6.0).shifted(0.5);
    const double dm = std::abs(optimal_translation(v1, z, z).m - optimal_translation(v2, z, z).m);
    worst = std::max(worst, dm / v1.distance(v2));
  }
  // C ~ 1/||z'|| = sqrt(3/4) for tanh.
  EXPECT_LT(worst, 3.0);
}

TEST(GaugeFix, PureTranslationBecomesConstant) {
  const Grid g = Grid::window(12.0, 481);
  std::vector<GridFunction> path;
  for (int i = 0; i <= 20; ++i) path.push_back(scalar_fn(g, [i](double s) { return std::tanh(s - 0.1 * i); }));
  const auto r = gauge_fix_translations(path);
  for (std::size_t i = 1; i < r.nodes.size(); ++i) {
    EXPECT_LT(r.nodes[i].distance(r.nodes[0]), 5e-3);
    EXPECT_NEAR(r.shifts[i], -0.1 * static_cast<double>(i), 1e-3);
  }
}

TEST(GaugeFix, OrthogonalPathHasNoShift) {
  const Grid g = Grid::window(12.0, 481);
  std::vector<GridFunction> path;
  // Odd perturbations are orthogonal to the even translation mode sech².
  for (int i = 0; i <= 10; ++i)
    path.push_back(scalar_fn(g, [i](double s) { return std::tanh(s) + 0.02 * i * s * std::exp(-s * s); }));
  const auto r = gauge_fix_translations(path);
  // Affine interpolation biases each step by O(h²).
  const double h = g.h;
  for (std::size_t i = 0; i < r.shifts.size(); ++i) EXPECT_LE(std::abs(r.shifts[i]), static_cast<double>(i) * h * h);
}

TEST(GaugeFix, RandomPathKLengthDoesNotIncrease) {
  const auto& sp = tanh_space();
  const auto ws = sp.weighted();
  std::mt19937_64 rng(41);
  std::normal_distribution<double> step(0.0, 0.15);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<GridFunction> path;
    double m = 0.0;
    for (int i = 0; i <= 15; ++i) {
      m += step(rng);
      auto v = random_profile(sp.grid(), rng, 0.05, -5.0, 5.0).shifted(m);
      path.push_back(v);
    }
    const auto r = gauge_fix_translations(path);
    std::vector<Point> a, b;
    for (const auto& v : path) a.push_back(v.flat());
    for (const auto& v : r.nodes) b.push_back(v.flat());
    const double before = k_length(SampledCurve::uniform(a), ws);
    const double after = k_length(SampledCurve::uniform(b), ws);
    EXPECT_LE(after, before + 1e-10);
    // Node energies move only by interpolation slack.
    for (std::size_t i = 0; i < path.size(); ++i)
      EXPECT_NEAR(effective_potential(r.nodes[i], sp), effective_potential(path[i], sp), 10.0 * sp.grid().h);
  }
}
