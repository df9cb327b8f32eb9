#include <gtest/gtest.h>

#include <cmath>

#include "swarmot/partition.hpp"
#include "test_support.hpp"

using namespace swarmot;
namespace tk = swarmot::testkit;
using tk::Mix;
using tk::Rng;

namespace {

QuantileFunction identity_quantile() { return QuantileFunction({0, 1}, {{0, 1, 0, 1}}); }

// Flat at a on [0, 0.3], rising to b, flat at b on [0.7, 1].
QuantileFunction fig_shape(double a = 1.0, double b = 2.0) {
  return QuantileFunction({0, 3}, {{0, 0.3, a, a}, {0.3, 0.7, a, b}, {0.7, 1, b, b}});
}

// Exact integral over [0,1] of (f - g)^2 on a fine partition of both quantiles.
double l2sq(const QuantileFunction& f, const QuantileFunction& g) { return squared_l2_on(f, g, 0.0, 1.0); }

}  // namespace

TEST(BuildPartition, Examples) {
  EXPECT_TRUE(build_partition(identity_quantile()).trivial());
  const auto one = build_partition(quantile_of(Density::point({0, 1}, 0.3)));
  ASSERT_EQ(one.cells().size(), 1u);
  EXPECT_EQ(one.cells()[0].z_lo, 0.0);
  EXPECT_EQ(one.cells()[0].z_hi, 1.0);
  const auto two = build_partition(fig_shape());
  ASSERT_EQ(two.cells().size(), 2u);
  EXPECT_EQ(two.cells()[0].level, 1.0);
  EXPECT_EQ(two.cells()[1].level, 2.0);
  EXPECT_NEAR(two.singleton_measure(), 0.4, 1e-15);
  EXPECT_EQ(two.cell_of(0.1), 0);
  EXPECT_EQ(two.cell_of(0.5), -1);
  EXPECT_EQ(two.cell_of(0.9), 1);
}

TEST(Average, Examples) {
  // Already piecewise constant: unchanged.
  const auto shape = fig_shape();
  const auto p = build_partition(shape);
  EXPECT_NEAR(l2sq(average_wrt_partition(shape, p), shape), 0.0, 1e-15);
  // One cell [0,1], identity: constant 1/2.
  const auto one = LevelSetPartition({{0.0, 1.0, 0.0}});
  const auto avg = average_wrt_partition(identity_quantile(), one);
  for (double z : {0.0, 0.3, 1.0}) EXPECT_NEAR(avg(z), 0.5, 1e-15);
  // Cells [0, .5], [.5, 1]: 1/4 and 3/4.
  const auto halves = LevelSetPartition({{0.0, 0.5, 0.0}, {0.5, 1.0, 1.0}});
  const auto m = cell_averages(identity_quantile(), halves);
  EXPECT_NEAR(m[0], 0.25, 1e-15);
  EXPECT_NEAR(m[1], 0.75, 1e-15);
}

TEST(AveragedDensity, Examples) {
  Rng rng(1);
  const Density d = tk::random_density(rng, {0, 2}, Mix::mixed);
  EXPECT_LT(density_discrepancy(averaged_density(d, LevelSetPartition()), d), 1e-12);
  const Density single = averaged_density(d, LevelSetPartition({{0.0, 1.0, 0.0}}));
  ASSERT_EQ(single.atoms().size(), 1u);
  EXPECT_NEAR(single.atoms()[0].position, d.mean(), 1e-12);
}

TEST(AveragedDensity, ElevenAtomPartitionGivesElevenAtoms) {
  const double m[] = {0.06, 0.11, 0.08, 0.13, 0.07, 0.10, 0.12, 0.05, 0.09, 0.11, 0.08};
  std::vector<Atom> atoms;
  for (int i = 0; i < 11; ++i) atoms.push_back({0.2 * i, m[i]});
  const auto p = build_partition(quantile_of(Density({0, 2}, atoms)));
  ASSERT_EQ(p.cells().size(), 11u);
  const Density demand = gaussian_mixture({0, 2}, 200, {{0.6, 0.5, 0.04}, {0.4, 1.5, 0.02}});
  const Density reach = averaged_density(demand, p);
  ASSERT_EQ(reach.atoms().size(), 11u);
  for (int i = 0; i < 11; ++i) EXPECT_NEAR(reach.atoms()[static_cast<std::size_t>(i)].mass, m[i], 1e-12);
  EXPECT_NEAR(reach.mean(), demand.mean(), 1e-12);
}

TEST(LimitConstant, Examples) {
  const auto shape = fig_shape();
  const auto p = build_partition(shape);
  const std::vector<double> times{0.0, 1.0, 2.0};
  EXPECT_NEAR(limit_constant_K({shape, shape, shape}, times, p), 0.0, 1e-15);
  Rng rng(2);
  const auto qd = quantile_of(tk::random_density(rng, {0, 1}, Mix::mixed));
  EXPECT_NEAR(limit_constant_K({qd, qd, qd}, times, LevelSetPartition()), 0.0, 1e-15);
  // Uniform demand, one cell, horizon 2: K = 2 / 12.
  const auto u = identity_quantile();
  EXPECT_NEAR(limit_constant_K({u, u, u}, times, LevelSetPartition({{0.0, 1.0, 0.0}})), 2.0 / 12.0, 1e-15);
}

TEST(Properties, OrthogonalDecomposition) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = quantile_of(tk::random_density(rng, {0, 2}, tk::random_mix(rng)));
    const auto p = build_partition(quantile_of(tk::random_density(rng, {0, 2}, Mix::mixed)));
    const auto gbar = average_wrt_partition(g, p);
    // f: piecewise constant on the cells, any values (monotone to stay a quantile).
    std::vector<QuantileSegment> segs;
    double prev_z = 0.0;
    double level = -1.0;
    for (const auto& c : p.cells()) {
      if (c.z_lo > prev_z) segs.push_back({prev_z, c.z_lo, level, level + 0.1});
      level += 0.1 + tk::uniform(rng, 0, 0.5);
      segs.push_back({c.z_lo, c.z_hi, level, level});
      level += 0.1;
      prev_z = c.z_hi;
    }
    if (prev_z < 1.0) segs.push_back({prev_z, 1.0, level, level + 0.1});
    const QuantileFunction f({-2, 10}, segs);
    // f must equal its own average on cells; off cells take f = g so the identity holds on cells.
    double lhs = 0.0;
    double rhs = 0.0;
    for (const auto& c : p.cells()) {
      lhs += squared_l2_on(f, g, c.z_lo, c.z_hi);
      rhs += squared_l2_on(f, gbar, c.z_lo, c.z_hi) + squared_l2_on(g, gbar, c.z_lo, c.z_hi);
    }
    EXPECT_NEAR(lhs, rhs, 1e-10) << "trial " << trial;
  }
}

TEST(Properties, ProjectionIsIdempotentAndNearest) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = quantile_of(tk::random_density(rng, {0, 2}, tk::random_mix(rng)));
    const auto p = build_partition(quantile_of(tk::random_density(rng, {0, 2}, Mix::atoms)));
    const auto gbar = average_wrt_partition(g, p);
    EXPECT_NEAR(l2sq(average_wrt_partition(gbar, p), gbar), 0.0, 1e-15);
    const double best = l2sq(g, gbar);
    EXPECT_NEAR(best, averaging_residual(g, p), 1e-12);
    const auto means = cell_averages(g, p);
    for (int k = 0; k < 20; ++k) {
      // Random piecewise-constant candidate: perturb the cell values.
      double cand = 0.0;
      for (std::size_t c = 0; c < p.cells().size(); ++c) {
        const auto& cell = p.cells()[c];
        const double h = means[c] + tk::uniform(rng, -0.3, 0.3);
        const QuantileFunction hq({-5, 5}, {{0, 1, h, h}});
        cand += squared_l2_on(g, hq, cell.z_lo, cell.z_hi);
      }
      EXPECT_LE(best, cand + 1e-12);
    }
  }
}

TEST(Properties, AveragingKeepsMonotonicity) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = quantile_of(tk::random_density(rng, {0, 2}, tk::random_mix(rng)));
    const auto p = build_partition(quantile_of(tk::random_density(rng, {0, 2}, Mix::mixed)));
    const auto means = cell_averages(g, p);
    for (std::size_t c = 1; c < means.size(); ++c) EXPECT_LE(means[c - 1], means[c] + 1e-12);
    const auto gbar = average_wrt_partition(g, p);
    double prev = -1e300;
    for (int j = 0; j <= 500; ++j) {
      const double v = gbar(j / 500.0);
      EXPECT_GE(v, prev - 1e-12);
      prev = v;
    }
  }
}
