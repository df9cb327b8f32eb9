#include <gtest/gtest.h>

#include <cmath>

#include "swarmot/error.hpp"
#include "swarmot/measures.hpp"
#include "swarmot/oracle.hpp"
#include "test_support.hpp"

using namespace swarmot;
namespace tk = swarmot::testkit;
using tk::Mix;
using tk::Rng;

namespace {

std::vector<Atom> eleven_unequal() {
  std::vector<Atom> atoms;
  const double m[] = {0.06, 0.11, 0.08, 0.13, 0.07, 0.10, 0.12, 0.05, 0.09, 0.11, 0.08};
  for (int i = 0; i < 11; ++i) atoms.push_back({0.2 * i, m[i]});
  return atoms;
}

}  // namespace

TEST(Density, RejectsBadInput) {
  EXPECT_THROW(Density({0, 1}, {{0.5, 0.5}}), InvalidInput);
  EXPECT_THROW(Density({0, 1}, {{1.5, 1.0}}), InvalidInput);
  EXPECT_THROW(Density({0, 1}, {{0.5, -0.1}, {0.6, 1.1}}), InvalidInput);
  EXPECT_THROW(Density({1, 0}, {{0.5, 1.0}}), InvalidInput);
}

TEST(Density, MergesCoincidentAtoms) {
  const Density d({0, 1}, {{0.5, 0.25}, {0.2, 0.5}, {0.5, 0.25}});
  ASSERT_EQ(d.atoms().size(), 2u);
  EXPECT_DOUBLE_EQ(d.atoms()[1].mass, 0.5);
  EXPECT_DOUBLE_EQ(d.atoms()[0].position, 0.2);
}

TEST(Cdf, SingleAtomIsAStep) {
  const auto F = cdf_of(Density::point({0, 10}, 3.0));
  EXPECT_EQ(F(2.999), 0.0);
  EXPECT_EQ(F(3.0), 1.0);
  EXPECT_EQ(F(7.0), 1.0);
  EXPECT_EQ(F.left_limit(3.0), 0.0);
}

TEST(Cdf, UniformIsIdentity) {
  const auto F = cdf_of(Density::uniform({0, 1}));
  for (double x : {0.0, 0.1, 0.37, 0.9, 1.0}) EXPECT_NEAR(F(x), x, 1e-15);
}

TEST(Cdf, ElevenAtomStaircase) {
  const auto atoms = eleven_unequal();
  const auto F = cdf_of(Density({0, 2}, atoms));
  double acc = 0.0;
  int jumps = 0;
  for (const auto& a : atoms) {
    const double jump = F(a.position) - F.left_limit(a.position);
    EXPECT_NEAR(jump, a.mass, 1e-15);
    jumps += jump > 0.0;
    acc += jump;
  }
  EXPECT_EQ(jumps, 11);
  EXPECT_NEAR(acc, 1.0, 1e-14);
}

TEST(Quantile, UniformIsIdentity) {
  const auto q = quantile_of(Density::uniform({0, 1}));
  for (double z : {0.0, 0.25, 0.5, 0.999, 1.0}) EXPECT_NEAR(q(z), z, 1e-15);
}

TEST(Quantile, UnitAtomIsOneFlat) {
  const auto q = quantile_of(Density::point({0, 10}, 4.2));
  ASSERT_EQ(q.flat_intervals().size(), 1u);
  EXPECT_EQ(q.flat_intervals()[0].z_lo, 0.0);
  EXPECT_EQ(q.flat_intervals()[0].z_hi, 1.0);
  for (double z : {0.0, 0.3, 1.0}) EXPECT_EQ(q(z), 4.2);
}

TEST(Quantile, TwoHalfAtoms) {
  // Generalized inverse by hand: 0 on (0, 0.5], 4 on (0.5, 1].
  const auto q = quantile_of(Density({0, 4}, {{0.0, 0.5}, {4.0, 0.5}}));
  EXPECT_EQ(q(0.0), 0.0);
  EXPECT_EQ(q(0.25), 0.0);
  EXPECT_EQ(q(0.5), 0.0);
  EXPECT_EQ(q.right_limit(0.5), 4.0);
  EXPECT_EQ(q(0.5000001), 4.0);
  EXPECT_EQ(q(1.0), 4.0);
}

TEST(Quantile, MatchesIndependentInverse) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Density d = tk::random_density(rng, {-1, 3}, tk::random_mix(rng));
    const auto q = quantile_of(d);
    for (int j = 1; j < 200; ++j) {
      const double z = j / 200.0 + 1e-7;
      EXPECT_NEAR(q(z), tk::reference_quantile(d, z), 1e-9) << "trial " << trial << " z " << z;
    }
  }
}

TEST(CdfFromQuantile, StaircaseJumps) {
  const QuantileFunction q({0, 3}, {{0.0, 0.3, 1.0, 1.0}, {0.3, 1.0, 2.0, 2.0}});
  const auto F = cdf_from_quantile(q);
  EXPECT_NEAR(F(1.0) - F.left_limit(1.0), 0.3, 1e-15);
  EXPECT_NEAR(F(2.0) - F.left_limit(2.0), 0.7, 1e-15);
  EXPECT_EQ(F(1.5), F(1.0));
}

TEST(CdfFromQuantile, IdentityAndConstant) {
  const auto F = cdf_from_quantile(QuantileFunction({0, 1}, {{0, 1, 0, 1}}));
  EXPECT_NEAR(F(0.4), 0.4, 1e-15);
  const auto G = cdf_from_quantile(QuantileFunction({0, 5}, {{0, 1, 2, 2}}));
  EXPECT_EQ(G(1.99), 0.0);
  EXPECT_EQ(G(2.0), 1.0);
}

TEST(DensityFromQuantile, Examples) {
  const Density u = density_from_quantile(QuantileFunction({0, 1}, {{0, 1, 0, 1}}));
  EXPECT_NEAR(u.density_at(0.3), 1.0, 1e-15);
  const Density a = density_from_quantile(QuantileFunction({0, 10}, {{0, 1, 5, 5}}));
  ASSERT_EQ(a.atoms().size(), 1u);
  EXPECT_EQ(a.atoms()[0].position, 5.0);
  // Q(z) = 2z: half density on [0, 2]; compare with binned pushforward samples.
  const Density h = density_from_quantile(QuantileFunction({0, 2}, {{0, 1, 0, 2}}));
  for (double x : {0.1, 0.9, 1.7}) EXPECT_NEAR(h.density_at(x), 0.5, 1e-15);
  const int n = 100000;
  int in_bin = 0;
  for (int i = 0; i < n; ++i) {
    const double x = 2.0 * (i + 0.5) / n;
    in_bin += x >= 0.4 && x < 0.6;
  }
  EXPECT_NEAR(static_cast<double>(in_bin) / n / 0.2, h.density_at(0.5), 1e-12);
}

TEST(Pushforward, Examples) {
  Rng rng(3);
  const Density d = tk::random_density(rng, {0, 1}, Mix::mixed);
  EXPECT_LT(density_discrepancy(pushforward(d, [](double x) { return x; }), d), 1e-12);
  const Density moved = pushforward(Density::point({0, 5}, 0.0), [](double x) { return x + 3.0; });
  ASSERT_EQ(moved.atoms().size(), 1u);
  EXPECT_EQ(moved.atoms()[0].position, 3.0);
}

TEST(Pushforward, SquareMapByTestFunctions) {
  // Uniform through x^2 has density 1/(2 sqrt y); check against hat test
  // functions psi with  int psi d(f#mu) = int psi(x^2) dx.
  const Density pushed = pushforward(Density::uniform({0, 1}), [](double x) { return x * x; }, 4096);
  const auto F = cdf_of(pushed);
  for (double c : {0.1, 0.3, 0.5, 0.8}) {
    const double w = 0.1;
    auto psi = [&](double y) { return std::max(0.0, 1.0 - std::abs(y - c) / w); };
    const double lhs = tk::integrate_unit([&](double x) { return psi(x * x); }, 4000);
    // Integral against the pushed density, by Gauss-Legendre over the support.
    double rhs = 0.0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
      const double a = c - w + 2 * w * i / n;
      const double b = a + 2 * w / n;
      rhs += psi(0.5 * (a + b)) * (F(b) - F(a));
    }
    EXPECT_NEAR(lhs, rhs, 2e-6) << "c=" << c;
    // Exact: density 1/(2 sqrt y).
    const double exact = tk::integrate_unit([&](double s) {
      const double y = c - w + 2 * w * s;
      return psi(y) / (2.0 * std::sqrt(y)) * 2 * w;
    }, 4000);
    EXPECT_NEAR(lhs, exact, 1e-6);
  }
}

TEST(Pushforward, RejectsDecreasingMap) {
  EXPECT_THROW(pushforward(Density::uniform({0, 1}), [](double x) { return -x; }), InvalidInput);
}

TEST(Wasserstein, TrivialCases) {
  Rng rng(5);
  const Density d = tk::random_density(rng, {0, 2}, Mix::mixed);
  EXPECT_NEAR(wasserstein2(d, d), 0.0, 1e-12);
  EXPECT_NEAR(wasserstein2(Density::point({0, 10}, 1.5), Density::point({0, 10}, 7.0)), 5.5, 1e-14);
}

TEST(Wasserstein, FiveAtomsAgainstLp) {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = tk::random_atoms(rng, 5, {0, 1});
    const auto b = tk::random_atoms(rng, 5, {0, 1});
    const double lib = squared_wasserstein2(Density({0, 1}, a), Density({0, 1}, b));
    EXPECT_NEAR(lib, oracle::lp_wasserstein(a, b), 1e-9) << "trial " << trial;
  }
}

TEST(Wasserstein, AgainstIndependentQuadrature) {
  Rng rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const Density a = tk::random_density(rng, {0, 1}, tk::random_mix(rng));
    const Density b = tk::random_density(rng, {0, 1}, tk::random_mix(rng));
    EXPECT_NEAR(squared_wasserstein2(a, b), tk::reference_squared_distance(a, b), 1e-12) << "trial " << trial;
  }
}

TEST(QuantileDistance, Examples) {
  const QuantileFunction a({0, 1}, {{0, 1, 0, 1}});
  const QuantileFunction b({0, 2}, {{0, 1, 0.7, 1.7}});
  EXPECT_EQ(l2_quantile_distance(a, a), 0.0);
  EXPECT_NEAR(l2_quantile_distance(a, b), 0.7, 1e-15);
}

TEST(QuantileDistance, IsometryOnRandomPairs) {
  Rng rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const Density a = tk::random_density(rng, {-2, 2}, tk::random_mix(rng));
    const Density b = tk::random_density(rng, {-2, 2}, tk::random_mix(rng));
    EXPECT_NEAR(wasserstein2(a, b), l2_quantile_distance(quantile_of(a), quantile_of(b)), 1e-9) << "trial " << trial;
  }
}

TEST(QuantileDistance, StaircasesMatchReconstructedDensities) {
  const QuantileFunction a({0, 4}, {{0, 0.2, 1, 1}, {0.2, 0.7, 2, 2}, {0.7, 1, 3.5, 3.5}});
  const QuantileFunction b({0, 4}, {{0, 0.5, 0.5, 0.5}, {0.5, 1, 3, 3}});
  EXPECT_NEAR(l2_quantile_distance(a, b), wasserstein2(density_from_quantile(a), density_from_quantile(b)), 1e-12);
}

TEST(PseudoInverse, Identities) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Density d = tk::random_density(rng, {0, 3}, tk::random_mix(rng));
    const auto q = quantile_of(d);
    const auto F = cdf_of(d);
    for (int j = 0; j <= 300; ++j) {
      const double x = 3.0 * j / 300;
      // Q(0) is the right limit (support minimum), so the bound needs F(x) > 0.
      if (F(x) > 0.0) EXPECT_LE(q(F(x)), x + 1e-12);
      const double z = j / 300.0;
      EXPECT_GE(F(q(z)), z - 1e-12);
    }
  }
}

TEST(RoundTrip, DensityQuantileDensity) {
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const Density d = tk::random_density(rng, {0, 1}, tk::random_mix(rng));
    const Density back = density_from_quantile(quantile_of(d));
    ASSERT_EQ(back.atoms().size(), d.atoms().size());
    for (std::size_t i = 0; i < d.atoms().size(); ++i) {
      EXPECT_NEAR(back.atoms()[i].position, d.atoms()[i].position, 1e-12);
      EXPECT_NEAR(back.atoms()[i].mass, d.atoms()[i].mass, 1e-12);
    }
    EXPECT_LT(density_discrepancy(back, d), 1e-9);
  }
}

TEST(Interpolation, IsAGeodesic) {
  Rng rng(41);
  const Density a = tk::random_density(rng, {0, 1}, Mix::mixed);
  const Density b = tk::random_density(rng, {0, 1}, Mix::mixed);
  const auto qa = quantile_of(a);
  const auto qb = quantile_of(b);
  const double w = l2_quantile_distance(qa, qb);
  for (double s : {0.1, 0.5, 0.8}) {
    const auto qs = interpolate_quantiles(qa, qb, s);
    EXPECT_NEAR(l2_quantile_distance(qa, qs), s * w, 1e-12);
    EXPECT_NEAR(l2_quantile_distance(qs, qb), (1 - s) * w, 1e-12);
  }
}

TEST(GaussianMixture, MassAndMean) {
  const Density d = gaussian_mixture({0, 10}, 400, {{1, 2.5, 1}, {1, 7.5, 1}});
  EXPECT_NEAR(d.continuous_mass(), 1.0, 1e-12);
  EXPECT_NEAR(d.mean(), 5.0, 1e-9);
}
