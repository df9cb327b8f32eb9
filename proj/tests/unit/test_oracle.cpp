#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "swarmot/error.hpp"
#include "swarmot/oracle.hpp"
#include "test_support.hpp"

using namespace swarmot;
namespace tk = swarmot::testkit;

TEST(LpWasserstein, TrivialCases) {
  const std::vector<Atom> a{{0.3, 1.0}};
  const std::vector<Atom> b{{0.9, 1.0}};
  EXPECT_NEAR(oracle::lp_wasserstein(a, a), 0.0, 1e-15);
  EXPECT_NEAR(oracle::lp_wasserstein(a, b), 0.36, 1e-15);
  const std::vector<Atom> two{{0.0, 0.5}, {1.0, 0.5}};
  EXPECT_NEAR(oracle::lp_wasserstein(two, {{0.5, 1.0}}), 0.25, 1e-15);
  EXPECT_NEAR(oracle::permutation_wasserstein(two, {{1.0, 0.5}, {0.0, 0.5}}), 0.0, 1e-15);
}

TEST(LpWasserstein, MethodsAgree) {
  tk::Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = tk::uniform_int(rng, 1, 6);
    const auto a = tk::random_atoms(rng, n, {0, 1}, true);
    const auto b = tk::random_atoms(rng, n, {0, 1}, true);
    const double perm = oracle::permutation_wasserstein(a, b);
    EXPECT_NEAR(oracle::northwest_wasserstein(a, b), perm, 1e-12);
    EXPECT_NEAR(oracle::simplex_wasserstein(a, b), perm, 1e-12);
    const auto c = tk::random_atoms(rng, tk::uniform_int(rng, 1, 6), {0, 1});
    const auto e = tk::random_atoms(rng, tk::uniform_int(rng, 1, 6), {0, 1});
    EXPECT_NEAR(oracle::simplex_wasserstein(c, e), oracle::northwest_wasserstein(c, e), 1e-10);
  }
}

TEST(LpWasserstein, RejectsBadInputs) {
  std::vector<Atom> many;
  for (int i = 0; i < 9; ++i) many.push_back({0.1 * i, 1.0 / 9});
  EXPECT_THROW(oracle::lp_wasserstein(many, {{0.0, 1.0}}), InvalidInput);
  EXPECT_THROW(oracle::lp_wasserstein({}, {{0.0, 1.0}}), InvalidInput);
  EXPECT_THROW(oracle::permutation_wasserstein({{0.0, 0.3}, {1.0, 0.7}}, {{0.0, 0.5}, {1.0, 0.5}}), InvalidInput);
}

TEST(DiscreteLQ, StaticTargetMatchesClosedForm) {
  // Fine grid: discrete optimum converges to (r0 - c)^2 alpha tanh(T / alpha).
  const double alpha = 0.7;
  const double T = 3.0;
  const auto res = oracle::discrete_lq(alpha, T, 0.0, std::vector<double>(20001, 1.0));
  EXPECT_NEAR(res.cost, alpha * std::tanh(T / alpha), 1e-3);
  EXPECT_EQ(res.r.front(), 0.0);
}

TEST(DiscreteLQ, SinusoidGain) {
  const double alpha = 0.5;
  const double w = 3.0;
  const double T = 40.0;
  const int nt = 80000;
  std::vector<double> d(nt + 1);
  for (int k = 0; k <= nt; ++k) d[static_cast<std::size_t>(k)] = std::sin(w * T * k / nt);
  const auto res = oracle::discrete_lq(alpha, T, 0.0, d);
  // Project r onto sin and cos over whole periods inside [10, 30].
  const double P = 2 * std::numbers::pi / w;
  const double t0 = 10.0;
  const double t1 = t0 + P * std::floor(20.0 / P);
  double s = 0.0;
  double c = 0.0;
  const double h = T / nt;
  for (int k = 0; k < nt; ++k) {
    const double t = h * k;
    if (t < t0 || t >= t1) continue;
    s += res.r[static_cast<std::size_t>(k)] * std::sin(w * t) * h;
    c += res.r[static_cast<std::size_t>(k)] * std::cos(w * t) * h;
  }
  const double amp = 2.0 * std::hypot(s, c) / (t1 - t0);
  EXPECT_NEAR(amp, 1.0 / (alpha * alpha * w * w + 1.0), 1e-3);
  EXPECT_NEAR(std::atan2(c, s), 0.0, 1e-3);
}

TEST(DirectControl, SingleAtomStaticDemand) {
  oracle::DiscreteInstance inst;
  inst.resource = {{0.2, 1.0}};
  inst.alpha = 1.0;
  inst.horizon = 2.0;
  inst.nt = 200;
  inst.restarts = 3;
  inst.demand.assign(201, Density::point({0, 2}, 1.4));
  const auto res = oracle::direct_optimal_control(inst);
  const double exact = 1.2 * 1.2 * std::tanh(2.0);
  EXPECT_NEAR(res.cost, exact, 5e-3 * exact);
  EXPECT_NEAR(res.positions.front()[0], 0.2, 1e-15);
  // Monotone approach to the target.
  for (std::size_t k = 1; k < res.positions.size(); ++k) EXPECT_GE(res.positions[k][0], res.positions[k - 1][0] - 1e-9);
}

TEST(DirectControl, TwoAtomsStayOrdered) {
  oracle::DiscreteInstance inst;
  inst.resource = {{0.0, 0.5}, {0.3, 0.5}};
  inst.alpha = 0.5;
  inst.horizon = 1.0;
  inst.nt = 100;
  inst.restarts = 3;
  inst.demand.assign(101, Density({0, 1}, {{0.4, 0.5}, {0.9, 0.5}}));
  const auto res = oracle::direct_optimal_control(inst);
  for (const auto& row : res.positions) EXPECT_LT(row[0], row[1]);
  EXPECT_NEAR(res.positions.back()[0], 0.0 + (0.4 - 0.0) * (1 - 1 / std::cosh(2.0)), 0.02);
}

TEST(DirectControl, RejectsBadInstance) {
  oracle::DiscreteInstance inst;
  inst.resource = {{0.0, 1.0}};
  inst.nt = 10;
  inst.demand.assign(5, Density::point({0, 1}, 0.5));
  EXPECT_THROW(oracle::direct_optimal_control(inst), InvalidInput);
}

TEST(DirectControl, RejectsSwapsEvenWhenCheaper) {
  // Swapping would let the heavy atom take the heavy demand on the right.
  oracle::DiscreteInstance inst;
  inst.resource = {{0.0, 0.8}, {0.1, 0.2}};
  inst.alpha = 0.3;
  inst.horizon = 2.0;
  inst.nt = 100;
  inst.restarts = 4;
  inst.demand.assign(101, Density({-1, 2}, {{-1.0, 0.2}, {1.1, 0.8}}));
  const auto res = oracle::direct_optimal_control(inst);
  for (const auto& row : res.positions) EXPECT_LT(row[0], row[1]);
  inst.resource = {{0.3, 0.5}, {0.3, 0.5}};
  EXPECT_THROW(oracle::direct_optimal_control(inst), InvalidInput);
}
