#include <gtest/gtest.h>

#include <cmath>

#include "swarmot/error.hpp"
#include "swarmot/lq.hpp"
#include "swarmot/oracle.hpp"
#include "test_support.hpp"

using namespace swarmot;
namespace tk = swarmot::testkit;

namespace {

constexpr int kSubsteps = 32;

// Backward RK4 on p' = p^2 / alpha^2 - 1, p(T) = 0, with kSubsteps steps per grid step.
std::vector<double> riccati_rk4(double alpha, double T, int nt) {
  auto f = [alpha](double p) { return p * p / (alpha * alpha) - 1.0; };
  std::vector<double> p(static_cast<std::size_t>(nt) + 1, 0.0);
  const double h = -T / nt / kSubsteps;
  for (int k = nt; k > 0; --k) {
    double y = p[static_cast<std::size_t>(k)];
    for (int s = 0; s < kSubsteps; ++s) {
      const double k1 = f(y);
      const double k2 = f(y + 0.5 * h * k1);
      const double k3 = f(y + 0.5 * h * k2);
      const double k4 = f(y + h * k3);
      y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    p[static_cast<std::size_t>(k) - 1] = y;
  }
  return p;
}

std::vector<double> smooth_signal(const LQParams& params, tk::Rng& rng) {
  const double a = tk::uniform(rng, -1, 1);
  const double b = tk::uniform(rng, 0.5, 3);
  const double c = tk::uniform(rng, -1, 1);
  return sample_signal(params, [=](double t) { return a * std::sin(b * t) + c * t / params.horizon; });
}

}  // namespace

TEST(Riccati, BoundaryAndExample) {
  const LQParams params{2.0, 10.0, 1000};
  EXPECT_EQ(riccati(params, 10.0), 0.0);
  EXPECT_NEAR(riccati(params, 0.0), 2.0 * std::tanh(5.0), 1e-15);
  EXPECT_NEAR(riccati(params, 0.0), 1.999819, 1e-6);
  // Long horizon: p -> alpha.
  EXPECT_NEAR(riccati(LQParams{0.5, 100.0, 1000}, 0.0), 0.5, 1e-15);
}

TEST(Riccati, MatchesBackwardRk4) {
  for (double alpha : {0.1, 1.0, 10.0}) {
    for (double T : {0.1, 1.0, 10.0}) {
      const LQParams params{alpha, T, 1000};
      const auto p = riccati_samples(params);
      const auto ref = riccati_rk4(alpha, T, 1000);
      for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(p[k], ref[k], 1e-8) << alpha << " " << T << " " << k;
    }
  }
}

TEST(Transition, ClosedFormValues) {
  const LQParams params{2.0, 10.0, 1000};
  EXPECT_NEAR(transition_r(params, 10.0, 0.0), 1.0 / std::cosh(5.0), 1e-16);
  EXPECT_NEAR(transition_r(params, 10.0, 0.0), 0.0134752, 1e-7);
  for (double t : {1.0, 4.0, 9.0}) {
    EXPECT_NEAR(transition_y(params, t, 0.5), 1.0 / transition_r(params, t, 0.5), 1e-12);
  }
  // No overflow far from the horizon.
  const LQParams stiff{0.01, 50.0, 10000};
  EXPECT_TRUE(std::isfinite(transition_r(stiff, 25.0, 0.0)));
  EXPECT_GE(transition_r(stiff, 25.0, 0.0), 0.0);
}

TEST(Transition, MatchesForwardRk4) {
  // phi' = -(p / alpha^2) phi, phi(tau) = 1.
  for (double alpha : {0.1, 1.0, 10.0}) {
    for (double T : {0.1, 1.0, 10.0}) {
      const LQParams params{alpha, T, 1000};
      const double h = T / 1000 / kSubsteps;
      double phi = 1.0;
      double worst = 0.0;
      auto f = [&](double t, double y) { return -std::tanh((T - t) / alpha) / alpha * y; };
      for (int k = 0; k < 1000 * kSubsteps; ++k) {
        const double t = h * k;
        const double k1 = f(t, phi);
        const double k2 = f(t + 0.5 * h, phi + 0.5 * h * k1);
        const double k3 = f(t + 0.5 * h, phi + 0.5 * h * k2);
        const double k4 = f(t + h, phi + h * k3);
        phi += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        if ((k + 1) % kSubsteps == 0) worst = std::max(worst, std::abs(phi - transition_r(params, params.time((k + 1) / kSubsteps), 0.0)));
      }
      EXPECT_LT(worst, 1e-8) << alpha << " " << T;
    }
  }
}

TEST(Feedforward, ZeroAndStaticDemand) {
  const LQParams params{1.5, 4.0, 400};
  for (double y : feedforward(params, std::vector<double>(401, 0.0))) EXPECT_EQ(y, 0.0);
  const auto y = feedforward(params, std::vector<double>(401, 2.5));
  const auto p = riccati_samples(params);
  for (std::size_t k = 0; k < y.size(); ++k) EXPECT_NEAR(y[k], -p[k] * 2.5, 1e-12);
  EXPECT_EQ(y.back(), 0.0);
}

TEST(Feedforward, SinusoidSteadyState) {
  // Away from the horizon y solves y' = y / alpha + d; for d = sin(w t) the
  // bounded solution is A sin + B cos, A = -alpha / (1 + alpha^2 w^2), B = alpha w A.
  const double alpha = 0.5;
  const double w = 2.0;
  const LQParams params{alpha, 40.0, 8000};
  const auto y = feedforward(params, sample_signal(params, [w](double t) { return std::sin(w * t); }));
  const double A = -alpha / (1 + alpha * alpha * w * w);
  const double B = alpha * w * A;
  for (int k = 1000; k <= 6000; k += 250) {
    const double t = params.time(k);
    EXPECT_NEAR(y[static_cast<std::size_t>(k)], A * std::sin(w * t) + B * std::cos(w * t), 1e-5) << t;
  }
}

TEST(SolveScalar, AlreadyAtTarget) {
  const LQParams params{1.0, 3.0, 300};
  const auto s = solve_scalar(params, 0.7, std::vector<double>(301, 0.7));
  for (std::size_t k = 0; k < s.r.size(); ++k) {
    EXPECT_NEAR(s.r[k], 0.7, 1e-15);
    EXPECT_NEAR(s.u[k], 0.0, 1e-12);
  }
  EXPECT_NEAR(s.cost, 0.0, 1e-20);
}

TEST(SolveScalar, StaticCostClosedForm) {
  for (double alpha : {0.1, 1.0, 2.0, 10.0}) {
    const LQParams params{alpha, 10.0, 1000};
    const auto s = solve_scalar(params, 0.3, std::vector<double>(1001, 1.8));
    EXPECT_NEAR(s.cost, 1.5 * 1.5 * alpha * std::tanh(10.0 / alpha), 1e-10) << alpha;
    for (std::size_t k = 0; k < s.r.size(); k += 100) {
      const double phi = transition_r(params, s.times[k], 0.0);
      EXPECT_NEAR(s.r[k], phi * 0.3 + (1 - phi) * 1.8, 1e-12);
    }
  }
}

TEST(SolveScalar, BoundaryConditions) {
  tk::Rng rng(3);
  const LQParams params{0.7, 5.0, 500};
  const auto s = solve_scalar(params, -0.4, smooth_signal(params, rng));
  EXPECT_EQ(s.r.front(), -0.4);
  EXPECT_EQ(s.p.back(), 0.0);
  EXPECT_EQ(s.y.back(), 0.0);
  EXPECT_NEAR(s.u.back(), 0.0, 1e-15);
}

TEST(SolveScalar, AgreesWithDiscreteRiccatiOracle) {
  tk::Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const LQParams params{tk::uniform(rng, 0.2, 2.0), tk::uniform(rng, 1.0, 5.0), 1000};
    const auto d = smooth_signal(params, rng);
    const double r0 = tk::uniform(rng, -1, 1);
    const auto s = solve_scalar(params, r0, d);
    const auto o = oracle::discrete_lq(params.alpha, params.horizon, r0, d);
    EXPECT_NEAR(o.cost, s.cost, 5e-3 * s.cost) << "trial " << trial;
  }
}

TEST(SolveScalar, PerturbationsCostMore) {
  tk::Rng rng(7);
  const LQParams params{0.8, 3.0, 2000};
  const auto d = smooth_signal(params, rng);
  const auto s = solve_scalar(params, 0.5, d);
  const double base = control_cost(params, 0.5, s.u, d);
  EXPECT_NEAR(base, s.cost, 1e-6);
  for (int trial = 0; trial < 10; ++trial) {
    const double f = tk::uniform(rng, 0.5, 4);
    const double ph = tk::uniform(rng, 0, 6);
    std::vector<double> delta(s.u.size());
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = std::sin(f * s.times[k] + ph);
    auto cost_at = [&](double eps) {
      std::vector<double> u = s.u;
      for (std::size_t k = 0; k < u.size(); ++k) u[k] += eps * delta[k];
      return control_cost(params, 0.5, u, d);
    };
    const double g1 = cost_at(0.05) - base;
    const double g2 = cost_at(0.1) - base;
    EXPECT_GE(g1, -1e-6);
    EXPECT_GE(cost_at(-0.05) - base, -1e-6);
    // Quadratic growth.
    EXPECT_NEAR(g2 / g1, 4.0, 0.05);
  }
}

TEST(SolveScalar, PreservesOrder) {
  tk::Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const LQParams params{tk::uniform(rng, 0.1, 3), tk::uniform(rng, 1, 10), 500};
    const auto di = smooth_signal(params, rng);
    auto dj = di;
    const double gap = tk::uniform(rng, 0, 0.5);
    for (std::size_t k = 0; k < dj.size(); ++k) dj[k] += gap * (1 + std::sin(0.3 * static_cast<double>(k)));
    const double ri = tk::uniform(rng, -2, 2);
    const auto a = solve_scalar(params, ri, di);
    const auto b = solve_scalar(params, ri + tk::uniform(rng, 1e-3, 1), dj);
    for (std::size_t k = 0; k < a.r.size(); ++k) EXPECT_LT(a.r[k], b.r[k]) << "trial " << trial << " k " << k;
  }
}

TEST(SolveScalar, ExactBetweenGridPoints) {
  // state_at/control_at follow the same law as the grid samples.
  tk::Rng rng(11);
  const LQParams coarse{0.6, 2.0, 20};
  const auto d = smooth_signal(coarse, rng);
  const auto s = solve_scalar(coarse, 0.1, d);
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    EXPECT_NEAR(s.state_at(s.times[k]), s.r[k], 1e-12);
    EXPECT_NEAR(s.control_at(s.times[k]), s.u[k], 1e-12);
  }
  // Derivative of the state equals the control.
  const double t = 0.73;
  const double h = 1e-6;
  EXPECT_NEAR((s.state_at(t + h) - s.state_at(t - h)) / (2 * h), s.control_at(t), 1e-6);
}

TEST(LQParams, Validation) {
  EXPECT_THROW(LQParams({0.0, 1.0, 10}).validate(), InvalidInput);
  EXPECT_THROW(LQParams({1.0, -1.0, 10}).validate(), InvalidInput);
  EXPECT_THROW(LQParams({1.0, 1.0, 1}).validate(), InvalidInput);
  EXPECT_THROW(LQParams({0.001, 100.0, 10}).validate(), NumericalError);
}
