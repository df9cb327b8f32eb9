#include "swarmot/lq.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "swarmot/error.hpp"

namespace swarmot {

namespace {

// Largest step-to-alpha ratio for which the per-interval exponentials stay
// well conditioned.
constexpr double kMaxStepRatio = 15.0;

void check_samples(const LQParams& params, const std::vector<double>& d, const char* what) {
  if (d.size() != static_cast<std::size_t>(params.steps) + 1) {
    std::ostringstream msg;
    msg << "lq: " << what << " has " << d.size() << " samples, expected " << params.steps + 1;
    throw InvalidInput(msg.str());
  }
  for (double v : d) {
    if (!std::isfinite(v)) throw InvalidInput(std::string("lq: non-finite value in ") + what);
  }
}

}  // namespace

void LQParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidInput("lq: alpha must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidInput("lq: horizon must be positive");
  if (steps < 2) throw InvalidInput("lq: need at least 2 time steps");
  if (dt() / alpha > kMaxStepRatio) {
    throw NumericalError("lq", "time step exceeds 15 alpha; refine the grid");
  }
}

double LQParams::time(int k) const { return k == steps ? horizon : horizon * k / steps; }

std::vector<double> LQParams::grid() const {
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) t[static_cast<std::size_t>(k)] = time(k);
  return t;
}

double cosh_ratio(double a, double b) {
  a = std::abs(a);
  b = std::abs(b);
  return std::exp(a - b) * (1.0 + std::exp(-2.0 * a)) / (1.0 + std::exp(-2.0 * b));
}

double sinh_cosh_ratio(double a, double b) {
  const double sign = a < 0.0 ? -1.0 : 1.0;
  a = std::abs(a);
  b = std::abs(b);
  return sign * std::exp(a - b) * -std::expm1(-2.0 * a) / (1.0 + std::exp(-2.0 * b));
}

double riccati(const LQParams& params, double t) {
  return params.alpha * std::tanh((params.horizon - t) / params.alpha);
}

std::vector<double> riccati_samples(const LQParams& params) {
  params.validate();
  std::vector<double> p(static_cast<std::size_t>(params.steps) + 1);
  for (int k = 0; k <= params.steps; ++k) p[static_cast<std::size_t>(k)] = riccati(params, params.time(k));
  p.back() = 0.0;
  return p;
}

double transition_r(const LQParams& params, double t, double tau) {
  return cosh_ratio((params.horizon - t) / params.alpha, (params.horizon - tau) / params.alpha);
}

double transition_y(const LQParams& params, double t, double tau) {
  return cosh_ratio((params.horizon - tau) / params.alpha, (params.horizon - t) / params.alpha);
}

std::vector<double> feedforward(const LQParams& params, const std::vector<double>& d) {
  params.validate();
  check_samples(params, d, "demand");
  const double alpha = params.alpha;
  const double h = params.dt();
  const double half = std::sinh(0.5 * h / alpha);
  const std::size_t n = static_cast<std::size_t>(params.steps);
  std::vector<double> y(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    const double a = (params.horizon - params.time(static_cast<int>(k))) / alpha;
    const double a1 = (params.horizon - params.time(static_cast<int>(k) + 1)) / alpha;
    const double slope = (d[k + 1] - d[k]) / h;
    const double mid = 0.5 * (a + a1);
    const double i0 = 2.0 * alpha * cosh_ratio(mid, a) * half;
    const double i1 = -h * alpha * sinh_cosh_ratio(a1, a) + 2.0 * alpha * alpha * sinh_cosh_ratio(mid, a) * half;
    y[k] = cosh_ratio(a1, a) * y[k + 1] - (d[k] * i0 + slope * i1);
  }
  return y;
}

std::size_t ScalarLQSolution::interval_of(double t) const {
  if (t <= times.front()) return 0;
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin());
  return std::min(k - 1, times.size() - 2);
}

double ScalarLQSolution::state_at(double t) const {
  const std::size_t k = interval_of(t);
  const double h = times[k + 1] - times[k];
  const double tau = t - times[k];
  const double slope = (d[k + 1] - d[k]) / h;
  const double w = r[k] - d[k];
  const double wdot = u[k] - slope;
  return d[k] + slope * tau + w * std::cosh(tau / alpha) + alpha * wdot * std::sinh(tau / alpha);
}

double ScalarLQSolution::control_at(double t) const {
  const std::size_t k = interval_of(t);
  const double h = times[k + 1] - times[k];
  const double tau = t - times[k];
  const double slope = (d[k + 1] - d[k]) / h;
  const double w = r[k] - d[k];
  const double wdot = u[k] - slope;
  return slope + (w / alpha) * std::sinh(tau / alpha) + wdot * std::cosh(tau / alpha);
}

double ScalarLQSolution::cost_between(std::size_t k0, std::size_t k1) const {
  double total = 0.0;
  for (std::size_t k = k0; k < k1 && k < interval_cost.size(); ++k) total += interval_cost[k];
  return total;
}

ScalarLQSolution solve_scalar(const LQParams& params, double r0, const std::vector<double>& d) {
  params.validate();
  check_samples(params, d, "demand");
  if (!std::isfinite(r0)) throw InvalidInput("lq: non-finite initial state");

  ScalarLQSolution sol;
  sol.alpha = params.alpha;
  sol.times = params.grid();
  sol.p = riccati_samples(params);
  sol.y = feedforward(params, d);
  sol.d = d;
  const std::size_t n = static_cast<std::size_t>(params.steps);
  sol.r.assign(n + 1, 0.0);
  sol.u.assign(n + 1, 0.0);
  sol.interval_cost.assign(n, 0.0);

  const double alpha = params.alpha;
  const double a2 = alpha * alpha;
  const double h = params.dt();
  const double delta = h / alpha;
  const double ch = std::cosh(delta);
  const double sh = std::sinh(delta);
  const double grow = std::expm1(2.0 * delta);
  const double decay = std::expm1(-2.0 * delta);

  sol.r[0] = r0;
  for (std::size_t k = 0; k <= n; ++k) {
    sol.u[k] = -(sol.p[k] * sol.r[k] + sol.y[k]) / a2;
    if (k == n) break;
    const double slope = (d[k + 1] - d[k]) / h;
    const double w = sol.r[k] - d[k];
    const double wdot = sol.u[k] - slope;
    const double w_end = w * ch + alpha * wdot * sh;
    sol.r[k + 1] = d[k + 1] + w_end;

    const double A = 0.5 * (w + alpha * wdot);
    const double B = 0.5 * (w - alpha * wdot);
    sol.interval_cost[k] = alpha * (A * A * grow - B * B * decay) + 2.0 * a2 * slope * (w_end - w) + a2 * slope * slope * h;
    sol.cost += sol.interval_cost[k];
  }
  return sol;
}

double control_cost(const LQParams& params, double r0, const std::vector<double>& u, const std::vector<double>& d) {
  params.validate();
  check_samples(params, u, "control");
  check_samples(params, d, "demand");
  // Three-point Gauss-Legendre is exact: the error is a quartic on each interval.
  static constexpr std::array<double, 3> nodes{-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr std::array<double, 3> weights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double h = params.dt();
  const double a2 = params.alpha * params.alpha;
  double r = r0;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < u.size(); ++k) {
    const double du = (u[k + 1] - u[k]) / h;
    const double dd = (d[k + 1] - d[k]) / h;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const double s = 0.5 * h * (nodes[q] + 1.0);
      const double state = r + u[k] * s + 0.5 * du * s * s;
      const double err = state - (d[k] + dd * s);
      const double control = u[k] + du * s;
      total += 0.5 * h * weights[q] * (err * err + a2 * control * control);
    }
    r += 0.5 * h * (u[k] + u[k + 1]);
  }
  return total;
}

std::vector<double> sample_signal(const LQParams& params, const std::function<double(double)>& rule) {
  std::vector<double> d(static_cast<std::size_t>(params.steps) + 1);
  for (int k = 0; k <= params.steps; ++k) d[static_cast<std::size_t>(k)] = rule(params.time(k));
  return d;
}

std::vector<double> sample_harmonics(const LQParams& params, double mean, const std::vector<Harmonic>& harmonics) {
  return sample_signal(params, [&](double t) {
    double v = mean;
    for (const auto& h : harmonics) v += h.cos_coef * std::cos(h.omega * t) + h.sin_coef * std::sin(h.omega * t);
    return v;
  });
}

}  // namespace swarmot
