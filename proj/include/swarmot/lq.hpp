#pragma once

// Scalar finite-horizon LQ tracking: minimize the integral of (r - d)^2 + alpha^2 u^2
// subject to r' = u, r(0) = r0, on a uniform time grid.

#include <functional>
#include <vector>

namespace swarmot {

struct LQParams {
  double alpha = 1.0;
  double horizon = 1.0;
  /// Number of time steps; the grid has steps + 1 points.
  int steps = 1000;

  void validate() const;
  double dt() const { return horizon / steps; }
  double time(int k) const;
  std::vector<double> grid() const;
};

/// cosh(a) / cosh(b) without overflow.
double cosh_ratio(double a, double b);
/// sinh(a) / cosh(b) without overflow.
double sinh_cosh_ratio(double a, double b);

/// p(t) = alpha tanh((T - t) / alpha).
double riccati(const LQParams& params, double t);
std::vector<double> riccati_samples(const LQParams& params);

/// Closed-loop state transition cosh((T - t)/alpha) / cosh((T - tau)/alpha).
double transition_r(const LQParams& params, double t, double tau);
/// Reciprocal of transition_r (the adjoint transition).
double transition_y(const LQParams& params, double t, double tau);

/// Feedforward y on the grid for demand samples d (linear between samples).
/// The backward recursion integrates the kernel exactly against each linear
/// piece, so the result carries no quadrature error of its own.
std::vector<double> feedforward(const LQParams& params, const std::vector<double>& d);

class ScalarLQSolution {
 public:
  std::vector<double> times;
  std::vector<double> p;
  std::vector<double> y;
  std::vector<double> r;
  std::vector<double> u;
  std::vector<double> d;
  /// Integral of (r - d)^2 + alpha^2 u^2 over each grid interval.
  std::vector<double> interval_cost;
  double cost = 0.0;
  double alpha = 1.0;

  /// Exact optimal state and control between grid points (d linear there).
  double state_at(double t) const;
  double control_at(double t) const;
  /// Cost accumulated over [times[k0], times[k1]].
  double cost_between(std::size_t k0, std::size_t k1) const;

 private:
  std::size_t interval_of(double t) const;
};

/// Optimal trajectory of the scalar problem. Between grid points the optimal
/// error r - d is a combination of cosh and sinh of t / alpha, so state,
/// control and cost are propagated in closed form; the feedback law
/// u = -(p r + y) / alpha^2 fixes the control at every grid point.
ScalarLQSolution solve_scalar(const LQParams& params, double r0, const std::vector<double>& d);

/// Cost of an arbitrary control given by samples (linear in between), with
/// the state integrated exactly. Used to probe optimality.
double control_cost(const LQParams& params, double r0, const std::vector<double>& u,
                    const std::vector<double>& d);

struct Harmonic {
  double omega = 0.0;
  double cos_coef = 0.0;
  double sin_coef = 0.0;
};

std::vector<double> sample_signal(const LQParams& params, const std::function<double(double)>& rule);
std::vector<double> sample_harmonics(const LQParams& params, double mean, const std::vector<Harmonic>& harmonics);

}  // namespace swarmot
