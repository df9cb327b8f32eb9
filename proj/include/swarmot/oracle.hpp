#pragma once

// Brute-force reference solvers for small instances. Nothing here calls the
// quantile, LQ or transport kernels of the library; only plain data types
// are shared.

#include <cstdint>
#include <vector>

#include "swarmot/measures.hpp"

namespace swarmot::oracle {

inline constexpr std::size_t kMaxAtoms = 8;

/// Squared 2-Wasserstein distance between equal-size, equal-mass atom lists,
/// by enumerating every matching.
double permutation_wasserstein(const std::vector<Atom>& a, const std::vector<Atom>& b);

/// Squared distance as the cheapest northwest-corner plan over every ordering
/// of b's support (a kept in ascending order).
double northwest_wasserstein(const std::vector<Atom>& a, const std::vector<Atom>& b);

/// Squared distance from a dense two-phase simplex solve of the
/// transportation LP (Bland's rule).
double simplex_wasserstein(const std::vector<Atom>& a, const std::vector<Atom>& b);

/// Squared distance by the methods above, which must agree to 1e-9.
/// Rejects more than kMaxAtoms atoms per side.
double lp_wasserstein(const std::vector<Atom>& a, const std::vector<Atom>& b);

struct DiscreteInstance {
  std::vector<Atom> resource;
  /// Demand at t_k = k T / nt, k = 0..nt.
  std::vector<Density> demand;
  double alpha = 1.0;
  double horizon = 1.0;
  int nt = 100;
  int restarts = 10;
  int iterations = 5000;
  std::uint64_t seed = 1;
  /// Percentile samples per demand slice.
  int quantile_samples = 20000;
};

struct DirectResult {
  /// positions[k][i] for atom i (in input order) at t_k.
  std::vector<std::vector<double>> positions;
  /// velocities[k][i], constant on [t_k, t_{k+1}).
  std::vector<std::vector<double>> velocities;
  double cost = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
  int best_restart = 0;
};

/// Minimizes the time-discretized objective over piecewise-constant atom
/// velocities with Barzilai-Borwein gradient descent and seeded restarts.
/// Iterates whose atoms meet or swap order are rejected by the line search.
/// Positions are exact for such controls, so the returned cost is the true
/// cost of an admissible control up to trapezoid error in time.
DirectResult direct_optimal_control(const DiscreteInstance& inst);

struct DiscreteLQResult {
  std::vector<double> r;
  std::vector<double> u;
  double cost = 0.0;
};

/// Exact optimum of sum_k h [(r_k - d_k)^2 + alpha^2 u_k^2], r_{k+1} = r_k + h u_k,
/// k = 0..nt-1, by backward Riccati recursion. d has nt + 1 samples.
DiscreteLQResult discrete_lq(double alpha, double horizon, double r0, const std::vector<double>& d);

}  // namespace swarmot::oracle
