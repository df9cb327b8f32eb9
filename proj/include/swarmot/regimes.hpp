#pragma once

// Full optimal assignment-and-motion solutions: general finite horizon,
// static demand in closed form, and periodic demand in steady state.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "swarmot/lq.hpp"
#include "swarmot/measures.hpp"
#include "swarmot/partition.hpp"
#include "swarmot/transport.hpp"

namespace swarmot {

class DemandSignal {
 public:
  enum class Kind { constant, periodic, sampled };

  static DemandSignal constant(Density d);
  /// rule(t) for t in [0, period); evaluated at t mod period.
  static DemandSignal periodic(double period, std::function<Density(double)> rule);
  /// Slices at increasing times; in between, quantiles are interpolated
  /// linearly (displacement interpolation).
  static DemandSignal sampled(std::vector<double> times, std::vector<Density> slices);

  Kind kind() const { return kind_; }
  double period() const { return period_; }
  Interval domain() const;
  bool covers(double t0, double t1) const;

  Density density_at(double t) const;
  QuantileFunction quantile_at(double t) const;

 private:
  DemandSignal() = default;

  Kind kind_ = Kind::constant;
  double period_ = 0.0;
  std::shared_ptr<const Density> fixed_;
  std::shared_ptr<const QuantileFunction> fixed_quantile_;
  std::function<Density(double)> rule_;
  std::vector<double> times_;
  std::vector<Density> slices_;
  std::vector<QuantileFunction> quantiles_;
};

struct GridOptions {
  /// Time steps over the horizon (or over one period).
  int nt = 1000;
  /// Cells for densities given as mixtures.
  int nx = 200;
  int harmonics = 64;
  /// Largest percentile spacing between tracked nodes of the continuum.
  double z_resolution = 1.0 / 128;
  /// Nodes per continuous quantile segment in forward simulations.
  int advect_refine = 8;
};

struct Scenario {
  Density resource;
  DemandSignal demand;
  double alpha = 1.0;
  /// Finite horizon T. The periodic solver uses the demand period instead.
  double horizon = 1.0;
  GridOptions grid;
  std::uint64_t seed = 0;
};

/// Percentile node followed by one scalar problem.
struct Track {
  std::function<double(double)> state;
  std::function<double(double)> control;
};

/// Quantile piece on [z0, z1] spanned by two tracks; a cell uses one track.
struct PathSegment {
  double z0;
  double z1;
  std::size_t start;
  std::size_t end;

  bool cell() const { return start == end; }
};

/// Resource quantile Q_R(z, t) and its velocity U(z, t), piecewise affine in
/// z between tracked nodes.
class QuantilePath {
 public:
  QuantilePath() = default;
  QuantilePath(Interval domain, std::vector<PathSegment> segments, std::vector<Track> tracks);

  const std::vector<PathSegment>& segments() const { return segments_; }
  const std::vector<Track>& tracks() const { return tracks_; }

  QuantileFunction quantile_at(double t) const;
  PercentileSlice velocity_at(double t) const;
  QuantileVelocity quantile_velocity() const;
  /// V = U o F_R along the path.
  VelocityField velocity() const;
  std::function<QuantileFunction(double)> as_function() const;

 private:
  Interval domain_;
  std::vector<PathSegment> segments_;
  std::vector<Track> tracks_;
};

struct CostBreakdown {
  double assignment = 0.0;
  /// Integral over time of the motion term, without the alpha^2 factor.
  double motion = 0.0;
  double total = 0.0;
  double K = 0.0;
  /// Largest per-slice gap between the x-form and z-form motion integrals.
  double motion_identity_gap = 0.0;
  std::vector<double> times;
  std::vector<double> assignment_rate;
  std::vector<double> motion_rate_x;
  std::vector<double> motion_rate_z;
};

/// Assignment term from the squared distance per slice, motion term both as
/// the integral of V^2 R dx and of U^2 dz, trapezoid in time. K is filled
/// when a partition is given.
CostBreakdown evaluate_cost(const std::vector<double>& times, const std::vector<Density>& trajectory,
                            const VelocityField& v, const DemandSignal& demand, double alpha,
                            const LevelSetPartition* partition = nullptr);

enum class Regime { general, static_demand, periodic };

struct FrequencyRow {
  std::size_t cell;
  int harmonic;
  double omega;
  double demand_amplitude;
  double resource_amplitude;
  double gain;
};

struct OptimalControlSolution {
  Regime regime = Regime::general;
  double alpha = 1.0;
  /// Horizon, or the period for the periodic regime.
  double horizon = 1.0;
  LevelSetPartition partition;
  QuantilePath path;
  std::vector<double> times;
  std::vector<QuantileFunction> resource_quantiles;
  std::vector<Density> trajectory;
  /// One scalar solution per interval cell, sampled on `times`.
  std::vector<ScalarLQSolution> cells;
  /// Reassembled optimal cost (per unit time for the periodic regime).
  double predicted_cost = 0.0;
  double K = 0.0;
  /// Cost measured along the forward simulation (or along the path when the
  /// simulation is skipped); per unit time for the periodic regime.
  CostBreakdown realized;
  std::optional<DensitySeries> simulation;

  /// Static regime: the averaged demand and the closed-form trajectory.
  std::optional<Density> averaged_demand;
  std::function<Density(double)> closed_form_trajectory;

  /// Periodic regime.
  std::vector<FrequencyRow> frequency_table;
  double truncation_tail = 0.0;
  std::vector<double> warmup_times;
  std::vector<std::vector<double>> warmup_positions;

  VelocityField velocity() const { return path.velocity(); }
  QuantileVelocity quantile_velocity() const { return path.quantile_velocity(); }
  /// cells[i].r, transposed: positions[k][i].
  std::vector<std::vector<double>> atom_positions() const;
};

struct SolveOptions {
  bool simulate = true;
};

OptimalControlSolution solve_general(const Scenario& scenario, const SolveOptions& options = {});
OptimalControlSolution solve_static(const Scenario& scenario, const SolveOptions& options = {});
OptimalControlSolution solve_periodic(const Scenario& scenario, const SolveOptions& options = {});

/// Finite-horizon solve over `periods` periods of a periodic demand, with
/// the average cost taken over the window [1, periods - 1] periods.
struct PeriodicTimeDomain {
  double average_cost = 0.0;
  double K = 0.0;
  /// Per interval cell: the finite-horizon solution over all periods.
  std::vector<ScalarLQSolution> cells;
};
PeriodicTimeDomain periodic_time_domain(const Scenario& scenario, int periods = 5);

/// Lag (in samples, in (-n/2, n/2]) maximizing the circular cross-correlation
/// of the mean-removed signals; positive when b trails a.
int cross_correlation_peak_lag(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace swarmot
