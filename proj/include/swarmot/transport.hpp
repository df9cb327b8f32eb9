#pragma once

// Transport of densities by velocity fields, flow maps, and the change of
// variables between (density, velocity) and (quantile, percentile velocity).

#include <functional>
#include <vector>

#include "swarmot/measures.hpp"

namespace swarmot {

/// Field at a frozen time. `side` picks a one-sided limit where the field
/// jumps; `center` is the value at the point itself.
using SpatialSlice = std::function<double(double x, Side side)>;
using PercentileSlice = std::function<double(double z, Side side)>;

/// Velocity field V(x, t). Evaluated through time slices so that per-time
/// setup (a quantile, a CDF) is paid once per stage rather than per point.
class VelocityField {
 public:
  using Slicer = std::function<SpatialSlice(double t)>;

  explicit VelocityField(Slicer slicer) : slicer_(std::move(slicer)) {}

  static VelocityField zero();
  static VelocityField constant(double c);
  static VelocityField from_rule(std::function<double(double x, double t)> rule);
  /// Bilinear interpolation of values[k][j] at (t0 + k (t1 - t0)/nt, lo + j L/nx),
  /// clamped outside the grid.
  static VelocityField sampled(Interval domain, double t0, double t1, std::vector<std::vector<double>> values);

  SpatialSlice at(double t) const { return slicer_(t); }
  double operator()(double x, double t, Side side = Side::center) const { return slicer_(t)(x, side); }

 private:
  Slicer slicer_;
};

/// Percentile velocity U(z, t) on [0,1].
class QuantileVelocity {
 public:
  using Slicer = std::function<PercentileSlice(double t)>;

  explicit QuantileVelocity(Slicer slicer) : slicer_(std::move(slicer)) {}

  static QuantileVelocity zero();
  static QuantileVelocity constant(double c);
  static QuantileVelocity from_rule(std::function<double(double z, double t)> rule);
  static QuantileVelocity sampled(double t0, double t1, std::vector<std::vector<double>> values);

  PercentileSlice at(double t) const { return slicer_(t); }
  double operator()(double z, double t, Side side = Side::center) const { return slicer_(t)(z, side); }

 private:
  Slicer slicer_;
};

struct DensitySeries {
  std::vector<double> times;
  std::vector<Density> densities;
  std::vector<QuantileFunction> quantiles;
  /// Tracked characteristics in quantile order: one per atom, plus the nodes
  /// of each continuous stretch.
  std::vector<std::vector<double>> points;
  /// For each tracked point, the atom mass it carries (0 for continuum nodes).
  std::vector<double> point_mass;
};

/// Characteristics of the transport equation, RK4 with step T / nt. Atoms
/// follow their own ODE; each continuous quantile segment is carried by
/// `refine` + 1 nodes. Throws NumericalError when characteristics cross.
DensitySeries advect_density(const Density& r0, const VelocityField& v, double T, int nt, int refine = 16);

struct FlowMap {
  std::vector<double> times;
  std::vector<double> origins;
  /// positions[k][j] = Phi_{times[k]}(origins[j]).
  std::vector<std::vector<double>> positions;

  /// Linear interpolation in the origin coordinate at time index k.
  double at(std::size_t k, double x) const;
};

FlowMap flow_map(const VelocityField& v, Interval domain, double T, int nt, int nx);

struct QuantileSeries {
  std::vector<double> times;
  std::vector<QuantileFunction> quantiles;
};

/// Q(z, t) = Q(z, 0) + integral of U(z, s) ds at each node z. A flat of q0
/// moves as one node and u must be constant on it.
QuantileSeries evolve_quantile(const QuantileFunction& q0, const QuantileVelocity& u, double T, int nt,
                               double max_dz = 1.0 / 256);

/// U = V o Q at one time. Flat pieces use the value at the atom, continuous
/// pieces the one-sided limits matching the side of z.
PercentileSlice compose_with_quantile(const QuantileFunction& q, const SpatialSlice& v);

/// V = U o F where F is the CDF behind `q`. Atoms take U on their flat via
/// the largest z with the same quantile; points off the support take the
/// value at the nearest support point. Throws InvalidInput when `constraint`
/// is given and U is not constant on one of its flats.
SpatialSlice compose_with_cdf(const QuantileFunction& q, const PercentileSlice& u,
                              const QuantileFunction* constraint = nullptr);

struct QuantileCoordinates {
  QuantileFunction quantile;
  QuantileVelocity velocity;
};

QuantileCoordinates to_quantile_coords(const Density& r, const VelocityField& v);
/// Along a moving resource with quantile path Q(., t).
QuantileVelocity to_quantile_coords(std::function<QuantileFunction(double)> path, const VelocityField& v);

VelocityField from_quantile_coords(const QuantileFunction& q, const QuantileVelocity& u, const Density& companion);
VelocityField from_quantile_path(std::function<QuantileFunction(double)> path, const QuantileVelocity& u);

/// Spread of u over a flat that still counts as constant.
double input_constraint_tolerance(double velocity_scale);

/// Accuracy target for time-stepped comparisons: length * (dt / time_scale)^2.
double grid_tolerance(double length, double dt, double time_scale);

}  // namespace swarmot
