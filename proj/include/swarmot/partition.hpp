#pragma once

// Level-set partition of [0,1] induced by an initial resource quantile, and
// averaging of demand quantiles over it.

#include <vector>

#include "swarmot/measures.hpp"

namespace swarmot {

/// Interval cell [z_lo, z_hi] on which the initial quantile equals `level`.
struct PartitionCell {
  double z_lo;
  double z_hi;
  double level;

  double mass() const { return z_hi - z_lo; }
};

/// Interval cells in increasing order. Every z outside the cells is its own
/// singleton cell; that continuum is never materialized.
class LevelSetPartition {
 public:
  LevelSetPartition() = default;
  explicit LevelSetPartition(std::vector<PartitionCell> cells);

  const std::vector<PartitionCell>& cells() const { return cells_; }
  std::vector<double> index_values() const;
  bool trivial() const { return cells_.empty(); }
  /// Total length of the singleton continuum.
  double singleton_measure() const;
  /// Index of the interval cell containing z, or -1 when z is a singleton.
  /// Shared endpoints belong to the cell on the left.
  int cell_of(double z) const;

 private:
  std::vector<PartitionCell> cells_;
};

LevelSetPartition build_partition(const QuantileFunction& q0);

/// Exact mean of qd over each interval cell.
std::vector<double> cell_averages(const QuantileFunction& qd, const LevelSetPartition& p);

/// qd replaced by its cell means on the interval cells and kept elsewhere.
QuantileFunction average_wrt_partition(const QuantileFunction& qd, const LevelSetPartition& p);

/// Density of the averaged quantile: each interval cell becomes an atom.
Density averaged_density(const Density& d, const LevelSetPartition& p);

/// Integral over [0,1] of (averaged qd - qd)^2, exact.
double averaging_residual(const QuantileFunction& qd, const LevelSetPartition& p);

/// Trapezoid in time of the averaging residual.
double limit_constant_K(const std::vector<QuantileFunction>& qd_series, const std::vector<double>& times,
                        const LevelSetPartition& p);

/// Integral of (a - b)^2 over [z_lo, z_hi], exact for piecewise-affine quantiles.
double squared_l2_on(const QuantileFunction& a, const QuantileFunction& b, double z_lo, double z_hi);

}  // namespace swarmot
