#pragma once

// One-dimensional normalized densities (Dirac atoms plus a piecewise-constant
// continuous part), their CDFs and quantile functions, and the 2-Wasserstein
// distance computed from them.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace swarmot {

/// Closed interval [lo, hi] with lo < hi.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
  Interval hull(double x) const;
  Interval hull(const Interval& other) const;
};

struct Atom {
  double position = 0.0;
  double mass = 0.0;
};

/// Piecewise-constant nonnegative function: values[k] on [edges[k], edges[k+1]].
struct Histogram {
  std::vector<double> edges;
  std::vector<double> values;

  bool empty() const { return values.empty(); }
  double mass() const;
};

/// Which one-sided limit to take at a breakpoint. `center` means the point
/// value itself (the atom, for positions carrying mass).
enum class Side { left, center, right };

/// Relative tolerance (times domain length) under which two positions are the
/// same point. Coincident atoms are merged with it.
inline constexpr double kPositionTolerance = 1e-12;
/// Absolute tolerance on total mass.
inline constexpr double kMassTolerance = 1e-12;
/// Relative tolerance (times domain length) for accepting a slightly
/// decreasing quantile before declaring it non-monotone.
inline constexpr double kOrderTolerance = 1e-9;

/// Normalized 1D density: sorted, merged atoms plus a histogram.
///
/// Total mass is 1 within kMassTolerance; everything lies in the domain.
/// Immutable after construction.
class Density {
 public:
  /// Validates and canonicalizes (sorts and merges atoms, drops zero-width
  /// cells). Throws InvalidInput when the invariants cannot be met.
  Density(Interval domain, std::vector<Atom> atoms, Histogram continuous = {});

  /// Same as the constructor but rescales all masses so the total is 1.
  static Density normalized(Interval domain, std::vector<Atom> atoms, Histogram continuous = {});
  static Density point(Interval domain, double position);
  static Density uniform(Interval domain);

  const Interval& domain() const { return domain_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const Histogram& continuous() const { return continuous_; }

  double atom_mass() const;
  double continuous_mass() const { return continuous_.mass(); }
  double mean() const;
  /// Continuous density value at x (right-continuous within the grid).
  double density_at(double x) const;

 private:
  Interval domain_;
  std::vector<Atom> atoms_;
  Histogram continuous_;
};

/// Right-continuous, piecewise-linear CDF with jumps. Knots are sorted in both
/// coordinates; a jump is two knots at the same x.
class CDFFunction {
 public:
  struct Knot {
    double x;
    double value;
  };

  CDFFunction(Interval domain, std::vector<Knot> knots);

  const Interval& domain() const { return domain_; }
  const std::vector<Knot>& knots() const { return knots_; }

  double operator()(double x) const;
  /// Limit from the left, F(x-).
  double left_limit(double x) const;
  /// Generalized inverse inf{x : F(x) >= z} (side = left) or inf{x : F(x) > z}
  /// (side = right), read straight off the knots.
  double inverse(double z, Side side = Side::left) const;

 private:
  Interval domain_;
  std::vector<Knot> knots_;
};

/// One affine piece of a quantile function on [z0, z1]. A flat piece
/// (x0 == x1) is an atom of mass z1 - z0.
struct QuantileSegment {
  double z0;
  double z1;
  double x0;
  double x1;

  bool flat() const { return x0 == x1; }
  double mass() const { return z1 - z0; }
  double at(double z) const;
};

struct FlatInterval {
  double z_lo;
  double z_hi;
  double value;

  double mass() const { return z_hi - z_lo; }
};

/// Monotone, left-continuous quantile function [0,1] -> domain, stored as
/// contiguous affine segments. Jumps (support gaps) live between segments; flats
/// are atoms. The value at z = 0 is the limit from the right.
class QuantileFunction {
 public:
  /// Validates contiguity and monotonicity (clamping violations up to
  /// kOrderTolerance), merges adjacent equal flats, and widens the domain to
  /// cover the values. Throws InvalidInput otherwise.
  QuantileFunction(Interval domain, std::vector<QuantileSegment> segments);

  const Interval& domain() const { return domain_; }
  const std::vector<QuantileSegment>& segments() const { return segments_; }
  std::vector<FlatInterval> flat_intervals() const;

  double operator()(double z) const;
  double right_limit(double z) const;
  double value(double z, Side side) const { return side == Side::right ? right_limit(z) : (*this)(z); }

  /// Index of the segment holding z from the given side: left picks the
  /// segment with z0 < z <= z1, right picks z0 <= z < z1.
  std::size_t segment_index(double z, Side side) const;
  /// All distinct z breakpoints, including 0 and 1.
  std::vector<double> breakpoints() const;

  double support_min() const { return segments_.front().x0; }
  double support_max() const { return segments_.back().x1; }
  double mean() const;

 private:
  Interval domain_;
  std::vector<QuantileSegment> segments_;
};

CDFFunction cdf_of(const Density& d);
QuantileFunction quantile_of(const Density& d);
CDFFunction cdf_from_quantile(const QuantileFunction& q);
/// Pushforward of the uniform density on [0,1] through q. Flats become atoms,
/// rising segments become constant density (z1 - z0) / (x1 - x0).
Density density_from_quantile(const QuantileFunction& q);

using ScalarMap = std::function<double(double)>;

/// Pushforward f#d for a nondecreasing map f. Continuous stretches are
/// resolved with `refine` sub-pieces per quantile segment; atoms map exactly.
Density pushforward(const Density& d, const ScalarMap& f, int refine = 64);

/// Pointwise (1 - s) qa + s qb, exact on merged breakpoints. This is the
/// displacement interpolation (Wasserstein geodesic) between the two laws.
QuantileFunction interpolate_quantiles(const QuantileFunction& qa, const QuantileFunction& qb, double s);

/// Integral over [0,1] of (qa - qb)^2, exact for piecewise-affine quantiles.
double squared_l2_quantile_distance(const QuantileFunction& qa, const QuantileFunction& qb);
double l2_quantile_distance(const QuantileFunction& qa, const QuantileFunction& qb);

/// 2-Wasserstein distance (not squared). Computed by sweeping the merged CDF
/// levels of both densities and inverting the CDFs segment by segment.
double wasserstein2(const Density& a, const Density& b);
double squared_wasserstein2(const Density& a, const Density& b);

/// L1 distance between the continuous parts plus the summed absolute mass
/// difference of atoms matched by position. Zero iff the densities agree.
double density_discrepancy(const Density& a, const Density& b);

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.0;
  double variance = 1.0;
};

/// Mixture of normals restricted to the domain and renormalized, as a
/// histogram of `cells` equal cells holding the exact cell masses.
Density gaussian_mixture(Interval domain, int cells, const std::vector<GaussianComponent>& components);

/// Integral of (a + (b - a) s)^2 over s in [0,1], times width.
inline double affine_square_integral(double a, double b, double width) {
  return width * (a * a + a * b + b * b) / 3.0;
}

}  // namespace swarmot
