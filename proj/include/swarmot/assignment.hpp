#pragma once

// Explicit couplings between a resource and a demand density.

#include <string>
#include <vector>

#include "swarmot/measures.hpp"

namespace swarmot {

/// Mass `mass` sent from x to y.
struct AtomCoupling {
  double x;
  double y;
  double mass;
};

/// Percentiles (z0, z1] matched monotonically: x runs affinely from x0 to x1
/// and y from y0 to y1, with uniform mass along the piece.
struct IntervalCoupling {
  double z0;
  double z1;
  double x0;
  double x1;
  double y0;
  double y1;

  double mass() const { return z1 - z0; }
};

struct AssignmentPlan {
  std::vector<AtomCoupling> atoms;
  std::vector<IntervalCoupling> intervals;

  double total_mass() const;
};

/// Comonotone coupling: mass at Q_r(z) goes to Q_d(z).
AssignmentPlan optimal_plan(const Density& r, const Density& d);

/// Plan between two atom lists built with the northwest-corner rule in the
/// given orders. Feasible for any orders; optimal only when both are sorted.
AssignmentPlan northwest_plan(const std::vector<Atom>& sources, const std::vector<Atom>& targets);

double plan_cost(const AssignmentPlan& k);

struct MarginalReport {
  bool ok = true;
  double source_error = 0.0;
  double target_error = 0.0;
  double mass_error = 0.0;
  std::vector<std::string> discrepancies;
};

/// Rebuilds both marginals and compares them with r and d (atoms exactly up
/// to rounding, continuous parts in L1 with tolerance 1e-9).
MarginalReport check_marginals(const AssignmentPlan& k, const Density& r, const Density& d);

/// True when sorting the couplings by x also sorts them by y.
bool is_comonotone(const AssignmentPlan& k);

}  // namespace swarmot
