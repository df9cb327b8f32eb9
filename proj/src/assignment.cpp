#include "swarmot/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "swarmot/error.hpp"

namespace swarmot {

namespace {

constexpr double kAtomMassTolerance = 1e-12;
constexpr double kContinuousTolerance = 1e-9;

struct Piece {
  double lo;
  double hi;
  double density;
};

struct Marginal {
  std::vector<Atom> atoms;
  std::vector<Piece> pieces;
};

void add_atom(std::vector<Atom>& atoms, double x, double m) { atoms.push_back({x, m}); }

std::vector<Atom> merge_atoms(std::vector<Atom> atoms, double tol) {
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.position < b.position; });
  std::vector<Atom> out;
  for (const auto& a : atoms) {
    if (!out.empty() && a.position - out.back().position <= tol) {
      out.back().mass += a.mass;
    } else {
      out.push_back(a);
    }
  }
  return out;
}

Marginal marginal(const AssignmentPlan& k, bool source, double tol) {
  Marginal m;
  for (const auto& c : k.atoms) add_atom(m.atoms, source ? c.x : c.y, c.mass);
  for (const auto& c : k.intervals) {
    const double a = source ? c.x0 : c.y0;
    const double b = source ? c.x1 : c.y1;
    if (b - a <= tol) {
      add_atom(m.atoms, a, c.mass());
    } else {
      m.pieces.push_back({a, b, c.mass() / (b - a)});
    }
  }
  m.atoms = merge_atoms(std::move(m.atoms), tol);
  return m;
}

double compare(const Marginal& m, const Density& d, const char* which, double tol, MarginalReport& report) {
  double error = 0.0;
  // Atoms, matched by position.
  const auto& da = d.atoms();
  std::size_t i = 0;
  std::size_t j = 0;
  auto note = [&](double x, double plan_mass, double density_mass) {
    const double diff = std::abs(plan_mass - density_mass);
    error += diff;
    if (diff > kAtomMassTolerance) {
      std::ostringstream msg;
      msg.precision(12);
      msg << which << " atom at x=" << x << ": plan carries " << plan_mass << ", density has " << density_mass;
      report.discrepancies.push_back(msg.str());
    }
  };
  while (i < m.atoms.size() || j < da.size()) {
    if (j == da.size() || (i < m.atoms.size() && m.atoms[i].position < da[j].position - tol)) {
      note(m.atoms[i].position, m.atoms[i].mass, 0.0);
      ++i;
    } else if (i == m.atoms.size() || da[j].position < m.atoms[i].position - tol) {
      note(da[j].position, 0.0, da[j].mass);
      ++j;
    } else {
      note(da[j].position, m.atoms[i].mass, da[j].mass);
      ++i;
      ++j;
    }
  }

  // Continuous part, L1 over the merged cells.
  std::vector<double> edges = d.continuous().edges;
  for (const auto& p : m.pieces) {
    edges.push_back(p.lo);
    edges.push_back(p.hi);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  double l1 = 0.0;
  double worst = 0.0;
  double worst_at = 0.0;
  for (std::size_t c = 0; c + 1 < edges.size(); ++c) {
    const double mid = 0.5 * (edges[c] + edges[c + 1]);
    double plan_density = 0.0;
    for (const auto& p : m.pieces) {
      if (mid >= p.lo && mid < p.hi) plan_density += p.density;
    }
    const double diff = std::abs(plan_density - d.density_at(mid)) * (edges[c + 1] - edges[c]);
    l1 += diff;
    if (diff > worst) {
      worst = diff;
      worst_at = mid;
    }
  }
  if (l1 > kContinuousTolerance) {
    std::ostringstream msg;
    msg.precision(12);
    msg << which << " continuous part differs by " << l1 << " in L1, largest near x=" << worst_at;
    report.discrepancies.push_back(msg.str());
  }
  return error + l1;
}

}  // namespace

double AssignmentPlan::total_mass() const {
  double m = 0.0;
  for (const auto& c : atoms) m += c.mass;
  for (const auto& c : intervals) m += c.mass();
  return m;
}

AssignmentPlan optimal_plan(const Density& r, const Density& d) {
  const QuantileFunction qr = quantile_of(r);
  const QuantileFunction qd = quantile_of(d);
  std::vector<double> z = qr.breakpoints();
  const std::vector<double> zd = qd.breakpoints();
  z.insert(z.end(), zd.begin(), zd.end());
  std::sort(z.begin(), z.end());
  z.erase(std::unique(z.begin(), z.end()), z.end());

  AssignmentPlan plan;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double x0 = qr.right_limit(z[i]);
    const double x1 = qr(z[i + 1]);
    const double y0 = qd.right_limit(z[i]);
    const double y1 = qd(z[i + 1]);
    const double m = z[i + 1] - z[i];
    if (x0 == x1 && y0 == y1) {
      if (!plan.atoms.empty() && plan.atoms.back().x == x0 && plan.atoms.back().y == y0) {
        plan.atoms.back().mass += m;
      } else {
        plan.atoms.push_back({x0, y0, m});
      }
    } else {
      plan.intervals.push_back({z[i], z[i + 1], x0, x1, y0, y1});
    }
  }
  return plan;
}

AssignmentPlan northwest_plan(const std::vector<Atom>& sources, const std::vector<Atom>& targets) {
  AssignmentPlan plan;
  std::size_t i = 0;
  std::size_t j = 0;
  double left_i = sources.empty() ? 0.0 : sources[0].mass;
  double left_j = targets.empty() ? 0.0 : targets[0].mass;
  while (i < sources.size() && j < targets.size()) {
    const double m = std::min(left_i, left_j);
    if (m > 0.0) plan.atoms.push_back({sources[i].position, targets[j].position, m});
    left_i -= m;
    left_j -= m;
    // Advance whichever side ran out; ties advance both.
    const bool next_i = left_i <= kAtomMassTolerance;
    const bool next_j = left_j <= kAtomMassTolerance;
    if (next_i && ++i < sources.size()) left_i = sources[i].mass;
    if (next_j && ++j < targets.size()) left_j = targets[j].mass;
    if (!next_i && !next_j) break;
  }
  return plan;
}

double plan_cost(const AssignmentPlan& k) {
  double total = 0.0;
  for (const auto& c : k.atoms) total += c.mass * (c.y - c.x) * (c.y - c.x);
  for (const auto& c : k.intervals) total += affine_square_integral(c.y0 - c.x0, c.y1 - c.x1, c.mass());
  return total;
}

MarginalReport check_marginals(const AssignmentPlan& k, const Density& r, const Density& d) {
  MarginalReport report;
  for (const auto& c : k.atoms) {
    if (!(c.mass >= 0.0)) report.discrepancies.push_back("negative coupling mass");
  }
  const double tol = kPositionTolerance * r.domain().hull(d.domain()).length();
  report.source_error = compare(marginal(k, true, tol), r, "source", tol, report);
  report.target_error = compare(marginal(k, false, tol), d, "target", tol, report);
  report.mass_error = std::abs(k.total_mass() - 1.0);
  if (report.mass_error > kContinuousTolerance) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "total plan mass " << k.total_mass() << " differs from 1";
    report.discrepancies.push_back(msg.str());
  }
  report.ok = report.discrepancies.empty();
  return report;
}

bool is_comonotone(const AssignmentPlan& k) {
  struct Span {
    double x_lo, x_hi, y_lo, y_hi;
  };
  std::vector<Span> spans;
  for (const auto& c : k.atoms) spans.push_back({c.x, c.x, c.y, c.y});
  for (const auto& c : k.intervals) spans.push_back({c.x0, c.x1, c.y0, c.y1});
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    return a.x_lo != b.x_lo ? a.x_lo < b.x_lo : a.y_lo < b.y_lo;
  });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].y_lo < spans[i - 1].y_lo) return false;
    if (spans[i].x_lo >= spans[i - 1].x_hi && spans[i].y_lo < spans[i - 1].y_hi - 1e-12) return false;
  }
  return true;
}

}  // namespace swarmot
