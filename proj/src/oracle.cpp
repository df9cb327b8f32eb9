#include "swarmot/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "swarmot/error.hpp"

namespace swarmot::oracle {

namespace {

constexpr double kPivotEps = 1e-12;

void check_size(const std::vector<Atom>& a, const std::vector<Atom>& b) {
  if (a.empty() || b.empty()) throw InvalidInput("oracle: empty atom list");
  if (a.size() > kMaxAtoms || b.size() > kMaxAtoms) {
    std::ostringstream msg;
    msg << "oracle: instance too large (" << a.size() << " and " << b.size() << " atoms, limit " << kMaxAtoms << ")";
    throw InvalidInput(msg.str());
  }
}

double sq(double v) { return v * v; }

// Northwest-corner cost of a in the given order against b in the given order.
double northwest_cost(const std::vector<Atom>& a, const std::vector<Atom>& b) {
  std::size_t i = 0;
  std::size_t j = 0;
  double left_a = a[0].mass;
  double left_b = b[0].mass;
  double cost = 0.0;
  while (i < a.size() && j < b.size()) {
    const double m = std::min(left_a, left_b);
    cost += m * sq(a[i].position - b[j].position);
    left_a -= m;
    left_b -= m;
    if (left_a <= left_b) {
      if (++i < a.size()) left_a = a[i].mass;
    } else {
      if (++j < b.size()) left_b = b[j].mass;
    }
  }
  return cost;
}

// Dense tableau simplex for min c^T x, A x = rhs, x >= 0 with rhs >= 0.
class Simplex {
 public:
  Simplex(const std::vector<std::vector<double>>& A, const std::vector<double>& rhs, std::vector<double> c)
      : rows_(A.size()), real_(c.size()), cols_(real_ + rows_), cost_(std::move(c)) {
    tab_.assign(rows_ + 1, std::vector<double>(cols_ + 1, 0.0));
    basis_.resize(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t j = 0; j < real_; ++j) tab_[r][j] = A[r][j];
      tab_[r][real_ + r] = 1.0;
      tab_[r][cols_] = rhs[r];
      basis_[r] = real_ + r;
    }
  }

  double solve() {
    // Phase 1: minimize the sum of artificials.
    auto& obj = tab_[rows_];
    std::fill(obj.begin(), obj.end(), 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t j = 0; j < real_; ++j) obj[j] -= tab_[r][j];
      obj[cols_] -= tab_[r][cols_];
    }
    iterate(cols_);
    if (-tab_[rows_][cols_] > 1e-9) throw NumericalError("oracle", "transportation LP is infeasible");
    for (std::size_t r = 0; r < rows_; ++r) {
      if (basis_[r] < real_) continue;
      for (std::size_t j = 0; j < real_; ++j) {
        if (std::abs(tab_[r][j]) > kPivotEps) {
          pivot(r, j);
          break;
        }
      }
    }
    // Phase 2 on the real columns only.
    std::fill(obj.begin(), obj.end(), 0.0);
    for (std::size_t j = 0; j < real_; ++j) obj[j] = cost_[j];
    for (std::size_t r = 0; r < rows_; ++r) {
      if (basis_[r] >= real_) continue;
      const double cb = cost_[basis_[r]];
      for (std::size_t j = 0; j <= cols_; ++j) obj[j] -= cb * tab_[r][j];
    }
    iterate(real_);
    double value = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (basis_[r] < real_) value += cost_[basis_[r]] * tab_[r][cols_];
    }
    return value;
  }

 private:
  void iterate(std::size_t allowed) {
    for (int guard = 0; guard < 100000; ++guard) {
      std::size_t enter = allowed;
      for (std::size_t j = 0; j < allowed; ++j) {
        if (tab_[rows_][j] < -kPivotEps) {
          enter = j;
          break;
        }
      }
      if (enter == allowed) return;
      std::size_t leave = rows_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows_; ++r) {
        if (tab_[r][enter] <= kPivotEps) continue;
        const double ratio = tab_[r][cols_] / tab_[r][enter];
        if (ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && basis_[r] < basis_[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave == rows_) throw NumericalError("oracle", "transportation LP is unbounded");
      pivot(leave, enter);
    }
    throw NumericalError("oracle", "simplex did not terminate");
  }

  void pivot(std::size_t r, std::size_t j) {
    const double p = tab_[r][j];
    for (auto& v : tab_[r]) v /= p;
    for (std::size_t k = 0; k <= rows_; ++k) {
      if (k == r) continue;
      const double f = tab_[k][j];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols_; ++c) tab_[k][c] -= f * tab_[r][c];
    }
    basis_[r] = j;
  }

  std::size_t rows_;
  std::size_t real_;
  std::size_t cols_;
  std::vector<double> cost_;
  std::vector<std::vector<double>> tab_;
  std::vector<std::size_t> basis_;
};

// Percentile table of a density: Q at midpoints (j + 1/2) / N, plus prefix
// integrals of Q and Q^2.
struct QuantileTable {
  int n = 0;
  std::vector<double> p1;
  std::vector<double> p2;

  double prefix(const std::vector<double>& p, double z) const {
    const double s = std::clamp(z, 0.0, 1.0) * n;
    const int j = std::min(static_cast<int>(s), n - 1);
    const double f = s - j;
    return p[static_cast<std::size_t>(j)] + f * (p[static_cast<std::size_t>(j) + 1] - p[static_cast<std::size_t>(j)]);
  }
};

QuantileTable build_table(const Density& d, int n) {
  struct Piece {
    double x0;
    double x1;
    double mass;
  };
  std::vector<Piece> pieces;
  const auto& atoms = d.atoms();
  const auto& e = d.continuous().edges;
  const auto& v = d.continuous().values;
  for (const auto& a : atoms) pieces.push_back({a.position, a.position, a.mass});
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] <= 0.0) continue;
    std::vector<double> cuts{e[k], e[k + 1]};
    for (const auto& a : atoms) {
      if (a.position > e[k] && a.position < e[k + 1]) cuts.push_back(a.position);
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) pieces.push_back({cuts[c], cuts[c + 1], v[k] * (cuts[c + 1] - cuts[c])});
  }
  // Atoms sit before continuous pieces that start at the same point.
  std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) {
    if (a.x0 != b.x0) return a.x0 < b.x0;
    return (a.x1 == a.x0) > (b.x1 == b.x0);
  });

  QuantileTable t;
  t.n = n;
  t.p1.assign(static_cast<std::size_t>(n) + 1, 0.0);
  t.p2.assign(static_cast<std::size_t>(n) + 1, 0.0);
  std::size_t piece = 0;
  double below = 0.0;
  for (int j = 0; j < n; ++j) {
    const double z = (j + 0.5) / n;
    while (piece + 1 < pieces.size() && below + pieces[piece].mass < z) below += pieces[piece++].mass;
    const Piece& p = pieces[piece];
    const double frac = p.mass > 0.0 ? std::clamp((z - below) / p.mass, 0.0, 1.0) : 0.0;
    const double q = p.x0 + frac * (p.x1 - p.x0);
    t.p1[static_cast<std::size_t>(j) + 1] = t.p1[static_cast<std::size_t>(j)] + q / n;
    t.p2[static_cast<std::size_t>(j) + 1] = t.p2[static_cast<std::size_t>(j)] + q * q / n;
  }
  return t;
}

struct Objective {
  const DiscreteInstance& inst;
  std::vector<QuantileTable> tables;
  std::size_t atoms;
  int nt;
  double h;
  /// Atom indices by initial position.
  std::vector<std::size_t> rank;

  // A velocity field moves atoms without letting them meet, so admissible
  // trajectories keep the initial strict order at every grid time.
  bool ordered(const std::vector<double>& x) const {
    for (int k = 0; k <= nt; ++k) {
      const double* xs = &x[static_cast<std::size_t>(k) * atoms];
      for (std::size_t j = 1; j < atoms; ++j) {
        if (!(xs[rank[j - 1]] < xs[rank[j]])) return false;
      }
    }
    return true;
  }

  // Cost and gradient for velocities v[k * atoms + i]; positions written out.
  double evaluate(const std::vector<double>& v, std::vector<double>& grad, std::vector<double>& x) const {
    const double a2 = inst.alpha * inst.alpha;
    x.assign(static_cast<std::size_t>(nt + 1) * atoms, 0.0);
    for (std::size_t i = 0; i < atoms; ++i) x[i] = inst.resource[i].position;
    for (int k = 0; k < nt; ++k) {
      for (std::size_t i = 0; i < atoms; ++i) {
        x[(k + 1) * atoms + i] = x[k * atoms + i] + h * v[k * atoms + i];
      }
    }
    if (!ordered(x)) return std::numeric_limits<double>::infinity();
    std::vector<double> gx(x.size(), 0.0);
    std::vector<std::size_t> order(atoms);
    double cost = 0.0;
    for (int k = 0; k <= nt; ++k) {
      const double w = (k == 0 || k == nt) ? 0.5 * h : h;
      const double* xs = &x[k * atoms];
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
      double c = 0.0;
      const auto& tab = tables[static_cast<std::size_t>(k)];
      for (std::size_t i : order) {
        const double m = inst.resource[i].mass;
        const double s1 = tab.prefix(tab.p1, c + m) - tab.prefix(tab.p1, c);
        const double s2 = tab.prefix(tab.p2, c + m) - tab.prefix(tab.p2, c);
        cost += w * (m * xs[i] * xs[i] - 2.0 * xs[i] * s1 + s2);
        gx[k * atoms + i] = w * (2.0 * m * xs[i] - 2.0 * s1);
        c += m;
      }
    }
    grad.assign(v.size(), 0.0);
    std::vector<double> tail(atoms, 0.0);
    for (int k = nt - 1; k >= 0; --k) {
      for (std::size_t i = 0; i < atoms; ++i) {
        tail[i] += gx[(k + 1) * atoms + i];
        const double m = inst.resource[i].mass;
        const double vk = v[k * atoms + i];
        cost += a2 * h * m * vk * vk;
        grad[k * atoms + i] = h * tail[i] + 2.0 * a2 * h * m * vk;
      }
    }
    return cost;
  }
};

double norm(const std::vector<double>& g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

}  // namespace

double permutation_wasserstein(const std::vector<Atom>& a, const std::vector<Atom>& b) {
  check_size(a, b);
  if (a.size() != b.size()) throw InvalidInput("oracle: permutation method needs equal atom counts");
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (std::abs(a[i].mass - a[0].mass) > 1e-12 || std::abs(b[i].mass - a[0].mass) > 1e-12) {
      throw InvalidInput("oracle: permutation method needs equal masses");
    }
  }
  if (std::abs(b[0].mass - a[0].mass) > 1e-12) throw InvalidInput("oracle: permutation method needs equal masses");
  std::vector<std::size_t> perm(b.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) c += a[i].mass * sq(a[i].position - b[perm[i]].position);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double northwest_wasserstein(const std::vector<Atom>& a, const std::vector<Atom>& b) {
  check_size(a, b);
  std::vector<Atom> sa = a;
  std::sort(sa.begin(), sa.end(), [](const Atom& x, const Atom& y) { return x.position < y.position; });
  std::vector<std::size_t> perm(b.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Atom> ordered(b.size());
  double best = std::numeric_limits<double>::infinity();
  do {
    for (std::size_t j = 0; j < b.size(); ++j) ordered[j] = b[perm[j]];
    best = std::min(best, northwest_cost(sa, ordered));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double simplex_wasserstein(const std::vector<Atom>& a, const std::vector<Atom>& b) {
  check_size(a, b);
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  // One target row is implied by the others and is dropped.
  const std::size_t rows = n + m - 1;
  std::vector<std::vector<double>> A(rows, std::vector<double>(n * m, 0.0));
  std::vector<double> rhs(rows);
  std::vector<double> c(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      c[i * m + j] = sq(a[i].position - b[j].position);
      A[i][i * m + j] = 1.0;
      if (j + 1 < m) A[n + j][i * m + j] = 1.0;
    }
    rhs[i] = a[i].mass;
  }
  for (std::size_t j = 0; j + 1 < m; ++j) rhs[n + j] = b[j].mass;
  return Simplex(A, rhs, c).solve();
}

double lp_wasserstein(const std::vector<Atom>& a, const std::vector<Atom>& b) {
  check_size(a, b);
  const double nw = northwest_wasserstein(a, b);
  const double lp = simplex_wasserstein(a, b);
  if (std::abs(nw - lp) > 1e-9 * std::max(1.0, std::abs(lp))) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "northwest enumeration (" << nw << ") and simplex (" << lp << ") disagree";
    throw NumericalError("oracle", msg.str());
  }
  return lp;
}

DirectResult direct_optimal_control(const DiscreteInstance& inst) {
  if (inst.resource.empty() || inst.resource.size() > kMaxAtoms) throw InvalidInput("oracle: need 1 to 8 resource atoms");
  if (inst.nt < 1 || inst.nt > 2000) throw InvalidInput("oracle: nt must be in [1, 2000]");
  if (inst.demand.size() != static_cast<std::size_t>(inst.nt) + 1) throw InvalidInput("oracle: need nt + 1 demand slices");
  if (!(inst.alpha > 0.0) || !(inst.horizon > 0.0)) throw InvalidInput("oracle: alpha and horizon must be positive");

  Objective obj{inst, {}, inst.resource.size(), inst.nt, inst.horizon / inst.nt, {}};
  obj.rank.resize(obj.atoms);
  std::iota(obj.rank.begin(), obj.rank.end(), 0);
  std::sort(obj.rank.begin(), obj.rank.end(),
            [&](std::size_t a, std::size_t b) { return inst.resource[a].position < inst.resource[b].position; });
  for (std::size_t j = 1; j < obj.atoms; ++j) {
    if (!(inst.resource[obj.rank[j - 1]].position < inst.resource[obj.rank[j]].position)) {
      throw InvalidInput("oracle: resource atoms must sit at distinct positions");
    }
  }
  for (const auto& d : inst.demand) obj.tables.push_back(build_table(d, inst.quantile_samples));

  double m_max = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& a : inst.resource) {
    m_max = std::max(m_max, a.mass);
    lo = std::min(lo, a.position);
    hi = std::max(hi, a.position);
  }
  for (const auto& d : inst.demand) {
    lo = std::min(lo, d.domain().lo);
    hi = std::max(hi, d.domain().hi);
  }
  const double h = obj.h;
  const double T = inst.horizon;
  const double step0 = 1.0 / (2.0 * inst.alpha * inst.alpha * h * m_max + 2.0 * m_max * T * T * h);
  const std::size_t nv = static_cast<std::size_t>(inst.nt) * obj.atoms;

  DirectResult best;
  best.cost = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < inst.restarts; ++restart) {
    std::vector<double> v(nv, 0.0);
    if (restart > 0) {
      std::mt19937_64 rng(inst.seed + static_cast<std::uint64_t>(restart));
      std::normal_distribution<double> noise(0.0, 0.5 * (hi - lo) / T);
      for (auto& e : v) e = noise(rng);
    }
    std::vector<double> g;
    std::vector<double> x;
    double J = obj.evaluate(v, g, x);
    // Shrink a random start until it is admissible; zero velocity always is.
    for (int tries = 0; !std::isfinite(J); ++tries) {
      for (auto& e : v) e = tries < 60 ? 0.5 * e : 0.0;
      J = obj.evaluate(v, g, x);
    }
    double step = step0;
    std::vector<double> v_new(nv);
    std::vector<double> g_new;
    std::vector<double> x_new;
    const double g_scale = norm(g) + 1e-300;
    bool converged = false;
    for (int it = 0; it < inst.iterations; ++it) {
      if (norm(g) <= 1e-10 * g_scale || norm(g) < 1e-14) {
        converged = true;
        break;
      }
      double J_new = 0.0;
      bool accepted = false;
      for (int tries = 0; tries <= 60; ++tries) {
        for (std::size_t e = 0; e < nv; ++e) v_new[e] = v[e] - step * g[e];
        J_new = obj.evaluate(v_new, g_new, x_new);
        if (J_new <= J + 1e-14 * std::abs(J)) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      // No admissible descent step: the iterate is pinned against the order constraint.
      if (!accepted) break;
      double ss = 0.0;
      double sy = 0.0;
      for (std::size_t e = 0; e < nv; ++e) {
        const double s = v_new[e] - v[e];
        const double y = g_new[e] - g[e];
        ss += s * s;
        sy += s * y;
      }
      const bool stalled = J - J_new <= 1e-15 * std::abs(J);
      v.swap(v_new);
      g.swap(g_new);
      x.swap(x_new);
      J = J_new;
      step = sy > 0.0 ? std::clamp(ss / sy, 1e-3 * step0, 1e3 * step0) : step0;
      if (stalled && it > 10) {
        converged = norm(g) <= 1e-6 * g_scale;
        break;
      }
    }
    if (J < best.cost) {
      best.cost = J;
      best.gradient_norm = norm(g);
      best.converged = converged;
      best.best_restart = restart;
      best.positions.assign(static_cast<std::size_t>(inst.nt) + 1, std::vector<double>(obj.atoms));
      best.velocities.assign(static_cast<std::size_t>(inst.nt), std::vector<double>(obj.atoms));
      for (int k = 0; k <= inst.nt; ++k) {
        for (std::size_t i = 0; i < obj.atoms; ++i) {
          best.positions[k][i] = x[k * obj.atoms + i];
          if (k < inst.nt) best.velocities[k][i] = v[k * obj.atoms + i];
        }
      }
    }
  }
  return best;
}

DiscreteLQResult discrete_lq(double alpha, double horizon, double r0, const std::vector<double>& d) {
  if (d.size() < 2) throw InvalidInput("oracle: need at least two demand samples");
  if (!(alpha > 0.0) || !(horizon > 0.0)) throw InvalidInput("oracle: alpha and horizon must be positive");
  const std::size_t n = d.size() - 1;
  const double h = horizon / static_cast<double>(n);
  const double a2 = alpha * alpha;
  std::vector<double> P(n + 1, 0.0);
  std::vector<double> s(n + 1, 0.0);
  std::vector<double> c(n + 1, 0.0);
  std::vector<double> g(n, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    g[k] = 1.0 / (a2 + h * P[k + 1]);
    P[k] = h + g[k] * a2 * P[k + 1];
    s[k] = -h * d[k] + g[k] * a2 * s[k + 1];
    c[k] = h * d[k] * d[k] - h * g[k] * s[k + 1] * s[k + 1] + c[k + 1];
  }
  DiscreteLQResult out;
  out.r.assign(n + 1, 0.0);
  out.u.assign(n, 0.0);
  out.r[0] = r0;
  for (std::size_t k = 0; k < n; ++k) {
    out.u[k] = -(P[k + 1] * out.r[k] + s[k + 1]) * g[k];
    out.r[k + 1] = out.r[k] + h * out.u[k];
  }
  out.cost = P[0] * r0 * r0 + 2.0 * s[0] * r0 + c[0];
  return out;
}

}  // namespace swarmot::oracle
