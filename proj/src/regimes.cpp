#include "swarmot/regimes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "swarmot/error.hpp"

namespace swarmot {

namespace {

// Five-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGaussNodes{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                            0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                              0.4786286704993665, 0.2369268850561891};

struct TrackSpec {
  double z;
  Side side;
  int cell;
  double r0;
};

struct SimpsonPiece {
  std::size_t a;
  std::size_t mid;
  std::size_t b;
  double width;
};

// Tracked percentile nodes for an initial quantile. Path tracks come first;
// cost-only midpoints (for Simpson's rule over the continuum) follow.
struct Layout {
  std::vector<PathSegment> segments;
  std::vector<TrackSpec> specs;
  std::size_t path_tracks = 0;
  std::vector<SimpsonPiece> continuum;
  std::vector<std::size_t> cell_track;
};

Layout make_layout(const QuantileFunction& q0, const std::vector<double>& extra, double z_res) {
  if (!(z_res > 0.0)) throw InvalidInput("regimes: z_resolution must be positive");
  Layout L;
  struct Pending {
    double z0;
    double z1;
    std::size_t a;
    std::size_t b;
    double r_mid;
  };
  std::vector<Pending> pending;
  int cell = 0;
  for (const auto& s : q0.segments()) {
    if (s.flat()) {
      const std::size_t idx = L.specs.size();
      L.specs.push_back({0.5 * (s.z0 + s.z1), Side::center, cell++, s.x0});
      L.cell_track.push_back(idx);
      L.segments.push_back({s.z0, s.z1, idx, idx});
      continue;
    }
    std::vector<double> breaks{s.z0, s.z1};
    for (double z : extra) {
      if (z > s.z0 && z < s.z1) breaks.push_back(z);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    // Right-side spec index of the previous node.
    std::size_t prev_right = L.specs.size();
    L.specs.push_back({s.z0, Side::right, -1, s.x0});
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
      const double lo = breaks[b];
      const double hi = breaks[b + 1];
      const int m = std::max(1, static_cast<int>(std::ceil((hi - lo) / z_res - 1e-9)));
      double z_prev = lo;
      for (int j = 1; j <= m; ++j) {
        const double z = j == m ? hi : lo + (hi - lo) * j / m;
        const bool last = b + 2 == breaks.size() && j == m;
        const bool doubled = j == m && !last;
        const std::size_t left = L.specs.size();
        L.specs.push_back({z, last || doubled ? Side::left : Side::center, -1, s.at(z)});
        L.segments.push_back({z_prev, z, prev_right, left});
        pending.push_back({z_prev, z, prev_right, left, s.at(0.5 * (z_prev + z))});
        if (doubled) {
          prev_right = L.specs.size();
          L.specs.push_back({z, Side::right, -1, s.at(z)});
        } else {
          prev_right = left;
        }
        z_prev = z;
      }
    }
  }
  L.path_tracks = L.specs.size();
  for (const auto& p : pending) {
    const std::size_t mid = L.specs.size();
    L.specs.push_back({0.5 * (p.z0 + p.z1), Side::center, -1, p.r_mid});
    L.continuum.push_back({p.a, mid, p.b, p.z1 - p.z0});
  }
  return L;
}

double demand_value(const TrackSpec& s, const QuantileFunction& qd, const std::vector<double>& means) {
  if (s.cell >= 0) return means[static_cast<std::size_t>(s.cell)];
  return s.side == Side::right ? qd.right_limit(s.z) : qd(s.z);
}

// Cell-weighted costs plus Simpson over the continuum pieces.
double assemble(const Layout& L, const LevelSetPartition& p, const std::vector<double>& per_track) {
  double total = 0.0;
  for (std::size_t c = 0; c < L.cell_track.size(); ++c) total += p.cells()[c].mass() * per_track[L.cell_track[c]];
  for (const auto& piece : L.continuum) {
    total += piece.width / 6.0 * (per_track[piece.a] + 4.0 * per_track[piece.mid] + per_track[piece.b]);
  }
  return total;
}

// Resource order along the path: nondecreasing everywhere and strictly
// increasing between interval cells (atoms never merge).
void check_order(const Layout& L, const std::vector<double>& times,
                 const std::function<double(std::size_t track, std::size_t k)>& position, double length) {
  const double tol = kOrderTolerance * length;
  for (std::size_t k = 0; k < times.size(); ++k) {
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& s : L.segments) {
      const double x0 = position(s.start, k);
      const double x1 = position(s.end, k);
      if (x0 < prev - tol || x1 < x0 - tol) {
        std::ostringstream msg;
        msg << "resource quantile lost monotonicity at t=" << times[k] << " near z=" << s.z0;
        throw NumericalError("regimes", msg.str());
      }
      prev = x1;
    }
    for (std::size_t c = 1; c < L.cell_track.size(); ++c) {
      if (!(position(L.cell_track[c - 1], k) < position(L.cell_track[c], k))) {
        std::ostringstream msg;
        msg << "atoms " << c - 1 << " and " << c << " met or crossed at t=" << times[k];
        throw NumericalError("regimes", msg.str());
      }
    }
  }
}

Interval path_domain(const Scenario& sc) { return sc.resource.domain().hull(sc.demand.domain()); }

void validate(const Scenario& sc) {
  if (!(sc.alpha > 0.0) || !std::isfinite(sc.alpha)) throw InvalidInput("regimes: alpha must be positive");
  if (sc.grid.nt < 2) throw InvalidInput("regimes: grid.nt must be >= 2");
  if (sc.grid.advect_refine < 1) throw InvalidInput("regimes: advect_refine must be >= 1");
}

void fill_trajectory(OptimalControlSolution& sol) {
  sol.resource_quantiles.clear();
  sol.trajectory.clear();
  for (double t : sol.times) {
    sol.resource_quantiles.push_back(sol.path.quantile_at(t));
    sol.trajectory.push_back(density_from_quantile(sol.resource_quantiles.back()));
  }
}

void finish_realized(OptimalControlSolution& sol, const Scenario& sc, const SolveOptions& options, const Density& start,
                     double span, int steps) {
  const VelocityField v = sol.velocity();
  if (options.simulate) {
    sol.simulation = advect_density(start, v, span, steps, sc.grid.advect_refine);
    sol.realized = evaluate_cost(sol.simulation->times, sol.simulation->densities, v, sc.demand, sc.alpha, &sol.partition);
  } else {
    sol.realized = evaluate_cost(sol.times, sol.trajectory, v, sc.demand, sc.alpha, &sol.partition);
  }
}

std::vector<QuantileFunction> demand_quantiles(const DemandSignal& demand, const std::vector<double>& times) {
  std::vector<QuantileFunction> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(demand.quantile_at(t));
  return out;
}

struct Fourier {
  std::vector<std::complex<double>> c;
  std::vector<double> gain;
  double omega = 0.0;
  double tail = 0.0;
  double average_cost = 0.0;

  double state(double t) const {
    double v = c[0].real();
    for (std::size_t m = 1; m < c.size(); ++m) {
      v += 2.0 * (c[m] * gain[m] * std::polar(1.0, omega * m * t)).real();
    }
    return v;
  }
  double control(double t) const {
    double v = 0.0;
    for (std::size_t m = 1; m < c.size(); ++m) {
      const std::complex<double> iw(0.0, omega * m);
      v += 2.0 * (iw * c[m] * gain[m] * std::polar(1.0, omega * m * t)).real();
    }
    return v;
  }
};

Fourier fourier_track(const std::vector<double>& d, double period, int harmonics, double alpha) {
  const std::size_t n = d.size();
  Fourier f;
  f.omega = 2.0 * std::numbers::pi / period;
  f.c.assign(static_cast<std::size_t>(harmonics) + 1, 0.0);
  f.gain.assign(f.c.size(), 1.0);
  double energy = 0.0;
  for (double v : d) energy += v * v;
  energy /= static_cast<double>(n);
  double captured = 0.0;
  for (std::size_t m = 0; m < f.c.size(); ++m) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += d[k] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(m * k % n) / static_cast<double>(n));
    }
    f.c[m] = acc / static_cast<double>(n);
    const double aw = alpha * f.omega * static_cast<double>(m);
    f.gain[m] = 1.0 / (aw * aw + 1.0);
    const double power = std::norm(f.c[m]);
    captured += m == 0 ? power : 2.0 * power;
    if (m > 0) f.average_cost += 2.0 * power * aw * aw / (aw * aw + 1.0);
  }
  f.tail = std::max(0.0, energy - captured);
  f.average_cost += f.tail;
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// DemandSignal

DemandSignal DemandSignal::constant(Density d) {
  DemandSignal s;
  s.kind_ = Kind::constant;
  s.fixed_quantile_ = std::make_shared<const QuantileFunction>(quantile_of(d));
  s.fixed_ = std::make_shared<const Density>(std::move(d));
  return s;
}

DemandSignal DemandSignal::periodic(double period, std::function<Density(double)> rule) {
  if (!(period > 0.0) || !std::isfinite(period)) throw InvalidInput("regimes: demand period must be positive");
  if (!rule) throw InvalidInput("regimes: periodic demand needs a rule");
  DemandSignal s;
  s.kind_ = Kind::periodic;
  s.period_ = period;
  s.rule_ = std::move(rule);
  return s;
}

DemandSignal DemandSignal::sampled(std::vector<double> times, std::vector<Density> slices) {
  if (times.empty() || times.size() != slices.size()) throw InvalidInput("regimes: sampled demand needs one slice per time");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) throw InvalidInput("regimes: sampled demand times must increase");
  }
  DemandSignal s;
  s.kind_ = Kind::sampled;
  s.times_ = std::move(times);
  for (const auto& d : slices) s.quantiles_.push_back(quantile_of(d));
  s.slices_ = std::move(slices);
  return s;
}

Interval DemandSignal::domain() const {
  switch (kind_) {
    case Kind::constant:
      return fixed_->domain();
    case Kind::periodic:
      return rule_(0.0).domain();
    case Kind::sampled: {
      Interval d = slices_.front().domain();
      for (const auto& s : slices_) d = d.hull(s.domain());
      return d;
    }
  }
  return {};
}

bool DemandSignal::covers(double t0, double t1) const {
  if (kind_ != Kind::sampled) return true;
  const double tol = 1e-12 * std::max(1.0, std::abs(times_.back()));
  return times_.front() <= t0 + tol && times_.back() >= t1 - tol;
}

Density DemandSignal::density_at(double t) const {
  switch (kind_) {
    case Kind::constant:
      return *fixed_;
    case Kind::periodic:
      return rule_(t - period_ * std::floor(t / period_));
    case Kind::sampled: {
      const auto it = std::lower_bound(times_.begin(), times_.end(), t);
      if (it != times_.end() && *it == t) return slices_[static_cast<std::size_t>(it - times_.begin())];
      return density_from_quantile(quantile_at(t));
    }
  }
  throw InvalidInput("regimes: unknown demand kind");
}

QuantileFunction DemandSignal::quantile_at(double t) const {
  switch (kind_) {
    case Kind::constant:
      return *fixed_quantile_;
    case Kind::periodic:
      return quantile_of(density_at(t));
    case Kind::sampled: {
      if (!covers(t, t)) {
        std::ostringstream msg;
        msg << "regimes: sampled demand does not cover t=" << t;
        throw InvalidInput(msg.str());
      }
      if (t <= times_.front()) return quantiles_.front();
      if (t >= times_.back()) return quantiles_.back();
      const auto it = std::upper_bound(times_.begin(), times_.end(), t);
      const std::size_t k = static_cast<std::size_t>(it - times_.begin()) - 1;
      const double s = (t - times_[k]) / (times_[k + 1] - times_[k]);
      if (s == 0.0) return quantiles_[k];
      return interpolate_quantiles(quantiles_[k], quantiles_[k + 1], s);
    }
  }
  throw InvalidInput("regimes: unknown demand kind");
}

// ---------------------------------------------------------------------------
// QuantilePath

namespace {

struct PathData {
  Interval domain;
  std::vector<PathSegment> segments;
  std::vector<Track> tracks;
};

QuantileFunction path_quantile(const PathData& d, double t) {
  std::vector<double> x(d.tracks.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = d.tracks[i].state(t);
  std::vector<QuantileSegment> segs;
  segs.reserve(d.segments.size());
  Interval dom = d.domain;
  for (const auto& s : d.segments) {
    segs.push_back({s.z0, s.z1, x[s.start], x[s.end]});
    dom = dom.hull(x[s.start]).hull(x[s.end]);
  }
  return QuantileFunction(dom, std::move(segs));
}

PercentileSlice path_velocity(const std::shared_ptr<const PathData>& d, double t) {
  auto c = std::make_shared<std::vector<double>>(d->tracks.size());
  for (std::size_t i = 0; i < c->size(); ++i) (*c)[i] = d->tracks[i].control(t);
  return [d, c](double z, Side side) {
    const auto& segs = d->segments;
    std::vector<PathSegment>::const_iterator it;
    if (side == Side::right) {
      it = std::upper_bound(segs.begin(), segs.end(), z, [](double v, const PathSegment& s) { return v < s.z1; });
    } else {
      it = std::lower_bound(segs.begin(), segs.end(), z, [](const PathSegment& s, double v) { return s.z1 < v; });
    }
    if (it == segs.end()) --it;
    const auto& s = *it;
    if (s.cell()) return (*c)[s.start];
    const double f = std::clamp((z - s.z0) / (s.z1 - s.z0), 0.0, 1.0);
    return (*c)[s.start] + f * ((*c)[s.end] - (*c)[s.start]);
  };
}

}  // namespace

struct QuantilePathAccess {
  static std::shared_ptr<const PathData> make(Interval domain, std::vector<PathSegment> segments,
                                              std::vector<Track> tracks) {
    return std::make_shared<const PathData>(PathData{domain, std::move(segments), std::move(tracks)});
  }
};

QuantilePath::QuantilePath(Interval domain, std::vector<PathSegment> segments, std::vector<Track> tracks)
    : domain_(domain), segments_(std::move(segments)), tracks_(std::move(tracks)) {
  if (segments_.empty()) throw InvalidInput("regimes: empty quantile path");
  for (const auto& s : segments_) {
    if (s.start >= tracks_.size() || s.end >= tracks_.size()) throw InvalidInput("regimes: path segment refers to a missing track");
  }
}

QuantileFunction QuantilePath::quantile_at(double t) const {
  return path_quantile(PathData{domain_, segments_, tracks_}, t);
}

PercentileSlice QuantilePath::velocity_at(double t) const {
  return path_velocity(QuantilePathAccess::make(domain_, segments_, tracks_), t);
}

QuantileVelocity QuantilePath::quantile_velocity() const {
  auto data = QuantilePathAccess::make(domain_, segments_, tracks_);
  return QuantileVelocity([data](double t) { return path_velocity(data, t); });
}

std::function<QuantileFunction(double)> QuantilePath::as_function() const {
  auto data = QuantilePathAccess::make(domain_, segments_, tracks_);
  return [data](double t) { return path_quantile(*data, t); };
}

VelocityField QuantilePath::velocity() const { return from_quantile_path(as_function(), quantile_velocity()); }

std::vector<std::vector<double>> OptimalControlSolution::atom_positions() const {
  std::vector<std::vector<double>> out(times.size(), std::vector<double>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t k = 0; k < times.size() && k < cells[i].r.size(); ++k) out[k][i] = cells[i].r[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cost evaluation

CostBreakdown evaluate_cost(const std::vector<double>& times, const std::vector<Density>& trajectory,
                            const VelocityField& v, const DemandSignal& demand, double alpha,
                            const LevelSetPartition* partition) {
  if (times.size() != trajectory.size() || times.empty()) throw InvalidInput("regimes: trajectory and times differ in length");
  CostBreakdown out;
  out.times = times;
  std::vector<QuantileFunction> qd;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    const Density& r = trajectory[k];
    const Density d = demand.density_at(t);
    out.assignment_rate.push_back(squared_wasserstein2(r, d));

    const SpatialSlice slice = v.at(t);
    double mx = 0.0;
    for (const auto& a : r.atoms()) {
      const double w = slice(a.position, Side::center);
      mx += a.mass * w * w;
    }
    const auto& hist = r.continuous();
    for (std::size_t c = 0; c < hist.values.size(); ++c) {
      if (hist.values[c] == 0.0) continue;
      const double lo = hist.edges[c];
      const double hi = hist.edges[c + 1];
      double acc = 0.0;
      for (std::size_t g = 0; g < kGaussNodes.size(); ++g) {
        const double w = slice(0.5 * (lo + hi) + 0.5 * (hi - lo) * kGaussNodes[g], Side::center);
        acc += kGaussWeights[g] * w * w;
      }
      mx += hist.values[c] * 0.5 * (hi - lo) * acc;
    }

    const QuantileFunction q = quantile_of(r);
    const PercentileSlice u = compose_with_quantile(q, slice);
    double mz = 0.0;
    for (const auto& s : q.segments()) {
      if (s.flat()) {
        const double w = u(0.5 * (s.z0 + s.z1), Side::center);
        mz += s.mass() * w * w;
        continue;
      }
      double acc = 0.0;
      for (std::size_t g = 0; g < kGaussNodes.size(); ++g) {
        const double w = u(0.5 * (s.z0 + s.z1) + 0.5 * s.mass() * kGaussNodes[g], Side::center);
        acc += kGaussWeights[g] * w * w;
      }
      mz += 0.5 * s.mass() * acc;
    }
    out.motion_rate_x.push_back(mx);
    out.motion_rate_z.push_back(mz);
    out.motion_identity_gap = std::max(out.motion_identity_gap, std::abs(mx - mz));
    if (partition != nullptr) qd.push_back(quantile_of(d));
  }
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double h = times[k] - times[k - 1];
    out.assignment += 0.5 * h * (out.assignment_rate[k - 1] + out.assignment_rate[k]);
    out.motion += 0.5 * h * (out.motion_rate_x[k - 1] + out.motion_rate_x[k]);
  }
  out.total = out.assignment + alpha * alpha * out.motion;
  if (partition != nullptr) out.K = limit_constant_K(qd, times, *partition);
  return out;
}

// ---------------------------------------------------------------------------
// Solvers

OptimalControlSolution solve_general(const Scenario& sc, const SolveOptions& options) {
  validate(sc);
  if (!(sc.horizon > 0.0)) throw InvalidInput("regimes: horizon must be positive");
  if (!sc.demand.covers(0.0, sc.horizon)) throw InvalidInput("regimes: demand does not cover [0, T]");
  const LQParams params{sc.alpha, sc.horizon, sc.grid.nt};
  params.validate();

  OptimalControlSolution sol;
  sol.regime = Regime::general;
  sol.alpha = sc.alpha;
  sol.horizon = sc.horizon;
  sol.times = params.grid();
  const QuantileFunction q0 = quantile_of(sc.resource);
  sol.partition = build_partition(q0);

  const std::vector<QuantileFunction> qd = demand_quantiles(sc.demand, sol.times);
  std::vector<std::vector<double>> means;
  for (const auto& q : qd) means.push_back(cell_averages(q, sol.partition));
  const Layout L = make_layout(q0, qd.front().breakpoints(), sc.grid.z_resolution);

  std::vector<std::shared_ptr<const ScalarLQSolution>> solved;
  std::vector<double> costs;
  for (const auto& spec : L.specs) {
    std::vector<double> d(sol.times.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = demand_value(spec, qd[k], means[k]);
    solved.push_back(std::make_shared<const ScalarLQSolution>(solve_scalar(params, spec.r0, d)));
    costs.push_back(solved.back()->cost);
  }
  check_order(L, sol.times, [&](std::size_t i, std::size_t k) { return solved[i]->r[k]; }, path_domain(sc).length());

  std::vector<Track> tracks;
  for (std::size_t i = 0; i < L.path_tracks; ++i) {
    auto s = solved[i];
    tracks.push_back({[s](double t) { return s->state_at(t); }, [s](double t) { return s->control_at(t); }});
  }
  sol.path = QuantilePath(path_domain(sc), L.segments, std::move(tracks));
  for (std::size_t idx : L.cell_track) sol.cells.push_back(*solved[idx]);
  sol.K = limit_constant_K(qd, sol.times, sol.partition);
  sol.predicted_cost = assemble(L, sol.partition, costs) + sol.K;
  fill_trajectory(sol);
  finish_realized(sol, sc, options, sc.resource, sc.horizon, sc.grid.nt);
  return sol;
}

OptimalControlSolution solve_static(const Scenario& sc, const SolveOptions& options) {
  validate(sc);
  if (sc.demand.kind() != DemandSignal::Kind::constant) throw InvalidInput("regimes: static solver needs a constant demand");
  if (!(sc.horizon > 0.0)) throw InvalidInput("regimes: horizon must be positive");
  const LQParams params{sc.alpha, sc.horizon, sc.grid.nt};
  params.validate();
  const double alpha = sc.alpha;
  const double T = sc.horizon;

  OptimalControlSolution sol;
  sol.regime = Regime::static_demand;
  sol.alpha = alpha;
  sol.horizon = T;
  sol.times = params.grid();
  const QuantileFunction q0 = quantile_of(sc.resource);
  sol.partition = build_partition(q0);
  const Density D = sc.demand.density_at(0.0);
  const QuantileFunction qd = quantile_of(D);
  const QuantileFunction qbar = average_wrt_partition(qd, sol.partition);
  sol.averaged_demand = density_from_quantile(qbar);
  const std::vector<double> means = cell_averages(qd, sol.partition);
  const Layout L = make_layout(q0, qd.breakpoints(), sc.grid.z_resolution);

  auto phi = [params](double t) { return transition_r(params, t, 0.0); };
  auto dphi = [params](double t) {
    return -sinh_cosh_ratio((params.horizon - t) / params.alpha, params.horizon / params.alpha) / params.alpha;
  };
  std::vector<double> targets;
  for (const auto& spec : L.specs) targets.push_back(demand_value(spec, qd, means));
  check_order(
      L, sol.times,
      [&](std::size_t i, std::size_t k) {
        const double f = phi(sol.times[k]);
        return f * L.specs[i].r0 + (1.0 - f) * targets[i];
      },
      path_domain(sc).length());

  std::vector<Track> tracks;
  for (std::size_t i = 0; i < L.path_tracks; ++i) {
    const double r0 = L.specs[i].r0;
    const double target = targets[i];
    tracks.push_back({[=](double t) { return phi(t) * r0 + (1.0 - phi(t)) * target; },
                      [=](double t) { return dphi(t) * (r0 - target); }});
  }
  sol.path = QuantilePath(path_domain(sc), L.segments, std::move(tracks));

  const std::vector<double> p = riccati_samples(params);
  for (std::size_t c = 0; c < L.cell_track.size(); ++c) {
    const auto& spec = L.specs[L.cell_track[c]];
    const double target = targets[L.cell_track[c]];
    ScalarLQSolution cell;
    cell.alpha = alpha;
    cell.times = sol.times;
    cell.p = p;
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
      const double t = sol.times[k];
      cell.d.push_back(target);
      cell.y.push_back(-p[k] * target);
      cell.r.push_back(phi(t) * spec.r0 + (1.0 - phi(t)) * target);
      cell.u.push_back(dphi(t) * (spec.r0 - target));
    }
    cell.cost = (spec.r0 - target) * (spec.r0 - target) * alpha * std::tanh(T / alpha);
    sol.cells.push_back(std::move(cell));
  }

  const double w_reach = squared_wasserstein2(*sol.averaged_demand, D);
  sol.K = T * w_reach;
  sol.predicted_cost = squared_wasserstein2(sc.resource, *sol.averaged_demand) * alpha * std::tanh(T / alpha) + sol.K;

  const SpatialSlice M = compose_with_cdf(q0, [qbar](double z, Side side) { return qbar.value(z, side); });
  const Density r0 = sc.resource;
  const int refine = std::max(16, sc.grid.advect_refine);
  sol.closed_form_trajectory = [M, r0, params, refine](double t) {
    const double f = transition_r(params, t, 0.0);
    return pushforward(r0, [&](double x) { return f * x + (1.0 - f) * M(x, Side::center); }, refine);
  };
  fill_trajectory(sol);
  finish_realized(sol, sc, options, sc.resource, T, sc.grid.nt);
  return sol;
}

OptimalControlSolution solve_periodic(const Scenario& sc, const SolveOptions& options) {
  validate(sc);
  double P = 0.0;
  if (sc.demand.kind() == DemandSignal::Kind::periodic) {
    P = sc.demand.period();
  } else if (sc.demand.kind() == DemandSignal::Kind::constant) {
    P = sc.horizon;
  } else {
    throw InvalidInput("regimes: periodic solver needs a periodic demand");
  }
  if (!(P > 0.0)) throw InvalidInput("regimes: period must be positive");
  const int N = sc.grid.nt;
  if (N < 4) throw InvalidInput("regimes: periodic solver needs grid.nt >= 4");
  if (sc.grid.harmonics < 1) throw InvalidInput("regimes: harmonics must be >= 1");
  const int H = std::min(sc.grid.harmonics, N / 2 - 1);
  const double alpha = sc.alpha;

  OptimalControlSolution sol;
  sol.regime = Regime::periodic;
  sol.alpha = alpha;
  sol.horizon = P;
  for (int k = 0; k <= N; ++k) sol.times.push_back(k == N ? P : P * k / N);
  const QuantileFunction q0 = quantile_of(sc.resource);
  sol.partition = build_partition(q0);

  const std::vector<double> period_times(sol.times.begin(), sol.times.end() - 1);
  const std::vector<QuantileFunction> qd = demand_quantiles(sc.demand, period_times);
  std::vector<std::vector<double>> means;
  for (const auto& q : qd) means.push_back(cell_averages(q, sol.partition));
  const Layout L = make_layout(q0, qd.front().breakpoints(), sc.grid.z_resolution);

  std::vector<std::shared_ptr<const Fourier>> fits;
  std::vector<double> costs;
  std::vector<double> tails;
  for (const auto& spec : L.specs) {
    std::vector<double> d(period_times.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = demand_value(spec, qd[k], means[k]);
    fits.push_back(std::make_shared<const Fourier>(fourier_track(d, P, H, alpha)));
    costs.push_back(fits.back()->average_cost);
    tails.push_back(fits.back()->tail);
  }
  check_order(L, sol.times, [&](std::size_t i, std::size_t k) { return fits[i]->state(sol.times[k]); },
              path_domain(sc).length());

  double K = 0.0;
  for (const auto& q : qd) K += averaging_residual(q, sol.partition);
  sol.K = K / static_cast<double>(qd.size());
  sol.predicted_cost = assemble(L, sol.partition, costs) + sol.K;
  sol.truncation_tail = assemble(L, sol.partition, tails);

  std::vector<Track> tracks;
  for (std::size_t i = 0; i < L.path_tracks; ++i) {
    auto f = fits[i];
    tracks.push_back({[f](double t) { return f->state(t); }, [f](double t) { return f->control(t); }});
  }
  sol.path = QuantilePath(path_domain(sc), L.segments, std::move(tracks));

  const double warm_span = 3.0 * alpha;
  const int warm_steps = std::max(10, static_cast<int>(std::ceil(warm_span / (P / N))));
  for (int k = 0; k <= warm_steps; ++k) sol.warmup_times.push_back(warm_span * k / warm_steps);
  sol.warmup_positions.assign(sol.warmup_times.size(), std::vector<double>(L.cell_track.size()));

  for (std::size_t c = 0; c < L.cell_track.size(); ++c) {
    const std::size_t idx = L.cell_track[c];
    const auto& f = *fits[idx];
    ScalarLQSolution cell;
    cell.alpha = alpha;
    cell.times = sol.times;
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
      const double t = sol.times[k];
      const double r = f.state(t);
      const double u = f.control(t);
      cell.p.push_back(alpha);
      cell.r.push_back(r);
      cell.u.push_back(u);
      cell.y.push_back(-alpha * alpha * u - alpha * r);
      cell.d.push_back(demand_value(L.specs[idx], qd[k % qd.size()], means[k % qd.size()]));
    }
    cell.cost = f.average_cost * P;
    for (std::size_t m = 0; m < f.c.size(); ++m) {
      const double amp = m == 0 ? std::abs(f.c[0]) : 2.0 * std::abs(f.c[m]);
      sol.frequency_table.push_back({c, static_cast<int>(m), f.omega * static_cast<double>(m), amp, f.gain[m] * amp, f.gain[m]});
    }
    const double offset = L.specs[idx].r0 - f.state(0.0);
    for (std::size_t k = 0; k < sol.warmup_times.size(); ++k) {
      const double t = sol.warmup_times[k];
      sol.warmup_positions[k][c] = f.state(t) + offset * std::exp(-t / alpha);
    }
    sol.cells.push_back(std::move(cell));
  }

  fill_trajectory(sol);
  finish_realized(sol, sc, options, sol.trajectory.front(), P, N);
  // Report the realized figures per unit time, like the prediction.
  auto& r = sol.realized;
  r.assignment /= P;
  r.motion /= P;
  r.total /= P;
  r.K /= P;
  return sol;
}

PeriodicTimeDomain periodic_time_domain(const Scenario& sc, int periods) {
  validate(sc);
  if (sc.demand.kind() != DemandSignal::Kind::periodic) throw InvalidInput("regimes: time-domain check needs a periodic demand");
  if (periods < 3) throw InvalidInput("regimes: need at least 3 periods");
  const double P = sc.demand.period();
  const int N = sc.grid.nt;
  const LQParams params{sc.alpha, P * periods, N * periods};
  params.validate();
  const std::vector<double> times = params.grid();
  const QuantileFunction q0 = quantile_of(sc.resource);
  const LevelSetPartition part = build_partition(q0);
  const std::vector<QuantileFunction> qd = demand_quantiles(sc.demand, times);
  std::vector<std::vector<double>> means;
  for (const auto& q : qd) means.push_back(cell_averages(q, part));
  const Layout L = make_layout(q0, qd.front().breakpoints(), sc.grid.z_resolution);

  const std::size_t k0 = static_cast<std::size_t>(N);
  const std::size_t k1 = static_cast<std::size_t>(N) * static_cast<std::size_t>(periods - 1);
  const double window = P * (periods - 2);
  PeriodicTimeDomain out;
  std::vector<double> averages;
  std::vector<ScalarLQSolution> solved;
  for (const auto& spec : L.specs) {
    std::vector<double> d(times.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = demand_value(spec, qd[k], means[k]);
    solved.push_back(solve_scalar(params, spec.r0, d));
    averages.push_back(solved.back().cost_between(k0, k1) / window);
  }
  double K = 0.0;
  for (std::size_t k = k0; k < k1; ++k) {
    K += 0.5 * (averaging_residual(qd[k], part) + averaging_residual(qd[k + 1], part)) * (times[k + 1] - times[k]);
  }
  out.K = K / window;
  out.average_cost = assemble(L, part, averages) + out.K;
  for (std::size_t idx : L.cell_track) out.cells.push_back(solved[idx]);
  return out;
}

int cross_correlation_peak_lag(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw InvalidInput("regimes: cross-correlation needs equal non-empty signals");
  const int n = static_cast<int>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (int k = 0; k < n; ++k) {
    ma += a[static_cast<std::size_t>(k)];
    mb += b[static_cast<std::size_t>(k)];
  }
  ma /= n;
  mb /= n;
  auto corr = [&](int lag) {
    double c = 0.0;
    for (int k = 0; k < n; ++k) {
      const int j = ((k + lag) % n + n) % n;
      c += (a[static_cast<std::size_t>(k)] - ma) * (b[static_cast<std::size_t>(j)] - mb);
    }
    return c;
  };
  // Lag 0 wins ties.
  int best_lag = 0;
  double best = corr(0);
  for (int lag = -(n - 1) / 2; lag <= n / 2; ++lag) {
    const double c = corr(lag);
    if (lag != 0 && c > best + 1e-12 * std::abs(best)) {
      best = c;
      best_lag = lag;
    }
  }
  return best_lag;
}

}  // namespace swarmot
