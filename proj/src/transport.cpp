#include "swarmot/transport.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "swarmot/error.hpp"

namespace swarmot {

namespace {

// Bilinear lookup on a regular grid; rows are times, columns are space.
double bilinear(const std::vector<std::vector<double>>& values, double s, double t) {
  const double nt = static_cast<double>(values.size() - 1);
  const double nx = static_cast<double>(values.front().size() - 1);
  const double ts = std::clamp(t, 0.0, 1.0) * nt;
  const double xs = std::clamp(s, 0.0, 1.0) * nx;
  const std::size_t k = std::min(static_cast<std::size_t>(ts), values.size() > 1 ? values.size() - 2 : 0);
  const std::size_t j = std::min(static_cast<std::size_t>(xs), values.front().size() > 1 ? values.front().size() - 2 : 0);
  const double ft = values.size() > 1 ? ts - static_cast<double>(k) : 0.0;
  const double fx = values.front().size() > 1 ? xs - static_cast<double>(j) : 0.0;
  const std::size_t k1 = std::min(k + 1, values.size() - 1);
  const std::size_t j1 = std::min(j + 1, values.front().size() - 1);
  const double a = values[k][j] * (1 - fx) + values[k][j1] * fx;
  const double b = values[k1][j] * (1 - fx) + values[k1][j1] * fx;
  return a * (1 - ft) + b * ft;
}

void check_grid(const std::vector<std::vector<double>>& values) {
  if (values.empty() || values.front().empty()) throw InvalidInput("transport: empty velocity grid");
  for (const auto& row : values) {
    if (row.size() != values.front().size()) throw InvalidInput("transport: ragged velocity grid");
    for (double v : row) {
      if (!std::isfinite(v)) throw InvalidInput("transport: non-finite velocity sample");
    }
  }
}

struct Tracker {
  struct Piece {
    double z0;
    double z1;
    std::size_t a;
    std::size_t b;
  };
  std::vector<double> x;
  std::vector<Side> side;
  std::vector<double> mass;
  std::vector<Piece> pieces;
};

Tracker make_tracker(const QuantileFunction& q, int refine) {
  Tracker tr;
  for (const auto& s : q.segments()) {
    if (s.flat()) {
      tr.pieces.push_back({s.z0, s.z1, tr.x.size(), tr.x.size()});
      tr.x.push_back(s.x0);
      tr.side.push_back(Side::center);
      tr.mass.push_back(s.mass());
      continue;
    }
    const std::size_t first = tr.x.size();
    for (int j = 0; j <= refine; ++j) {
      const double z = j == refine ? s.z1 : s.z0 + (s.z1 - s.z0) * j / refine;
      tr.x.push_back(s.at(z));
      tr.side.push_back(j == 0 ? Side::right : (j == refine ? Side::left : Side::center));
      tr.mass.push_back(0.0);
      if (j > 0) {
        const double zp = s.z0 + (s.z1 - s.z0) * (j - 1) / refine;
        tr.pieces.push_back({zp, z, first + j - 1, first + j});
      }
    }
  }
  return tr;
}

QuantileFunction tracker_quantile(const Tracker& tr, Interval domain) {
  std::vector<QuantileSegment> segs;
  segs.reserve(tr.pieces.size());
  for (const auto& p : tr.pieces) segs.push_back({p.z0, p.z1, tr.x[p.a], tr.x[p.b]});
  for (double x : tr.x) domain = domain.hull(x);
  return QuantileFunction(domain, std::move(segs));
}

}  // namespace

// ---------------------------------------------------------------------------
// Field constructors

VelocityField VelocityField::zero() { return constant(0.0); }

VelocityField VelocityField::constant(double c) {
  return VelocityField([c](double) { return SpatialSlice([c](double, Side) { return c; }); });
}

VelocityField VelocityField::from_rule(std::function<double(double, double)> rule) {
  return VelocityField([rule = std::move(rule)](double t) {
    return SpatialSlice([rule, t](double x, Side) { return rule(x, t); });
  });
}

VelocityField VelocityField::sampled(Interval domain, double t0, double t1, std::vector<std::vector<double>> values) {
  check_grid(values);
  if (!(t1 > t0)) throw InvalidInput("transport: sampled field needs t1 > t0");
  auto grid = std::make_shared<const std::vector<std::vector<double>>>(std::move(values));
  return VelocityField([grid, domain, t0, t1](double t) {
    const double st = (t - t0) / (t1 - t0);
    return SpatialSlice([grid, domain, st](double x, Side) {
      return bilinear(*grid, (x - domain.lo) / domain.length(), st);
    });
  });
}

QuantileVelocity QuantileVelocity::zero() { return constant(0.0); }

QuantileVelocity QuantileVelocity::constant(double c) {
  return QuantileVelocity([c](double) { return PercentileSlice([c](double, Side) { return c; }); });
}

QuantileVelocity QuantileVelocity::from_rule(std::function<double(double, double)> rule) {
  return QuantileVelocity([rule = std::move(rule)](double t) {
    return PercentileSlice([rule, t](double z, Side) { return rule(z, t); });
  });
}

QuantileVelocity QuantileVelocity::sampled(double t0, double t1, std::vector<std::vector<double>> values) {
  check_grid(values);
  if (!(t1 > t0)) throw InvalidInput("transport: sampled field needs t1 > t0");
  auto grid = std::make_shared<const std::vector<std::vector<double>>>(std::move(values));
  return QuantileVelocity([grid, t0, t1](double t) {
    const double st = (t - t0) / (t1 - t0);
    return PercentileSlice([grid, st](double z, Side) { return bilinear(*grid, z, st); });
  });
}

// ---------------------------------------------------------------------------
// Characteristics

DensitySeries advect_density(const Density& r0, const VelocityField& v, double T, int nt, int refine) {
  if (nt < 1) throw InvalidInput("transport: nt must be >= 1");
  if (refine < 1) throw InvalidInput("transport: refine must be >= 1");
  if (!(T > 0.0)) throw InvalidInput("transport: horizon must be positive");

  Tracker tr = make_tracker(quantile_of(r0), refine);
  const std::size_t n = tr.x.size();
  const double h = T / nt;
  const double tol = kOrderTolerance * r0.domain().length();

  DensitySeries out;
  out.point_mass = tr.mass;
  auto record = [&](double t) {
    QuantileFunction q = tracker_quantile(tr, r0.domain());
    out.times.push_back(t);
    out.densities.push_back(density_from_quantile(q));
    out.quantiles.push_back(std::move(q));
    out.points.push_back(tr.x);
  };
  record(0.0);

  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);
  auto eval = [&](double t, const std::vector<double>& x, std::vector<double>& k) {
    const SpatialSlice slice = v.at(t);
    for (std::size_t i = 0; i < n; ++i) {
      k[i] = slice(x[i], tr.side[i]);
      if (!std::isfinite(k[i])) throw NumericalError("transport", "velocity is not finite along a characteristic");
    }
  };
  for (int step = 0; step < nt; ++step) {
    const double t = T * step / nt;
    eval(t, tr.x, k1);
    for (std::size_t i = 0; i < n; ++i) stage[i] = tr.x[i] + 0.5 * h * k1[i];
    eval(t + 0.5 * h, stage, k2);
    for (std::size_t i = 0; i < n; ++i) stage[i] = tr.x[i] + 0.5 * h * k2[i];
    eval(t + 0.5 * h, stage, k3);
    for (std::size_t i = 0; i < n; ++i) stage[i] = tr.x[i] + h * k3[i];
    eval(t + h, stage, k4);
    for (std::size_t i = 0; i < n; ++i) tr.x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    for (std::size_t i = 1; i < n; ++i) {
      if (tr.x[i] < tr.x[i - 1] - tol) {
        std::ostringstream msg;
        msg << "characteristics crossed at t=" << t + h << " (tolerance " << tol << ")";
        throw NumericalError("transport", msg.str());
      }
      tr.x[i] = std::max(tr.x[i], tr.x[i - 1]);
    }
    record(step + 1 == nt ? T : t + h);
  }
  return out;
}

double FlowMap::at(std::size_t k, double x) const {
  const auto& row = positions.at(k);
  if (x <= origins.front()) return row.front() + (x - origins.front());
  if (x >= origins.back()) return row.back() + (x - origins.back());
  const auto it = std::upper_bound(origins.begin(), origins.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - origins.begin()) - 1;
  const double f = (x - origins[j]) / (origins[j + 1] - origins[j]);
  return row[j] + f * (row[j + 1] - row[j]);
}

FlowMap flow_map(const VelocityField& v, Interval domain, double T, int nt, int nx) {
  if (nt < 1 || nx < 1) throw InvalidInput("transport: nt and nx must be >= 1");
  FlowMap fm;
  const std::size_t n = static_cast<std::size_t>(nx) + 1;
  fm.origins.resize(n);
  for (std::size_t j = 0; j < n; ++j) fm.origins[j] = j == n - 1 ? domain.hi : domain.lo + domain.length() * j / nx;
  std::vector<double> x = fm.origins;
  fm.times.push_back(0.0);
  fm.positions.push_back(x);
  const double h = T / nt;
  const double tol = kOrderTolerance * domain.length();
  std::vector<double> k1(n), k2(n), k3(n), k4(n);
  for (int step = 0; step < nt; ++step) {
    const double t = T * step / nt;
    const SpatialSlice s0 = v.at(t);
    const SpatialSlice sm = v.at(t + 0.5 * h);
    const SpatialSlice s1 = v.at(t + h);
    for (std::size_t j = 0; j < n; ++j) {
      k1[j] = s0(x[j], Side::center);
      k2[j] = sm(x[j] + 0.5 * h * k1[j], Side::center);
      k3[j] = sm(x[j] + 0.5 * h * k2[j], Side::center);
      k4[j] = s1(x[j] + h * k3[j], Side::center);
      x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      if (j > 0 && x[j] < x[j - 1] - tol) throw NumericalError("transport", "flow map lost monotonicity");
    }
    fm.times.push_back(step + 1 == nt ? T : t + h);
    fm.positions.push_back(x);
  }
  return fm;
}

QuantileSeries evolve_quantile(const QuantileFunction& q0, const QuantileVelocity& u, double T, int nt, double max_dz) {
  if (nt < 1) throw InvalidInput("transport: nt must be >= 1");
  if (!(max_dz > 0.0)) throw InvalidInput("transport: max_dz must be positive");

  struct Node {
    double z;
    Side side;
  };
  std::vector<Node> nodes;
  std::vector<double> x;
  std::vector<Tracker::Piece> pieces;
  std::vector<FlatInterval> flats;
  for (const auto& s : q0.segments()) {
    if (s.flat()) {
      pieces.push_back({s.z0, s.z1, x.size(), x.size()});
      nodes.push_back({0.5 * (s.z0 + s.z1), Side::center});
      x.push_back(s.x0);
      flats.push_back({s.z0, s.z1, s.x0});
      continue;
    }
    const int m = std::max(1, static_cast<int>(std::ceil((s.z1 - s.z0) / max_dz - 1e-12)));
    const std::size_t first = x.size();
    for (int j = 0; j <= m; ++j) {
      const double z = j == m ? s.z1 : s.z0 + (s.z1 - s.z0) * j / m;
      nodes.push_back({z, j == 0 ? Side::right : (j == m ? Side::left : Side::center)});
      x.push_back(s.at(z));
      if (j > 0) pieces.push_back({nodes[first + j - 1].z, z, first + j - 1, first + j});
    }
  }

  QuantileSeries out;
  auto record = [&](double t) {
    std::vector<QuantileSegment> segs;
    Interval dom = q0.domain();
    for (const auto& p : pieces) segs.push_back({p.z0, p.z1, x[p.a], x[p.b]});
    for (double v : x) dom = dom.hull(v);
    try {
      out.quantiles.emplace_back(dom, std::move(segs));
    } catch (const InvalidInput&) {
      std::ostringstream msg;
      msg << "evolved quantile lost monotonicity at t=" << t << "; u is not admissible";
      throw NumericalError("transport", msg.str());
    }
    out.times.push_back(t);
  };
  auto check_flats = [&](const PercentileSlice& slice, double t) {
    for (const auto& f : flats) {
      const double a = slice(f.z_lo, Side::right);
      const double b = slice(0.5 * (f.z_lo + f.z_hi), Side::center);
      const double c = slice(f.z_hi, Side::left);
      const double spread = std::max({a, b, c}) - std::min({a, b, c});
      if (spread > input_constraint_tolerance(std::max({std::abs(a), std::abs(b), std::abs(c)}))) {
        std::ostringstream msg;
        msg << "u is not constant on the flat [" << f.z_lo << ", " << f.z_hi << "] at t=" << t;
        throw NumericalError("transport", msg.str());
      }
    }
  };

  record(0.0);
  const double h = T / nt;
  for (int step = 0; step < nt; ++step) {
    const double t = T * step / nt;
    const PercentileSlice s0 = u.at(t);
    const PercentileSlice sm = u.at(t + 0.5 * h);
    const PercentileSlice s1 = u.at(t + h);
    check_flats(s0, t);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto& nd = nodes[i];
      x[i] += h / 6.0 * (s0(nd.z, nd.side) + 4.0 * sm(nd.z, nd.side) + s1(nd.z, nd.side));
    }
    record(step + 1 == nt ? T : t + h);
  }
  check_flats(u.at(T), T);
  return out;
}

// ---------------------------------------------------------------------------
// Change of variables

PercentileSlice compose_with_quantile(const QuantileFunction& q, const SpatialSlice& v) {
  return [q, v](double z, Side side) {
    const auto& s = q.segments()[q.segment_index(z, side == Side::right ? Side::right : Side::left)];
    if (s.flat()) return v(s.x0, Side::center);
    if (z <= s.z0) return v(s.x0, Side::right);
    if (z >= s.z1) return v(s.x1, Side::left);
    return v(s.at(z), Side::center);
  };
}

SpatialSlice compose_with_cdf(const QuantileFunction& q, const PercentileSlice& u, const QuantileFunction* constraint) {
  if (constraint != nullptr) {
    for (const auto& f : constraint->flat_intervals()) {
      const double a = u(f.z_lo, Side::right);
      const double b = u(0.5 * (f.z_lo + f.z_hi), Side::center);
      const double c = u(f.z_hi, Side::left);
      const double spread = std::max({a, b, c}) - std::min({a, b, c});
      if (spread > input_constraint_tolerance(std::max({std::abs(a), std::abs(b), std::abs(c)}))) {
        std::ostringstream msg;
        msg << "transport: percentile velocity is not constant on the flat [" << f.z_lo << ", " << f.z_hi << "]";
        throw InvalidInput(msg.str());
      }
    }
  }
  return [q, u](double x, Side side) {
    const auto& segs = q.segments();
    // Value carried by a segment at its ends. A flat is an atom: F(x) is the
    // top of the flat, which still lies inside it from the left.
    auto start = [&](const QuantileSegment& s) { return s.flat() ? u(s.z1, Side::left) : u(s.z0, Side::right); };
    auto end = [&](const QuantileSegment& s) { return u(s.z1, Side::left); };

    const auto it = std::lower_bound(segs.begin(), segs.end(), x,
                                     [](const QuantileSegment& s, double v) { return s.x1 < v; });
    if (it == segs.end()) return end(segs.back());
    const std::size_t i = static_cast<std::size_t>(it - segs.begin());
    const auto& s = *it;
    if (x < s.x0) {
      if (i == 0) return start(s);
      const auto& prev = segs[i - 1];
      return x - prev.x1 <= s.x0 - x ? end(prev) : start(s);
    }
    if (x == s.x1 && i + 1 < segs.size() && segs[i + 1].x0 == x) {
      const auto& next = segs[i + 1];
      if (side == Side::right || (side == Side::center && next.flat() && !s.flat())) return start(next);
    }
    if (s.flat()) return u(s.z1, Side::left);
    if (x <= s.x0) return u(s.z0, Side::right);
    if (x >= s.x1) return u(s.z1, Side::left);
    const double z = s.z0 + (x - s.x0) / (s.x1 - s.x0) * (s.z1 - s.z0);
    return u(z, Side::center);
  };
}

QuantileCoordinates to_quantile_coords(const Density& r, const VelocityField& v) {
  QuantileFunction q = quantile_of(r);
  QuantileVelocity u([q, v](double t) { return compose_with_quantile(q, v.at(t)); });
  return {std::move(q), std::move(u)};
}

QuantileVelocity to_quantile_coords(std::function<QuantileFunction(double)> path, const VelocityField& v) {
  return QuantileVelocity([path = std::move(path), v](double t) { return compose_with_quantile(path(t), v.at(t)); });
}

VelocityField from_quantile_coords(const QuantileFunction& q, const QuantileVelocity& u, const Density& companion) {
  const QuantileFunction qc = quantile_of(companion);
  return VelocityField([q, qc, u](double t) { return compose_with_cdf(qc, u.at(t), &q); });
}

VelocityField from_quantile_path(std::function<QuantileFunction(double)> path, const QuantileVelocity& u) {
  return VelocityField([path = std::move(path), u](double t) {
    const QuantileFunction q = path(t);
    return compose_with_cdf(q, u.at(t), &q);
  });
}

double input_constraint_tolerance(double velocity_scale) { return 1e-9 * std::max(1.0, std::abs(velocity_scale)); }

double grid_tolerance(double length, double dt, double time_scale) {
  const double r = dt / time_scale;
  return length * r * r;
}

}  // namespace swarmot
