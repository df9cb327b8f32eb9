#include "swarmot/measures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "swarmot/error.hpp"

namespace swarmot {

namespace {

bool finite(double v) { return std::isfinite(v); }

std::vector<double> merged_breakpoints(const QuantileFunction& a, const QuantileFunction& b) {
  std::vector<double> z = a.breakpoints();
  const std::vector<double> zb = b.breakpoints();
  z.insert(z.end(), zb.begin(), zb.end());
  std::sort(z.begin(), z.end());
  z.erase(std::unique(z.begin(), z.end()), z.end());
  return z;
}

}  // namespace

Interval Interval::hull(double x) const { return {std::min(lo, x), std::max(hi, x)}; }

Interval Interval::hull(const Interval& other) const {
  return {std::min(lo, other.lo), std::max(hi, other.hi)};
}

double Histogram::mass() const {
  double total = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) total += values[k] * (edges[k + 1] - edges[k]);
  return total;
}

// ---------------------------------------------------------------------------
// Density

Density::Density(Interval domain, std::vector<Atom> atoms, Histogram continuous) : domain_(domain) {
  if (!finite(domain.lo) || !finite(domain.hi) || !(domain.hi > domain.lo)) {
    throw InvalidInput("density: domain must be a finite interval with lo < hi");
  }
  const double tol = kPositionTolerance * domain.length();

  for (auto& atom : atoms) {
    if (!finite(atom.position) || !finite(atom.mass)) throw InvalidInput("density: non-finite atom");
    if (atom.mass <= 0.0) throw InvalidInput("density: atom masses must be strictly positive");
    if (!domain.contains(atom.position, tol)) {
      std::ostringstream msg;
      msg << "density: atom at " << atom.position << " outside domain [" << domain.lo << ", " << domain.hi << "]";
      throw InvalidInput(msg.str());
    }
    atom.position = std::clamp(atom.position, domain.lo, domain.hi);
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.position < b.position; });
  for (const auto& atom : atoms) {
    if (!atoms_.empty() && atom.position - atoms_.back().position <= tol) {
      atoms_.back().mass += atom.mass;
    } else {
      atoms_.push_back(atom);
    }
  }

  if (!continuous.values.empty()) {
    if (continuous.edges.size() != continuous.values.size() + 1) {
      throw InvalidInput("density: grid needs exactly one more edge than values");
    }
    for (std::size_t k = 0; k < continuous.values.size(); ++k) {
      const double v = continuous.values[k];
      if (!finite(v) || v < 0.0) throw InvalidInput("density: grid values must be finite and nonnegative");
    }
    for (std::size_t k = 0; k < continuous.edges.size(); ++k) {
      double& e = continuous.edges[k];
      if (!finite(e) || !domain.contains(e, tol)) throw InvalidInput("density: grid edge outside domain");
      e = std::clamp(e, domain.lo, domain.hi);
      if (k > 0 && e < continuous.edges[k - 1]) throw InvalidInput("density: grid edges must be increasing");
    }
    // Drop zero-width cells so edges are strictly increasing.
    Histogram cleaned;
    cleaned.edges.push_back(continuous.edges.front());
    for (std::size_t k = 0; k < continuous.values.size(); ++k) {
      if (continuous.edges[k + 1] > cleaned.edges.back()) {
        cleaned.values.push_back(continuous.values[k]);
        cleaned.edges.push_back(continuous.edges[k + 1]);
      }
    }
    if (!cleaned.values.empty()) continuous_ = std::move(cleaned);
  }

  const double total = atom_mass() + continuous_.mass();
  if (std::abs(total - 1.0) > kMassTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "density: total mass " << total << " differs from 1";
    throw InvalidInput(msg.str());
  }
}

Density Density::normalized(Interval domain, std::vector<Atom> atoms, Histogram continuous) {
  double total = continuous.values.empty() || continuous.edges.size() != continuous.values.size() + 1
                     ? 0.0
                     : continuous.mass();
  for (const auto& atom : atoms) total += atom.mass;
  if (!(total > 0.0) || !finite(total)) throw InvalidInput("density: cannot normalize zero or infinite mass");
  for (auto& atom : atoms) atom.mass /= total;
  for (auto& v : continuous.values) v /= total;
  return Density(domain, std::move(atoms), std::move(continuous));
}

Density Density::point(Interval domain, double position) { return Density(domain, {{position, 1.0}}); }

Density Density::uniform(Interval domain) {
  return Density(domain, {}, Histogram{{domain.lo, domain.hi}, {1.0 / domain.length()}});
}

double Density::atom_mass() const {
  double total = 0.0;
  for (const auto& atom : atoms_) total += atom.mass;
  return total;
}

double Density::mean() const {
  double m = 0.0;
  for (const auto& atom : atoms_) m += atom.mass * atom.position;
  const auto& e = continuous_.edges;
  for (std::size_t k = 0; k < continuous_.values.size(); ++k) {
    m += continuous_.values[k] * 0.5 * (e[k + 1] * e[k + 1] - e[k] * e[k]);
  }
  return m;
}

double Density::density_at(double x) const {
  const auto& e = continuous_.edges;
  if (continuous_.values.empty() || x < e.front() || x >= e.back()) return 0.0;
  const auto it = std::upper_bound(e.begin(), e.end(), x);
  return continuous_.values[static_cast<std::size_t>(it - e.begin()) - 1];
}

// ---------------------------------------------------------------------------
// CDF

CDFFunction::CDFFunction(Interval domain, std::vector<Knot> knots) : domain_(domain), knots_(std::move(knots)) {
  if (knots_.empty()) throw InvalidInput("cdf: no knots");
  const double tol = kOrderTolerance * domain_.length();
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (knots_[k].x < knots_[k - 1].x - tol || knots_[k].value < knots_[k - 1].value - 1e-12) {
      throw InvalidInput("cdf: knots are not monotone");
    }
    knots_[k].x = std::max(knots_[k].x, knots_[k - 1].x);
    knots_[k].value = std::max(knots_[k].value, knots_[k - 1].value);
  }
}

double CDFFunction::operator()(double x) const {
  if (x < knots_.front().x) return 0.0;
  if (x >= knots_.back().x) return knots_.back().value;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                   [](double v, const Knot& k) { return v < k.x; });
  const Knot& hi = *it;
  const Knot& lo = *(it - 1);
  return lo.value + (hi.value - lo.value) * (x - lo.x) / (hi.x - lo.x);
}

double CDFFunction::left_limit(double x) const {
  if (x <= knots_.front().x) return 0.0;
  if (x > knots_.back().x) return knots_.back().value;
  const auto it = std::lower_bound(knots_.begin(), knots_.end(), x,
                                   [](const Knot& k, double v) { return k.x < v; });
  const Knot& hi = *it;
  const Knot& lo = *(it - 1);
  return lo.value + (hi.value - lo.value) * (x - lo.x) / (hi.x - lo.x);
}

double CDFFunction::inverse(double z, Side side) const {
  if (side != Side::right && z <= 0.0) return inverse(0.0, Side::right);
  std::vector<Knot>::const_iterator it;
  if (side == Side::right) {
    it = std::upper_bound(knots_.begin(), knots_.end(), z, [](double v, const Knot& k) { return v < k.value; });
  } else {
    it = std::lower_bound(knots_.begin(), knots_.end(), z, [](const Knot& k, double v) { return k.value < v; });
  }
  if (it == knots_.end()) return knots_.back().x;
  if (it == knots_.begin()) return it->x;
  const Knot& hi = *it;
  const Knot& lo = *(it - 1);
  return lo.x + (hi.x - lo.x) * (z - lo.value) / (hi.value - lo.value);
}

// ---------------------------------------------------------------------------
// Quantile

double QuantileSegment::at(double z) const {
  if (x0 == x1 || z <= z0) return x0;
  if (z >= z1) return x1;
  return x0 + (x1 - x0) * (z - z0) / (z1 - z0);
}

QuantileFunction::QuantileFunction(Interval domain, std::vector<QuantileSegment> segments) : domain_(domain) {
  if (segments.empty()) throw InvalidInput("quantile: no segments");
  const double scale = std::max(domain.length(), 1e-300);
  const double order_tol = kOrderTolerance * scale;
  const double flat_tol = kPositionTolerance * scale;
  constexpr double z_tol = 1e-12;

  if (std::abs(segments.front().z0) > z_tol || std::abs(segments.back().z1 - 1.0) > z_tol) {
    throw InvalidInput("quantile: segments must cover [0, 1]");
  }
  segments.front().z0 = 0.0;
  segments.back().z1 = 1.0;

  for (std::size_t i = 0; i < segments.size(); ++i) {
    auto s = segments[i];
    if (!finite(s.x0) || !finite(s.x1) || !finite(s.z0) || !finite(s.z1)) {
      throw InvalidInput("quantile: non-finite segment");
    }
    if (i > 0) {
      const auto& prev = segments_.empty() ? segments[i - 1] : segments_.back();
      if (std::abs(s.z0 - prev.z1) > z_tol) throw InvalidInput("quantile: segments are not contiguous in z");
      s.z0 = segments_.empty() ? s.z0 : segments_.back().z1;
    }
    if (!(s.z1 > s.z0)) {
      if (s.z1 < s.z0 - z_tol) throw InvalidInput("quantile: segment with z1 < z0");
      continue;
    }
    if (s.x1 < s.x0) {
      if (s.x1 < s.x0 - order_tol) throw InvalidInput("quantile: function is not monotone");
      s.x1 = s.x0;
    }
    if (s.x1 - s.x0 <= flat_tol) s.x1 = s.x0;
    if (!segments_.empty()) {
      auto& prev = segments_.back();
      if (s.x0 < prev.x1) {
        if (s.x0 < prev.x1 - order_tol) throw InvalidInput("quantile: function is not monotone");
        s.x0 = prev.x1;
        if (s.x1 < s.x0) s.x1 = s.x0;
      }
      if (s.flat() && prev.flat() && s.x0 - prev.x0 <= flat_tol) {
        prev.z1 = s.z1;
        continue;
      }
    }
    segments_.push_back(s);
  }
  if (segments_.empty()) throw InvalidInput("quantile: all segments are empty");
  segments_.back().z1 = 1.0;
  domain_ = domain_.hull(segments_.front().x0).hull(segments_.back().x1);
}

std::vector<FlatInterval> QuantileFunction::flat_intervals() const {
  std::vector<FlatInterval> flats;
  for (const auto& s : segments_) {
    if (s.flat()) flats.push_back({s.z0, s.z1, s.x0});
  }
  return flats;
}

std::size_t QuantileFunction::segment_index(double z, Side side) const {
  std::vector<QuantileSegment>::const_iterator it;
  if (side == Side::right) {
    it = std::upper_bound(segments_.begin(), segments_.end(), z,
                          [](double v, const QuantileSegment& s) { return v < s.z1; });
  } else {
    it = std::lower_bound(segments_.begin(), segments_.end(), z,
                          [](const QuantileSegment& s, double v) { return s.z1 < v; });
  }
  if (it == segments_.end()) return segments_.size() - 1;
  return static_cast<std::size_t>(it - segments_.begin());
}

double QuantileFunction::operator()(double z) const {
  if (z <= 0.0) return segments_.front().x0;
  if (z >= 1.0) return segments_.back().x1;
  return segments_[segment_index(z, Side::left)].at(z);
}

double QuantileFunction::right_limit(double z) const {
  if (z >= 1.0) return segments_.back().x1;
  if (z <= 0.0) return segments_.front().x0;
  return segments_[segment_index(z, Side::right)].at(z);
}

std::vector<double> QuantileFunction::breakpoints() const {
  std::vector<double> z;
  z.reserve(segments_.size() + 1);
  for (const auto& s : segments_) z.push_back(s.z0);
  z.push_back(1.0);
  return z;
}

double QuantileFunction::mean() const {
  double m = 0.0;
  for (const auto& s : segments_) m += s.mass() * 0.5 * (s.x0 + s.x1);
  return m;
}

// ---------------------------------------------------------------------------
// Conversions

CDFFunction cdf_of(const Density& d) {
  const auto& dom = d.domain();
  const auto& hist = d.continuous();
  std::vector<double> xs{dom.lo, dom.hi};
  xs.insert(xs.end(), hist.edges.begin(), hist.edges.end());
  for (const auto& atom : d.atoms()) xs.push_back(atom.position);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  std::vector<CDFFunction::Knot> knots;
  knots.reserve(2 * xs.size());
  const auto& atoms = d.atoms();
  std::size_t next_atom = 0;
  double F = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    knots.push_back({xs[i], F});
    if (next_atom < atoms.size() && atoms[next_atom].position == xs[i]) {
      F += atoms[next_atom++].mass;
      knots.push_back({xs[i], F});
    }
    if (i + 1 < xs.size()) {
      const double mid = 0.5 * (xs[i] + xs[i + 1]);
      F += d.density_at(mid) * (xs[i + 1] - xs[i]);
    }
  }
  for (auto& k : knots) k.value = std::min(k.value, 1.0);
  knots.back().value = 1.0;

  std::vector<CDFFunction::Knot> unique;
  for (const auto& k : knots) {
    if (!unique.empty() && unique.back().x == k.x && unique.back().value == k.value) continue;
    unique.push_back(k);
  }
  return CDFFunction(dom, std::move(unique));
}

QuantileFunction quantile_of(const Density& d) {
  const CDFFunction F = cdf_of(d);
  const auto& k = F.knots();
  std::vector<QuantileSegment> segments;
  segments.reserve(k.size());
  for (std::size_t i = 0; i + 1 < k.size(); ++i) {
    // Pieces thinner than summation roundoff (e.g. an empty trailing cell
    // after the CDF is snapped to 1) carry no mass.
    if (k[i + 1].value - k[i].value > 1e-14) segments.push_back({k[i].value, k[i + 1].value, k[i].x, k[i + 1].x});
  }
  // Contiguity in z holds by construction; snap accumulated roundoff.
  for (std::size_t i = 1; i < segments.size(); ++i) segments[i].z0 = segments[i - 1].z1;
  return QuantileFunction(d.domain(), std::move(segments));
}

CDFFunction cdf_from_quantile(const QuantileFunction& q) {
  const auto& dom = q.domain();
  std::vector<CDFFunction::Knot> knots;
  knots.push_back({dom.lo, 0.0});
  for (const auto& s : q.segments()) {
    knots.push_back({s.x0, s.z0});
    knots.push_back({s.x1, s.z1});
  }
  knots.push_back({dom.hi, 1.0});
  std::vector<CDFFunction::Knot> unique;
  for (const auto& k : knots) {
    if (!unique.empty() && unique.back().x == k.x && unique.back().value == k.value) continue;
    unique.push_back(k);
  }
  return CDFFunction(dom, std::move(unique));
}

Density density_from_quantile(const QuantileFunction& q) {
  const auto& dom = q.domain();
  std::vector<Atom> atoms;
  std::vector<double> edges{dom.lo, dom.hi};
  for (const auto& s : q.segments()) {
    if (s.flat()) {
      atoms.push_back({s.x0, s.mass()});
    } else {
      edges.push_back(s.x0);
      edges.push_back(s.x1);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  Histogram hist;
  bool any_continuous = false;
  std::size_t seg = 0;
  const auto& segs = q.segments();
  hist.edges = edges;
  hist.values.assign(edges.size() - 1, 0.0);
  for (std::size_t c = 0; c + 1 < edges.size(); ++c) {
    const double mid = 0.5 * (edges[c] + edges[c + 1]);
    while (seg < segs.size() && (segs[seg].flat() || segs[seg].x1 <= mid)) ++seg;
    if (seg < segs.size() && segs[seg].x0 <= mid) {
      hist.values[c] = segs[seg].mass() / (segs[seg].x1 - segs[seg].x0);
      any_continuous = true;
    }
  }
  if (!any_continuous) hist = {};
  return Density(dom, std::move(atoms), std::move(hist));
}

Density pushforward(const Density& d, const ScalarMap& f, int refine) {
  if (refine < 1) throw InvalidInput("pushforward: refine must be >= 1");
  const QuantileFunction q = quantile_of(d);
  std::vector<QuantileSegment> out;
  Interval dom = d.domain();
  double previous = -std::numeric_limits<double>::infinity();
  const double tol = kOrderTolerance * dom.length();
  auto image = [&](double x) {
    const double y = f(x);
    if (!finite(y)) throw InvalidInput("pushforward: map returned a non-finite value");
    if (y < previous - tol) throw InvalidInput("pushforward: map is not nondecreasing on the support");
    previous = std::max(previous, y);
    dom = dom.hull(y);
    return y;
  };
  for (const auto& s : q.segments()) {
    if (s.flat()) {
      const double y = image(s.x0);
      out.push_back({s.z0, s.z1, y, y});
      continue;
    }
    double z_prev = s.z0;
    double y_prev = image(s.x0);
    for (int j = 1; j <= refine; ++j) {
      const double z = j == refine ? s.z1 : s.z0 + (s.z1 - s.z0) * j / refine;
      const double y = image(s.at(z));
      out.push_back({z_prev, z, y_prev, y});
      z_prev = z;
      y_prev = y;
    }
  }
  return density_from_quantile(QuantileFunction(dom, std::move(out)));
}

QuantileFunction interpolate_quantiles(const QuantileFunction& qa, const QuantileFunction& qb, double s) {
  const std::vector<double> z = merged_breakpoints(qa, qb);
  std::vector<QuantileSegment> segments;
  segments.reserve(z.size());
  const double r = 1.0 - s;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double x0 = r * qa.right_limit(z[i]) + s * qb.right_limit(z[i]);
    const double x1 = r * qa(z[i + 1]) + s * qb(z[i + 1]);
    segments.push_back({z[i], z[i + 1], x0, x1});
  }
  return QuantileFunction(qa.domain().hull(qb.domain()), std::move(segments));
}

double squared_l2_quantile_distance(const QuantileFunction& qa, const QuantileFunction& qb) {
  const std::vector<double> z = merged_breakpoints(qa, qb);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double d0 = qa.right_limit(z[i]) - qb.right_limit(z[i]);
    const double d1 = qa(z[i + 1]) - qb(z[i + 1]);
    total += affine_square_integral(d0, d1, z[i + 1] - z[i]);
  }
  return total;
}

double l2_quantile_distance(const QuantileFunction& qa, const QuantileFunction& qb) {
  return std::sqrt(std::max(0.0, squared_l2_quantile_distance(qa, qb)));
}

double squared_wasserstein2(const Density& a, const Density& b) {
  const CDFFunction Fa = cdf_of(a);
  const CDFFunction Fb = cdf_of(b);
  std::vector<double> levels;
  for (const auto& k : Fa.knots()) levels.push_back(k.value);
  for (const auto& k : Fb.knots()) levels.push_back(k.value);
  levels.push_back(0.0);
  levels.push_back(1.0);
  for (auto& l : levels) l = std::clamp(l, 0.0, 1.0);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    const double lo = levels[i];
    const double hi = levels[i + 1];
    const double d0 = Fa.inverse(lo, Side::right) - Fb.inverse(lo, Side::right);
    const double d1 = Fa.inverse(hi, Side::left) - Fb.inverse(hi, Side::left);
    total += affine_square_integral(d0, d1, hi - lo);
  }
  return std::max(0.0, total);
}

double wasserstein2(const Density& a, const Density& b) { return std::sqrt(squared_wasserstein2(a, b)); }

double density_discrepancy(const Density& a, const Density& b) {
  std::vector<double> edges;
  for (const auto* d : {&a, &b}) {
    const auto& e = d->continuous().edges;
    edges.insert(edges.end(), e.begin(), e.end());
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double mid = 0.5 * (edges[k] + edges[k + 1]);
    total += std::abs(a.density_at(mid) - b.density_at(mid)) * (edges[k + 1] - edges[k]);
  }

  const double tol = kPositionTolerance * a.domain().hull(b.domain()).length();
  const auto& aa = a.atoms();
  const auto& ba = b.atoms();
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < aa.size() || j < ba.size()) {
    if (j == ba.size() || (i < aa.size() && aa[i].position < ba[j].position - tol)) {
      total += aa[i++].mass;
    } else if (i == aa.size() || ba[j].position < aa[i].position - tol) {
      total += ba[j++].mass;
    } else {
      total += std::abs(aa[i++].mass - ba[j++].mass);
    }
  }
  return total;
}

Density gaussian_mixture(Interval domain, int cells, const std::vector<GaussianComponent>& components) {
  if (cells < 1) throw InvalidInput("density: mixture needs at least one cell");
  if (components.empty()) throw InvalidInput("density: mixture needs at least one component");
  for (const auto& c : components) {
    if (!(c.variance > 0.0) || !(c.weight >= 0.0) || !finite(c.mean)) {
      throw InvalidInput("density: mixture components need weight >= 0 and variance > 0");
    }
  }
  auto cdf = [&](double x) {
    double F = 0.0;
    for (const auto& c : components) F += c.weight * 0.5 * std::erfc(-(x - c.mean) / std::sqrt(2.0 * c.variance));
    return F;
  };
  Histogram hist;
  hist.edges.resize(static_cast<std::size_t>(cells) + 1);
  for (int k = 0; k <= cells; ++k) {
    hist.edges[static_cast<std::size_t>(k)] = k == cells ? domain.hi : domain.lo + domain.length() * k / cells;
  }
  hist.values.resize(static_cast<std::size_t>(cells));
  for (std::size_t k = 0; k < hist.values.size(); ++k) {
    const double width = hist.edges[k + 1] - hist.edges[k];
    hist.values[k] = std::max(0.0, cdf(hist.edges[k + 1]) - cdf(hist.edges[k])) / width;
  }
  return Density::normalized(domain, {}, std::move(hist));
}

}  // namespace swarmot
