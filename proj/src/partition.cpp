#include "swarmot/partition.hpp"

#include <algorithm>
#include <cmath>

#include "swarmot/error.hpp"

namespace swarmot {

namespace {

// Integral of q over [a, b] and of (q - c)^2 over [a, b], piece by piece.
double integral_on(const QuantileFunction& q, double a, double b) {
  double total = 0.0;
  for (const auto& s : q.segments()) {
    const double lo = std::max(a, s.z0);
    const double hi = std::min(b, s.z1);
    if (hi <= lo) continue;
    total += 0.5 * (s.at(lo) + s.at(hi)) * (hi - lo);
  }
  return total;
}

double residual_on(const QuantileFunction& q, double a, double b, double c) {
  double total = 0.0;
  for (const auto& s : q.segments()) {
    const double lo = std::max(a, s.z0);
    const double hi = std::min(b, s.z1);
    if (hi <= lo) continue;
    total += affine_square_integral(s.at(lo) - c, s.at(hi) - c, hi - lo);
  }
  return total;
}

}  // namespace

LevelSetPartition::LevelSetPartition(std::vector<PartitionCell> cells) : cells_(std::move(cells)) {
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto& c = cells_[i];
    if (!(c.z_hi > c.z_lo) || c.z_lo < 0.0 || c.z_hi > 1.0) throw InvalidInput("partition: bad cell bounds");
    if (i > 0 && (c.z_lo < cells_[i - 1].z_hi || !(c.level > cells_[i - 1].level))) {
      throw InvalidInput("partition: cells must be disjoint with strictly increasing levels");
    }
  }
}

std::vector<double> LevelSetPartition::index_values() const {
  std::vector<double> levels;
  levels.reserve(cells_.size());
  for (const auto& c : cells_) levels.push_back(c.level);
  return levels;
}

double LevelSetPartition::singleton_measure() const {
  double m = 1.0;
  for (const auto& c : cells_) m -= c.mass();
  return std::max(0.0, m);
}

int LevelSetPartition::cell_of(double z) const {
  const auto it = std::lower_bound(cells_.begin(), cells_.end(), z,
                                   [](const PartitionCell& c, double v) { return c.z_hi < v; });
  if (it == cells_.end() || z < it->z_lo) return -1;
  if (z == it->z_lo && it != cells_.begin() && (it - 1)->z_hi == z) return static_cast<int>(it - cells_.begin()) - 1;
  return static_cast<int>(it - cells_.begin());
}

LevelSetPartition build_partition(const QuantileFunction& q0) {
  std::vector<PartitionCell> cells;
  for (const auto& f : q0.flat_intervals()) cells.push_back({f.z_lo, f.z_hi, f.value});
  return LevelSetPartition(std::move(cells));
}

std::vector<double> cell_averages(const QuantileFunction& qd, const LevelSetPartition& p) {
  std::vector<double> means;
  means.reserve(p.cells().size());
  for (const auto& c : p.cells()) means.push_back(integral_on(qd, c.z_lo, c.z_hi) / c.mass());
  return means;
}

QuantileFunction average_wrt_partition(const QuantileFunction& qd, const LevelSetPartition& p) {
  if (p.trivial()) return qd;
  const std::vector<double> means = cell_averages(qd, p);
  std::vector<QuantileSegment> out;
  auto copy_range = [&](double a, double b) {
    for (const auto& s : qd.segments()) {
      const double lo = std::max(a, s.z0);
      const double hi = std::min(b, s.z1);
      if (hi > lo) out.push_back({lo, hi, s.at(lo), s.at(hi)});
    }
  };
  double z = 0.0;
  for (std::size_t i = 0; i < p.cells().size(); ++i) {
    const auto& c = p.cells()[i];
    copy_range(z, c.z_lo);
    out.push_back({c.z_lo, c.z_hi, means[i], means[i]});
    z = c.z_hi;
  }
  copy_range(z, 1.0);
  return QuantileFunction(qd.domain(), std::move(out));
}

Density averaged_density(const Density& d, const LevelSetPartition& p) {
  return density_from_quantile(average_wrt_partition(quantile_of(d), p));
}

double averaging_residual(const QuantileFunction& qd, const LevelSetPartition& p) {
  const std::vector<double> means = cell_averages(qd, p);
  double total = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    total += residual_on(qd, p.cells()[i].z_lo, p.cells()[i].z_hi, means[i]);
  }
  return total;
}

double limit_constant_K(const std::vector<QuantileFunction>& qd_series, const std::vector<double>& times,
                        const LevelSetPartition& p) {
  if (qd_series.size() != times.size() || times.empty()) {
    throw InvalidInput("partition: demand series and time grid differ in length");
  }
  double K = 0.0;
  double prev = averaging_residual(qd_series[0], p);
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double cur = averaging_residual(qd_series[k], p);
    K += 0.5 * (prev + cur) * (times[k] - times[k - 1]);
    prev = cur;
  }
  return K;
}

double squared_l2_on(const QuantileFunction& a, const QuantileFunction& b, double z_lo, double z_hi) {
  std::vector<double> z{z_lo, z_hi};
  for (double v : a.breakpoints()) {
    if (v > z_lo && v < z_hi) z.push_back(v);
  }
  for (double v : b.breakpoints()) {
    if (v > z_lo && v < z_hi) z.push_back(v);
  }
  std::sort(z.begin(), z.end());
  z.erase(std::unique(z.begin(), z.end()), z.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double d0 = a.right_limit(z[i]) - b.right_limit(z[i]);
    const double d1 = a(z[i + 1]) - b(z[i + 1]);
    total += affine_square_integral(d0, d1, z[i + 1] - z[i]);
  }
  return total;
}

}  // namespace swarmot
