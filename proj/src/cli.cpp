#include "swarmot/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "swarmot/assignment.hpp"
#include "swarmot/oracle.hpp"

namespace swarmot::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

double to_number(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw ConfigError(key, "expected a number, got '" + t + "'");
  }
  return v;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw ConfigError("output_dir", "cannot write " + path.string());
    out_ << "# schema=1\n";
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << fmt(values[i]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

// Percentiles sampled for the quantile columns of trajectory files.
constexpr int kQuantileColumns = 16;

double column_percentile(int j) { return (j + 0.5) / kQuantileColumns; }

void add_quantile_header(std::vector<std::string>& header) {
  for (int j = 0; j < kQuantileColumns; ++j) header.push_back("q_" + fmt(column_percentile(j)));
}

void add_quantile_values(std::vector<double>& row, const QuantileFunction& q) {
  for (int j = 0; j < kQuantileColumns; ++j) row.push_back(q(column_percentile(j)));
}

struct Results {
  std::vector<std::pair<std::string, std::string>> lines;
  void add(const std::string& k, double v) { lines.emplace_back(k, fmt(v)); }
  void add(const std::string& k, const std::string& v) { lines.emplace_back(k, v); }
};

void write_summary(const std::filesystem::path& dir, const std::string& subcommand, const Config& c, const Results& r) {
  std::ofstream out(dir / "summary.txt");
  if (!out) throw ConfigError("output_dir", "cannot write " + (dir / "summary.txt").string());
  out << "# swarmot " << subcommand << "\n[effective-config]\n";
  for (const auto& [k, v] : c.values()) {
    out << k << " = " << v << (c.overridden(k) ? "  # override" : "") << '\n';
  }
  out << "[results]\n";
  for (const auto& [k, v] : r.lines) out << k << " = " << v << '\n';
}

Interval parse_domain(const Config& c, const std::string& key) {
  const auto v = c.numbers(key);
  if (v.size() != 2 || !(v[1] > v[0])) throw ConfigError(key, "expected 'lo, hi' with lo < hi");
  return {v[0], v[1]};
}

struct DensityParts {
  Interval domain;
  std::vector<Atom> atoms;
  std::vector<GaussianComponent> gaussians;
  double uniform = 0.0;
  Histogram explicit_grid;
};

DensityParts read_parts(const Config& c, const std::string& prefix, const std::string& fallback_domain) {
  DensityParts p;
  if (c.has(prefix + "domain")) {
    p.domain = parse_domain(c, prefix + "domain");
  } else if (!fallback_domain.empty() && c.has(fallback_domain)) {
    p.domain = parse_domain(c, fallback_domain);
  } else {
    throw ConfigError(prefix + "domain", "missing");
  }
  if (c.has(prefix + "atoms")) {
    for (const auto& t : c.tuples(prefix + "atoms", 2)) {
      if (!p.domain.contains(t[0])) throw ConfigError(prefix + "atoms", "atom at " + fmt(t[0]) + " lies outside the domain");
      if (!(t[1] >= 0.0)) throw ConfigError(prefix + "atoms", "atom masses must be nonnegative");
      p.atoms.push_back({t[0], t[1]});
    }
  }
  if (c.has(prefix + "gaussians")) {
    for (const auto& t : c.tuples(prefix + "gaussians", 3)) {
      if (!(t[0] >= 0.0) || !(t[2] > 0.0)) throw ConfigError(prefix + "gaussians", "need weight >= 0 and variance > 0");
      p.gaussians.push_back({t[0], t[1], t[2]});
    }
  }
  if (c.has(prefix + "uniform")) {
    p.uniform = c.number(prefix + "uniform");
    if (!(p.uniform >= 0.0)) throw ConfigError(prefix + "uniform", "weight must be nonnegative");
  }
  const bool edges = c.has(prefix + "grid.edges");
  const bool values = c.has(prefix + "grid.values");
  if (edges != values) throw ConfigError(prefix + "grid", "grid.edges and grid.values go together");
  if (edges) {
    if (!p.gaussians.empty() || p.uniform > 0.0) {
      throw ConfigError(prefix + "grid", "an explicit grid cannot be combined with gaussians or uniform");
    }
    p.explicit_grid.edges = c.numbers(prefix + "grid.edges");
    p.explicit_grid.values = c.numbers(prefix + "grid.values");
    if (p.explicit_grid.edges.size() != p.explicit_grid.values.size() + 1) {
      throw ConfigError(prefix + "grid", "need one more edge than values");
    }
  }
  return p;
}

Density assemble_density(const DensityParts& p, const std::string& prefix, int nx, const std::vector<double>& weights,
                         const std::vector<double>& shifts) {
  Histogram h = p.explicit_grid;
  std::vector<GaussianComponent> comps = p.gaussians;
  double gauss_weight = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (!weights.empty()) comps[i].weight *= weights[i];
    gauss_weight += comps[i].weight;
  }
  if (gauss_weight > 0.0 || p.uniform > 0.0) {
    h.edges.resize(static_cast<std::size_t>(nx) + 1);
    for (int k = 0; k <= nx; ++k) h.edges[static_cast<std::size_t>(k)] = p.domain.lo + p.domain.length() * k / nx;
    h.values.assign(static_cast<std::size_t>(nx), p.uniform / p.domain.length());
    if (gauss_weight > 0.0) {
      const Density g = gaussian_mixture(p.domain, nx, comps);
      for (std::size_t k = 0; k < h.values.size(); ++k) h.values[k] += gauss_weight * g.continuous().values[k];
    }
  }
  std::vector<Atom> atoms = p.atoms;
  for (std::size_t i = 0; i < atoms.size() && !shifts.empty(); ++i) atoms[i].position += shifts[i];
  if (atoms.empty() && h.values.empty()) throw ConfigError(prefix + "atoms", "density has no mass (give atoms, gaussians, uniform or grid)");
  try {
    return Density::normalized(p.domain, std::move(atoms), std::move(h));
  } catch (const InvalidInput& e) {
    throw ConfigError(prefix.substr(0, prefix.size() - 1), e.what());
  }
}

Density parse_density_with(const Config& c, const std::string& prefix, int nx, const std::string& fallback_domain) {
  return assemble_density(read_parts(c, prefix, fallback_domain), prefix, nx, {}, {});
}

int grid_int(const Config& c, const std::string& key, long long fallback, long long min) {
  const long long v = c.integer(key, fallback);
  if (v < min) throw ConfigError(key, "must be >= " + std::to_string(min));
  if (v > 100000000) throw ConfigError(key, "unreasonably large");
  return static_cast<int>(v);
}

// Defaults written back so the summary shows every value actually used.
void fill_defaults(Config& c) {
  const std::pair<const char*, const char*> defaults[] = {
      {"grid.nt", "1000"},          {"grid.nx", "200"},           {"grid.harmonics", "64"},
      {"grid.z_resolution", "0.0078125"}, {"grid.advect_refine", "8"}, {"seed", "0"},
      {"output_dir", "out"}};
  for (const auto& [k, v] : defaults) {
    if (!c.has(k)) c.set(k, v);
  }
}

// ---------------------------------------------------------------------------
// Subcommands

void write_partition(const std::filesystem::path& dir, const LevelSetPartition& p) {
  std::ofstream out(dir / "partition.txt");
  out << "# schema=1\n";
  out << "interval_cells = " << p.cells().size() << '\n';
  out << "singleton_measure = " << fmt(p.singleton_measure()) << '\n';
  for (std::size_t i = 0; i < p.cells().size(); ++i) {
    const auto& cell = p.cells()[i];
    out << "cell " << i << " z_lo = " << fmt(cell.z_lo) << " z_hi = " << fmt(cell.z_hi) << " level = " << fmt(cell.level)
        << '\n';
  }
}

void write_cells(const std::filesystem::path& dir, const OptimalControlSolution& sol) {
  Csv csv(dir / "lq_cells.csv", {"cell", "z_lo", "z_hi", "r0", "d_start", "d_end", "r_end", "cost"});
  for (std::size_t i = 0; i < sol.cells.size(); ++i) {
    const auto& cell = sol.partition.cells()[i];
    const auto& s = sol.cells[i];
    csv.row({static_cast<double>(i), cell.z_lo, cell.z_hi, s.r.front(), s.d.front(), s.d.back(), s.r.back(), s.cost});
  }
}

// t, distance to `target(t)`, atom positions, quantile samples.
void write_trajectory(const std::filesystem::path& file, const OptimalControlSolution& sol, const std::string& distance_name,
                      const std::function<Density(double)>& target) {
  std::vector<std::string> header{"t", distance_name};
  for (std::size_t i = 0; i < sol.cells.size(); ++i) header.push_back("atom_" + std::to_string(i));
  add_quantile_header(header);
  Csv csv(file, header);
  const auto positions = sol.atom_positions();
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    std::vector<double> row{sol.times[k], wasserstein2(sol.trajectory[k], target(sol.times[k]))};
    row.insert(row.end(), positions[k].begin(), positions[k].end());
    add_quantile_values(row, sol.resource_quantiles[k]);
    csv.row(row);
  }
}

void add_cost(Results& r, const OptimalControlSolution& sol) {
  r.add("predicted_cost", sol.predicted_cost);
  r.add("realized_cost", sol.realized.total);
  r.add("realized_assignment", sol.realized.assignment);
  r.add("realized_motion", sol.realized.motion);
  r.add("relative_gap", std::abs(sol.realized.total - sol.predicted_cost) / std::max(1e-300, std::abs(sol.predicted_cost)));
  r.add("K", sol.K);
  r.add("motion_identity_gap", sol.realized.motion_identity_gap);
  r.add("interval_cells", std::to_string(sol.partition.cells().size()));
  r.add("simulated", sol.simulation ? "yes" : "no");
}

void cmd_solve_static(const Config& c, const Scenario& sc, const std::filesystem::path& dir, std::ostream& out) {
  const auto sol = solve_static(sc);
  const Density& reach = *sol.averaged_demand;
  Results r;
  add_cost(r, sol);
  const double w0 = wasserstein2(sc.resource, reach);
  const double wT = wasserstein2(sol.trajectory.back(), reach);
  r.add("w2_initial_to_reachable", w0);
  r.add("w2_final_to_reachable", wT);
  r.add("final_ratio", w0 > 0.0 ? wT / w0 : 0.0);
  r.add("expected_final_ratio", 1.0 / std::cosh(sc.horizon / sc.alpha));
  write_summary(dir, "solve-static", c, r);
  write_partition(dir, sol.partition);
  write_cells(dir, sol);
  write_trajectory(dir / "trajectory.csv", sol, "w2_to_reachable", [&](double) { return reach; });
  out << "predicted_cost = " << fmt(sol.predicted_cost) << "\nrealized_cost = " << fmt(sol.realized.total) << '\n';
}

void cmd_solve_general(const Config& c, const Scenario& sc, const std::filesystem::path& dir, std::ostream& out) {
  const auto sol = solve_general(sc);
  Results r;
  add_cost(r, sol);
  write_summary(dir, "solve-general", c, r);
  write_partition(dir, sol.partition);
  write_cells(dir, sol);
  write_trajectory(dir / "trajectory.csv", sol, "w2_to_demand", [&](double t) { return sc.demand.density_at(t); });
  out << "predicted_cost = " << fmt(sol.predicted_cost) << "\nrealized_cost = " << fmt(sol.realized.total) << '\n';
}

void cmd_solve_periodic(const Config& c, const Scenario& sc, const std::filesystem::path& dir, std::ostream& out) {
  const auto sol = solve_periodic(sc);
  Results r;
  r.add("period", sol.horizon);
  r.add("predicted_average_cost", sol.predicted_cost);
  r.add("realized_average_cost", sol.realized.total);
  r.add("relative_gap", std::abs(sol.realized.total - sol.predicted_cost) / std::max(1e-300, std::abs(sol.predicted_cost)));
  r.add("K_average", sol.K);
  r.add("truncation_tail", sol.truncation_tail);
  r.add("motion_identity_gap", sol.realized.motion_identity_gap);
  r.add("interval_cells", std::to_string(sol.partition.cells().size()));
  write_summary(dir, "solve-periodic", c, r);
  write_partition(dir, sol.partition);
  write_cells(dir, sol);
  write_trajectory(dir / "trajectory.csv", sol, "w2_to_demand", [&](double t) { return sc.demand.density_at(t); });
  {
    Csv csv(dir / "frequency.csv", {"cell", "harmonic", "omega", "demand_amplitude", "resource_amplitude", "gain"});
    for (const auto& row : sol.frequency_table) {
      csv.row({static_cast<double>(row.cell), static_cast<double>(row.harmonic), row.omega, row.demand_amplitude,
               row.resource_amplitude, row.gain});
    }
  }
  {
    std::vector<std::string> header{"t"};
    for (std::size_t i = 0; i < sol.cells.size(); ++i) header.push_back("atom_" + std::to_string(i));
    Csv csv(dir / "warmup.csv", header);
    for (std::size_t k = 0; k < sol.warmup_times.size(); ++k) {
      std::vector<double> row{sol.warmup_times[k]};
      row.insert(row.end(), sol.warmup_positions[k].begin(), sol.warmup_positions[k].end());
      csv.row(row);
    }
  }
  out << "predicted_average_cost = " << fmt(sol.predicted_cost) << "\nrealized_average_cost = " << fmt(sol.realized.total)
      << '\n';
}

void cmd_wasserstein(const Config& c, const std::filesystem::path& dir, std::ostream& out) {
  const int nx = grid_int(c, "grid.nx", 200, 1);
  const Density a = c.has_prefix("a.") ? parse_density_with(c, "a.", nx, "") : parse_density_with(c, "resource.", nx, "");
  // Without b.*, the demand at t = 0.
  const Density b = c.has_prefix("b.") ? parse_density_with(c, "b.", nx, "") : parse_demand(c, nx).density_at(0.0);
  const double w = wasserstein2(a, b);
  const double lq = l2_quantile_distance(quantile_of(a), quantile_of(b));
  const AssignmentPlan plan = optimal_plan(a, b);
  Results r;
  r.add("w2", w);
  r.add("w2_squared", w * w);
  r.add("l2_quantile_distance", lq);
  r.add("plan_cost", plan_cost(plan));
  write_summary(dir, "wasserstein", c, r);
  Csv csv(dir / "plan.csv", {"kind", "x0", "x1", "y0", "y1", "mass"});
  for (const auto& p : plan.atoms) csv.row({0.0, p.x, p.x, p.y, p.y, p.mass});
  for (const auto& p : plan.intervals) csv.row({1.0, p.x0, p.x1, p.y0, p.y1, p.mass()});
  out << "w2 = " << fmt(w) << '\n';
}

void cmd_simulate(const Config& c, const Scenario& sc, const std::filesystem::path& dir, std::ostream& out) {
  const std::string kind = c.text("velocity.kind", "optimal");
  DensitySeries series;
  Results r;
  r.add("velocity.kind", kind);
  if (kind == "optimal") {
    const auto sol = solve_general(sc);
    series = *sol.simulation;
    add_cost(r, sol);
  } else {
    VelocityField v = VelocityField::zero();
    if (kind == "constant") {
      v = VelocityField::constant(c.number("velocity.value"));
    } else if (kind == "affine") {
      const auto t = c.tuples("velocity.coefficients", 2);
      if (t.size() != 1) throw ConfigError("velocity.coefficients", "expected one 'a:b' pair (v = a + b x)");
      const double a = t[0][0];
      const double b = t[0][1];
      v = VelocityField::from_rule([a, b](double x, double) { return a + b * x; });
    } else {
      throw ConfigError("velocity.kind", "expected optimal, constant or affine");
    }
    series = advect_density(sc.resource, v, sc.horizon, sc.grid.nt, sc.grid.advect_refine);
  }
  double mass_error = 0.0;
  std::vector<std::string> header{"t", "mass", "mean"};
  add_quantile_header(header);
  Csv csv(dir / "simulated.csv", header);
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    const Density& d = series.densities[k];
    const double m = d.atom_mass() + d.continuous_mass();
    mass_error = std::max(mass_error, std::abs(m - 1.0));
    std::vector<double> row{series.times[k], m, d.mean()};
    add_quantile_values(row, series.quantiles[k]);
    csv.row(row);
  }
  r.add("steps", std::to_string(series.times.size() - 1));
  r.add("max_mass_error", mass_error);
  write_summary(dir, "simulate", c, r);
  out << "max_mass_error = " << fmt(mass_error) << '\n';
}

bool only_atoms(const Density& d) { return d.continuous().empty() || d.continuous_mass() == 0.0; }

void cmd_verify(const Config& c, const Scenario& sc, const std::filesystem::path& dir, std::ostream& out) {
  struct Check {
    std::string name;
    double library;
    double oracle;
    double tolerance;
    std::string status;
  };
  std::vector<Check> checks;
  const Density d0 = sc.demand.density_at(0.0);
  const bool small = only_atoms(sc.resource) && sc.resource.atoms().size() <= oracle::kMaxAtoms;

  if (small && only_atoms(d0) && d0.atoms().size() <= oracle::kMaxAtoms) {
    const double lib = squared_wasserstein2(sc.resource, d0);
    const double ora = oracle::lp_wasserstein(sc.resource.atoms(), d0.atoms());
    checks.push_back({"w2_squared_vs_lp", lib, ora, 1e-9, std::abs(lib - ora) <= 1e-9 ? "PASS" : "FAIL"});
  } else {
    checks.push_back({"w2_squared_vs_lp", 0.0, 0.0, 1e-9, "SKIP"});
  }

  if (small) {
    Scenario coarse = sc;
    coarse.grid.nt = grid_int(c, "verify.nt", std::min(sc.grid.nt, 200), 2);
    const auto sol = solve_general(coarse, {.simulate = false});
    oracle::DiscreteInstance inst;
    inst.resource = sc.resource.atoms();
    inst.alpha = sc.alpha;
    inst.horizon = sc.horizon;
    inst.nt = coarse.grid.nt;
    inst.restarts = grid_int(c, "verify.restarts", 10, 1);
    inst.iterations = grid_int(c, "verify.iterations", 5000, 1);
    inst.seed = static_cast<std::uint64_t>(c.integer("seed", 0));
    for (double t : sol.times) inst.demand.push_back(sc.demand.density_at(t));
    const auto direct = oracle::direct_optimal_control(inst);
    // The analytic optimum may not be undercut by more than 0.5%.
    const bool ok = direct.cost >= sol.predicted_cost * (1.0 - 5e-3);
    checks.push_back({"analytic_vs_direct", sol.predicted_cost, direct.cost, 5e-3, ok ? "PASS" : "FAIL"});
    checks.push_back({"cost_above_K", sol.predicted_cost, sol.K, 0.0, sol.predicted_cost >= sol.K ? "PASS" : "FAIL"});
  } else {
    checks.push_back({"analytic_vs_direct", 0.0, 0.0, 5e-3, "SKIP"});
  }

  Results r;
  bool failed = false;
  {
    std::ofstream f(dir / "verify.csv");
    f << "# schema=1\ncheck,library,oracle,tolerance,status\n";
    for (const auto& ch : checks) {
      f << ch.name << ',' << fmt(ch.library) << ',' << fmt(ch.oracle) << ',' << fmt(ch.tolerance) << ',' << ch.status
        << '\n';
      r.add(ch.name, ch.status);
      out << ch.status << ' ' << ch.name << " library=" << fmt(ch.library) << " oracle=" << fmt(ch.oracle) << '\n';
      failed = failed || ch.status == "FAIL";
    }
  }
  write_summary(dir, "verify", c, r);
  if (failed) throw NumericalError("oracle", "library and oracle disagree beyond tolerance (see verify.csv)");
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(n);
    if (eq == std::string::npos) throw ConfigError(where, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || key.find_first_of(" \t") != std::string::npos) throw ConfigError(where, "bad key '" + key + "'");
    if (c.has(key)) throw ConfigError(key, "defined twice (" + where + ")");
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = trim(value); }

void Config::override_value(const std::string& key, const std::string& value) {
  set(key, value);
  if (!overridden(key)) overrides_.push_back(key);
}

bool Config::overridden(const std::string& key) const {
  return std::find(overrides_.begin(), overrides_.end(), key) != overrides_.end();
}

bool Config::has_prefix(const std::string& prefix) const {
  const auto it = values_.lower_bound(prefix);
  return it != values_.end() && it->first.compare(0, prefix.size(), prefix) == 0;
}

const std::string& Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "missing");
  return it->second;
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

double Config::number(const std::string& key) const { return to_number(key, raw(key)); }

double Config::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

long long Config::integer(const std::string& key, long long fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = raw(key);
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) throw ConfigError(key, "expected an integer, got '" + s + "'");
  return v;
}

std::vector<double> Config::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& part : split(raw(key), ',')) out.push_back(to_number(key, part));
  return out;
}

std::vector<std::vector<double>> Config::tuples(const std::string& key, std::size_t arity) const {
  std::vector<std::vector<double>> out;
  for (const auto& part : split(raw(key), ',')) {
    const auto fields = split(part, ':');
    if (fields.size() != arity) {
      throw ConfigError(key, "expected " + std::to_string(arity) + " ':'-separated numbers in '" + part + "'");
    }
    std::vector<double> t;
    for (const auto& f : fields) t.push_back(to_number(key, f));
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario construction

Density parse_density(const Config& c, const std::string& prefix, int nx) { return parse_density_with(c, prefix, nx, ""); }

DemandSignal parse_demand(const Config& c, int nx) {
  const std::string kind = c.text("demand.kind", "static");
  if (kind == "static") return DemandSignal::constant(parse_density(c, "demand.", nx));
  if (kind == "periodic") {
    const double period = c.number("demand.period");
    if (!(period > 0.0)) throw ConfigError("demand.period", "must be positive");
    const DensityParts parts = read_parts(c, "demand.", "");
    // Component weights w_i (1 + a_i sin(2 pi k_i t / P)).
    std::vector<std::pair<double, double>> modulation;
    if (c.has("demand.modulation")) {
      for (const auto& t : c.tuples("demand.modulation", 2)) {
        if (std::abs(t[0]) > 1.0) throw ConfigError("demand.modulation", "amplitudes must lie in [-1, 1]");
        modulation.emplace_back(t[0], t[1]);
      }
      if (modulation.size() != parts.gaussians.size()) {
        throw ConfigError("demand.modulation", "need one 'amplitude:harmonic' pair per gaussian component");
      }
    }
    // Atom positions x_j + amp_j sin(2 pi k_j t / P).
    std::vector<std::pair<double, double>> motion;
    if (c.has("demand.atom_motion")) {
      for (const auto& t : c.tuples("demand.atom_motion", 2)) motion.emplace_back(t[0], t[1]);
      if (motion.size() == 1) motion.assign(parts.atoms.size(), motion.front());
      if (motion.size() != parts.atoms.size()) {
        throw ConfigError("demand.atom_motion", "need one 'amplitude:harmonic' pair, or one per atom");
      }
      for (std::size_t j = 0; j < motion.size(); ++j) {
        const double x = parts.atoms[j].position;
        if (!parts.domain.contains(x - std::abs(motion[j].first)) || !parts.domain.contains(x + std::abs(motion[j].first))) {
          throw ConfigError("demand.atom_motion", "atom " + std::to_string(j) + " would leave the domain");
        }
      }
    }
    // Validate once at t = 0 so config errors surface before solving.
    auto rule = [parts, modulation, motion, nx, period](double t) {
      const double phase = 2.0 * std::numbers::pi * t / period;
      std::vector<double> weights;
      for (const auto& [a, k] : modulation) weights.push_back(1.0 + a * std::sin(k * phase));
      std::vector<double> shifts;
      for (const auto& [a, k] : motion) shifts.push_back(a * std::sin(k * phase));
      return assemble_density(parts, "demand.", nx, weights, shifts);
    };
    (void)rule(0.0);
    return DemandSignal::periodic(period, rule);
  }
  if (kind == "sampled") {
    const auto times = c.numbers("demand.times");
    std::vector<Density> slices;
    for (std::size_t k = 0; k < times.size(); ++k) {
      slices.push_back(parse_density_with(c, "demand.slice" + std::to_string(k) + ".", nx, "demand.domain"));
    }
    try {
      return DemandSignal::sampled(times, std::move(slices));
    } catch (const InvalidInput& e) {
      throw ConfigError("demand.times", e.what());
    }
  }
  throw ConfigError("demand.kind", "expected static, periodic or sampled, got '" + kind + "'");
}

Scenario build_scenario(const Config& c) {
  Scenario sc{Density::uniform({0.0, 1.0}), DemandSignal::constant(Density::uniform({0.0, 1.0})), 1.0, 1.0, {}, 0};
  sc.grid.nt = grid_int(c, "grid.nt", 1000, 2);
  sc.grid.nx = grid_int(c, "grid.nx", 200, 1);
  sc.grid.harmonics = grid_int(c, "grid.harmonics", 64, 1);
  sc.grid.advect_refine = grid_int(c, "grid.advect_refine", 8, 1);
  sc.grid.z_resolution = c.number("grid.z_resolution", 1.0 / 128);
  if (!(sc.grid.z_resolution > 0.0 && sc.grid.z_resolution <= 1.0)) throw ConfigError("grid.z_resolution", "must lie in (0, 1]");
  sc.alpha = c.number("alpha");
  if (!(sc.alpha > 0.0)) throw ConfigError("alpha", "must be positive");
  const long long seed = c.integer("seed", 0);
  if (seed < 0) throw ConfigError("seed", "must be nonnegative");
  sc.seed = static_cast<std::uint64_t>(seed);
  sc.resource = parse_density(c, "resource.", sc.grid.nx);
  sc.demand = parse_demand(c, sc.grid.nx);
  const std::string horizon = c.text("horizon", sc.demand.kind() == DemandSignal::Kind::periodic ? "periodic" : "");
  if (horizon == "periodic") {
    if (sc.demand.kind() != DemandSignal::Kind::periodic) throw ConfigError("horizon", "'periodic' needs demand.kind = periodic");
    sc.horizon = sc.demand.period();
  } else {
    if (horizon.empty()) throw ConfigError("horizon", "missing");
    sc.horizon = to_number("horizon", horizon);
    if (!(sc.horizon > 0.0)) throw ConfigError("horizon", "must be positive");
  }
  if (!sc.demand.covers(0.0, sc.horizon)) throw ConfigError("demand.times", "sampled demand does not cover [0, horizon]");
  return sc;
}

void apply_overrides(Config& c, const Overrides& o) {
  if (o.alpha) c.override_value("alpha", *o.alpha);
  if (o.horizon) c.override_value("horizon", *o.horizon);
  if (o.nt) c.override_value("grid.nt", *o.nt);
  if (o.nx) c.override_value("grid.nx", *o.nx);
  if (o.harmonics) c.override_value("grid.harmonics", *o.harmonics);
  if (o.seed) c.override_value("seed", *o.seed);
  if (o.out) c.override_value("output_dir", *o.out);
}

int run(const std::string& subcommand, Config config, std::ostream& out, std::ostream& err) {
  try {
    fill_defaults(config);
    const std::filesystem::path dir = config.raw("output_dir");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("output_dir", "cannot create " + dir.string() + ": " + ec.message());

    if (subcommand == "wasserstein") {
      cmd_wasserstein(config, dir, out);
      return 0;
    }
    const Scenario sc = build_scenario(config);
    if (subcommand == "solve-static") {
      cmd_solve_static(config, sc, dir, out);
    } else if (subcommand == "solve-periodic") {
      cmd_solve_periodic(config, sc, dir, out);
    } else if (subcommand == "solve-general") {
      cmd_solve_general(config, sc, dir, out);
    } else if (subcommand == "simulate") {
      cmd_simulate(config, sc, dir, out);
    } else if (subcommand == "verify") {
      cmd_verify(config, sc, dir, out);
    } else {
      err << "error: unknown subcommand '" << subcommand << "'\n";
      return 2;
    }
    return 0;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Optimal assignment and motion of a resource swarm tracking a demand distribution"};
  app.require_subcommand(1);
  std::string config_path;
  Overrides o;
  const char* names[] = {"solve-static", "solve-periodic", "solve-general", "wasserstein", "simulate", "verify"};
  for (const char* name : names) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "Scenario config file")->required();
    sub->add_option("--alpha", o.alpha, "Motion cost weight");
    sub->add_option("--horizon", o.horizon, "Horizon T, or 'periodic'");
    sub->add_option("--nt", o.nt, "Time steps");
    sub->add_option("--nx", o.nx, "Spatial cells for mixtures");
    sub->add_option("--harmonics", o.harmonics, "Fourier harmonics kept");
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--out", o.out, "Output directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    Config config = Config::load(config_path);
    apply_overrides(config, o);
    return run(sub, std::move(config), std::cout, std::cerr);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace swarmot::cli
