#pragma once

// Scenario configs and the subcommand driver behind the `swarmot` tool.
//
// Config grammar (one entry per line, `#` starts a comment):
//
//   key = value
//
// Keys are dotted names; lists are comma separated and tuples use `:`.
// See README.md for the full key list.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swarmot/error.hpp"
#include "swarmot/regimes.hpp"

namespace swarmot::cli {

/// A config problem tied to one key.
class ConfigError : public InvalidInput {
 public:
  ConfigError(const std::string& key, const std::string& what) : InvalidInput("config: " + key + ": " + what) {}
};

class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<config>");
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  /// Records the key as a command-line override as well.
  void override_value(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  bool has_prefix(const std::string& prefix) const;
  const std::string& raw(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  /// Comma-separated tuples of exactly `arity` colon-separated numbers.
  std::vector<std::vector<double>> tuples(const std::string& key, std::size_t arity) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  bool overridden(const std::string& key) const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> overrides_;
};

/// Density from the keys under `prefix` (e.g. "resource."): domain, atoms,
/// grid.edges / grid.values, gaussians, uniform.
Density parse_density(const Config& c, const std::string& prefix, int nx);
DemandSignal parse_demand(const Config& c, int nx);
Scenario build_scenario(const Config& c);

struct Overrides {
  std::optional<std::string> alpha;
  std::optional<std::string> horizon;
  std::optional<std::string> nt;
  std::optional<std::string> nx;
  std::optional<std::string> harmonics;
  std::optional<std::string> seed;
  std::optional<std::string> out;
};

void apply_overrides(Config& c, const Overrides& o);

/// Runs one subcommand. Returns 0 on success, 2 on a config error and 3 on a
/// numerical failure; messages go to `err`.
int run(const std::string& subcommand, Config config, std::ostream& out, std::ostream& err);

/// argv front end (CLI11).
int main_entry(int argc, char** argv);

}  // namespace swarmot::cli
