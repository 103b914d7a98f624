#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "vfbl/bsde.hpp"
#include "vfbl/identify.hpp"

namespace vfbl {

/// Everything a CLI run needs. Defaults reproduce the default rough configuration.
struct ExperimentConfig {
  IdentityConfig identity = default_identity_config();  // model, grid, payoff, bump, basis, thresholds
  Driver driver;
  int outer_paths = 100000;  // simulate, price, solve-bsde, derivatives
  Estimator estimator = Estimator::Pathwise;
  std::string out_dir = "out";
  int threads = 0;  // 0 = all available cores

  ModelParams& model() { return identity.model; }
  const ModelParams& model() const { return identity.model; }
  std::uint64_t seed() const { return identity.seed; }

  /// Throws ConfigError if any field violates its invariants.
  void validate() const;
};

/// section.key -> raw value.
using ConfigEntries = std::map<std::string, std::string>;

/// Parses the INI-like format: "[section]" headers, "key = value" lines, '#' or ';' comments.
/// Throws ConfigError on malformed lines or duplicate keys.
ConfigEntries parse_config_text(std::istream& in, const std::string& source = "<config>");

/// Reads a config file; a missing file is a ConfigError naming the path.
ConfigEntries read_config_file(const std::string& path);

/// Applies entries on top of cfg. Unknown keys and unparsable values throw ConfigError.
/// Setting grid.steps without identity.t_index moves t_index to the grid midpoint.
void apply_entries(ExperimentConfig& cfg, const ConfigEntries& entries);

/// Splits "section.key=value" into an entry.
std::pair<std::string, std::string> parse_override(const std::string& text);

/// All recognized keys, for help output and tests.
std::vector<std::string> known_keys();

/// Fully resolved config as section.key -> canonical text, suitable for echoing.
ConfigEntries resolved_entries(const ExperimentConfig& cfg);

}  // namespace vfbl
