#ifndef SPVAR_CLI_HPP
#define SPVAR_CLI_HPP

#include "spvar/bootstrap.hpp"
#include "spvar/estimation.hpp"
#include "spvar/identification.hpp"
#include "spvar/io.hpp"
#include "spvar/panel.hpp"
#include "spvar/restrictions.hpp"
#include "spvar/simulation.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spvar::cli {

inline constexpr const char* kVersion = "0.1.0";

struct NamedClip {
  std::string variable;
  double lower = 0.0;
};

struct SimulationSettings {
  std::string params;  ///< params.json describing the data-generating process
  std::string garch = "G0";
  int cycles = 50;
  std::vector<NamedClip> clip;
  ShockMap shock_map = ShockMap::impact;
};

struct CoverageSettings {
  std::string dgp;  ///< params.json of the true model
  std::string garch = "G0";
  int mc_reps = 500;
  int cycles = 50;
  std::vector<int> horizons{0};
  double nominal = 0.68;
  std::vector<NamedClip> clip;
  ShockMap shock_map = ShockMap::impact;
  std::string label;
};

/// Fully validated run configuration; see README for the JSON layout.
struct RunConfig {
  std::string base_dir;  ///< relative paths resolve against the config file's directory
  std::string data;
  int seasons = 1;
  std::vector<std::string> variables;
  std::vector<int> orders;
  PresamplePolicy presample = PresamplePolicy::consume;
  int presample_rows = 0;
  std::vector<std::string> diff_log;
  io::Json restrictions = "unrestricted";
  io::Json identification = "cholesky";
  int horizon = 24;
  BootstrapConfig bootstrap;
  SigmaOptions sigma;
  int max_lag = 36;
  int bandwidth = 2;
  std::string output = "out";
  std::optional<SimulationSettings> simulation;
  std::optional<CoverageSettings> coverage;
};

RunConfig parse_config(const io::Json& j, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Canonical JSON of every semantically meaningful field (output location excluded).
io::Json canonical_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

/// Builds the restriction pattern described by the config for a concrete model.
RestrictionPattern pattern_from_json(const io::Json& j, const PvarSpec& spec);
IdentScheme scheme_from_json(const io::Json& j, const PvarSpec& spec);

/// Entry point behind the `spvar` executable. Returns the process exit code.
int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

int exit_code(ErrorCategory category);

}  // namespace spvar::cli

#endif  // SPVAR_CLI_HPP
