#ifndef SPVAR_SIMULATION_HPP
#define SPVAR_SIMULATION_HPP

#include "spvar/bootstrap.hpp"
#include "spvar/common.hpp"
#include "spvar/identification.hpp"
#include "spvar/model.hpp"
#include "spvar/panel.hpp"
#include "spvar/restrictions.hpp"
#include "spvar/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spvar {

/// Unit-variance GARCH(1,1): σ²_t = a0 + a1 w²_{t-1} + b1 σ²_{t-1}, a0 = 1 - a1 - b1.
struct GarchSpec {
  double a1 = 0.0;
  double b1 = 0.0;

  double a0() const { return 1.0 - a1 - b1; }
  void validate() const;

  static GarchSpec preset(const std::string& name);  ///< "G0".."G3"
};

inline constexpr int kBurnIn = 500;

/// T x m independent GARCH(1,1) components after discarding kBurnIn steps.
Matrix garch_shocks(const GarchSpec& spec, int T, int m, Rng& rng);

struct ClipRule {
  int variable = 1;  ///< 1-based
  double lower = 0.0;
};

enum class ShockMap {
  impact,          ///< ε = H0(s) w
  inverse_impact   ///< ε = H0(s)^{-1} w
};

/**
 * Recursive SPVAR path driven by structural shocks. Clipped values feed later lags.
 * The presample is copied into the returned panel unchanged.
 */
TimeSeriesPanel simulate_spvar(const PvarParams& params, const std::vector<Matrix>& h0, const Matrix& shocks,
                               const Matrix& presample, const std::vector<ClipRule>& clip_rules = {},
                               ShockMap map = ShockMap::impact);

/// Simulates N cycles after a kBurnIn-step run-in started from zeros; the run-in supplies the presample
/// (whole cycles, enough for either presample policy).
TimeSeriesPanel simulate_with_burn_in(const PvarParams& params, const std::vector<Matrix>& h0, const GarchSpec& garch,
                                      int cycles, Rng& rng, const std::vector<ClipRule>& clip_rules = {},
                                      ShockMap map = ShockMap::impact);

struct CoverageConfig {
  PvarParams dgp;
  std::vector<Matrix> h0;
  GarchSpec garch;
  int mc_reps = 500;
  int cycles = 50;
  RestrictionSet restrictions;
  IdentScheme scheme;
  BootstrapConfig bootstrap;
  std::vector<int> horizons{0};
  double nominal = 0.68;
  std::vector<ClipRule> clip_rules;
  ShockMap shock_map = ShockMap::impact;
  FitOptions fit_options;
  std::string label = "custom";
};

struct CoverageCell {
  int season = 1;
  int shock = 1;     ///< 1-based
  int response = 1;  ///< 1-based
  int horizon = 0;
  double coverage = 0.0;
  double mc_se = 0.0;
  int failures = 0;
  bool flagged = false;  ///< failures above 5% of replicates
};

struct CoverageTable {
  std::string label;
  int block_len = 1;
  int cycles = 0;
  int mc_reps = 0;
  std::vector<CoverageCell> cells;
  /// Identified truth Θ^SIR_k(s) the intervals are scored against.
  IrfSet truth;
};

/// Monte Carlo coverage of bootstrap bands for the structural responses. Deterministic in bootstrap.seed.
CoverageTable coverage_experiment(const CoverageConfig& config, int threads = 1);

}  // namespace spvar

#endif  // SPVAR_SIMULATION_HPP
