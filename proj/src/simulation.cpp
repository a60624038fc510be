#include "spvar/simulation.hpp"

#include "spvar/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace spvar {

void GarchSpec::validate() const {
  if (a1 < 0.0 || b1 < 0.0) fail(ErrorCategory::config, "GARCH coefficients must be nonnegative");
  const bool iid = a1 == 0.0 && b1 == 0.0;
  if (!iid && !(a1 + b1 < 1.0)) fail(ErrorCategory::config, "GARCH requires a1 + b1 < 1");
}

GarchSpec GarchSpec::preset(const std::string& name) {
  if (name == "G0") return {0.0, 0.0};
  if (name == "G1") return {0.05, 0.9};
  if (name == "G2") return {0.3, 0.6};
  if (name == "G3") return {0.5, 0.0};
  fail(ErrorCategory::config, "unknown GARCH preset '" + name + "' (expected G0..G3)");
}

Matrix garch_shocks(const GarchSpec& spec, int T, int m, Rng& rng) {
  spec.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(T, m);
  Vector var = Vector::Ones(m);
  Vector last = Vector::Zero(m);
  for (int t = -kBurnIn + 1; t <= T; ++t) {
    for (int i = 0; i < m; ++i) {
      var(i) = spec.a0() + spec.a1 * last(i) * last(i) + spec.b1 * var(i);
      last(i) = std::sqrt(var(i)) * normal(rng);
    }
    if (t >= 1) out.row(t - 1) = last.transpose();
  }
  return out;
}

namespace {

std::vector<Matrix> innovation_maps(const std::vector<Matrix>& h0, ShockMap map) {
  if (map == ShockMap::impact) return h0;
  std::vector<Matrix> out;
  for (const auto& h : h0) out.push_back(h.inverse());
  return out;
}

void clip(Eigen::Ref<Vector> y, const std::vector<ClipRule>& rules) {
  for (const auto& rule : rules) y(rule.variable - 1) = std::max(y(rule.variable - 1), rule.lower);
}

}  // namespace

TimeSeriesPanel simulate_spvar(const PvarParams& params, const std::vector<Matrix>& h0, const Matrix& shocks,
                               const Matrix& presample, const std::vector<ClipRule>& clip_rules, ShockMap map) {
  const PvarSpec& spec = params.spec;
  const int S = spec.num_seasons;
  const int m = spec.num_vars;
  if (static_cast<int>(h0.size()) != S) fail(ErrorCategory::precondition, "need one impact matrix per season");
  if (shocks.cols() != m) fail(ErrorCategory::precondition, "shock dimension does not match the model");
  if (presample.rows() < spec.presample_rows() || (presample.rows() > 0 && presample.cols() != m))
    fail(ErrorCategory::precondition, "presample does not cover the deepest lag");
  for (const auto& rule : clip_rules)
    if (rule.variable < 1 || rule.variable > m) fail(ErrorCategory::config, "clip rule refers to an unknown variable");
  const auto maps = innovation_maps(h0, map);

  TimeSeriesPanel out;
  out.num_seasons = S;
  out.presample = presample;
  out.data = Matrix::Zero(shocks.rows(), m);
  for (int t = 1; t <= shocks.rows(); ++t) {
    const int s = wrap_season(t, S);
    Vector y = params.intercept(s) + maps[static_cast<size_t>(s - 1)] * shocks.row(t - 1).transpose();
    for (int i = 1; i <= spec.order(s); ++i)
      y.noalias() += params.coeffs[static_cast<size_t>(s - 1)][static_cast<size_t>(i - 1)] * out.row(t - i).transpose();
    clip(y, clip_rules);
    out.data.row(t - 1) = y.transpose();
  }
  return out;
}

TimeSeriesPanel simulate_with_burn_in(const PvarParams& params, const std::vector<Matrix>& h0, const GarchSpec& garch,
                                      int cycles, Rng& rng, const std::vector<ClipRule>& clip_rules, ShockMap map) {
  const PvarSpec& spec = params.spec;
  const int S = spec.num_seasons;
  const int m = spec.num_vars;
  if (cycles < 1) fail(ErrorCategory::config, "number of cycles must be >= 1");
  // Whole cycles of run-in keep the season of the first kept observation at 1.
  const int burn_cycles = (kBurnIn + S - 1) / S;
  const int lead = std::max({spec.presample_rows(), consumed_cycles(spec) * S, 1});
  const Matrix shocks = garch_shocks(garch, (burn_cycles + cycles) * S, m, rng);
  const Matrix zeros = Matrix::Zero(spec.presample_rows(), m);
  const TimeSeriesPanel full = simulate_spvar(params, h0, shocks, zeros, clip_rules, map);

  TimeSeriesPanel out;
  out.num_seasons = S;
  const int first = burn_cycles * S;  // 0-based row of y_1 in `full.data`
  out.presample = full.data.middleRows(first - lead, lead);
  out.data = full.data.bottomRows(cycles * S);
  return out;
}

CoverageTable coverage_experiment(const CoverageConfig& config, int threads) {
  const PvarParams& dgp = config.dgp;
  const PvarSpec& spec = dgp.spec;
  const int S = spec.num_seasons;
  const int m = spec.num_vars;
  if (config.mc_reps < 1) fail(ErrorCategory::config, "Monte Carlo replicates must be >= 1");
  if (config.horizons.empty()) fail(ErrorCategory::config, "at least one horizon is required");
  const int K = *std::max_element(config.horizons.begin(), config.horizons.end());
  for (int k : config.horizons)
    if (k < 0) fail(ErrorCategory::config, "horizons must be nonnegative");
  config.garch.validate();
  config.scheme.validate(m);
  config.bootstrap.validate(config.cycles * S);

  // The estimand is the scheme applied to the population covariances.
  PvarParams population = dgp;
  const auto maps = innovation_maps(config.h0, config.shock_map);
  for (int s = 1; s <= S; ++s) population.cov(s) = maps[static_cast<size_t>(s - 1)] * maps[static_cast<size_t>(s - 1)].transpose();
  const auto truth_h0 = identify_impact(population, config.scheme);
  CoverageTable table;
  table.truth = structural_irf(impulse_responses(dgp, K), truth_h0, config.scheme.impact_normalization);
  table.label = config.label;
  table.block_len = config.bootstrap.effective_block();
  table.cycles = config.cycles;
  table.mc_reps = config.mc_reps;

  const std::uint64_t data_master = mix64(config.bootstrap.seed ^ 0x5350564152ULL);
  const std::uint64_t boot_master = mix64(config.bootstrap.seed ^ 0x424F4F54ULL);
  const auto cells_per_rep = static_cast<size_t>(S * config.horizons.size() * m * m);
  // 1 = covered, 0 = missed; empty = failed replicate
  std::vector<std::vector<char>> hits(static_cast<size_t>(config.mc_reps));

  parallel_for(config.mc_reps, threads, [&](int r) {
    Rng rng(sub_seed(data_master, static_cast<std::uint64_t>(r + 1)));
    try {
      const TimeSeriesPanel panel =
          simulate_with_burn_in(dgp, config.h0, config.garch, config.cycles, rng, config.clip_rules, config.shock_map);
      const FitResult fit = fit_constrained(build_design(panel, spec), config.restrictions, config.fit_options);
      const auto h0 = identify_impact(fit.params, config.scheme);
      const IrfSet point = structural_irf(impulse_responses(fit.params, K), h0, config.scheme.impact_normalization);
      BootstrapConfig boot = config.bootstrap;
      boot.seed = sub_seed(boot_master, static_cast<std::uint64_t>(r + 1));
      const BootstrapDraws draws =
          bootstrap_engine(panel, fit, config.restrictions, config.scheme, K, boot, config.fit_options, 1);
      const IrfBands bands = irf_bands(point, draws.sirf_draws, boot.alpha, boot.ci_method);
      std::vector<char> out;
      out.reserve(cells_per_rep);
      for (int s = 1; s <= S; ++s)
        for (int k : config.horizons)
          for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) {
              const double v = table.truth.at(s, k)(i, j);
              out.push_back(bands.lower.at(s, k)(i, j) <= v && v <= bands.upper.at(s, k)(i, j) ? 1 : 0);
            }
      hits[static_cast<size_t>(r)] = std::move(out);
    } catch (const Error&) {
      // failed replicate; counted per cell below
    }
  });

  size_t idx = 0;
  for (int s = 1; s <= S; ++s)
    for (int k : config.horizons)
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i, ++idx) {
          CoverageCell cell;
          cell.season = s;
          cell.horizon = k;
          cell.shock = j + 1;
          cell.response = i + 1;
          int covered = 0;
          int used = 0;
          for (const auto& h : hits) {
            if (h.empty()) {
              ++cell.failures;
              continue;
            }
            ++used;
            covered += h[idx];
          }
          cell.coverage = used > 0 ? static_cast<double>(covered) / used : 0.0;
          cell.mc_se = used > 0 ? std::sqrt(cell.coverage * (1.0 - cell.coverage) / used) : 0.0;
          cell.flagged = cell.failures > 0.05 * config.mc_reps;
          table.cells.push_back(cell);
        }
  return table;
}

}  // namespace spvar
