#ifndef SPVAR_BOOTSTRAP_HPP
#define SPVAR_BOOTSTRAP_HPP

#include "spvar/common.hpp"
#include "spvar/estimation.hpp"
#include "spvar/identification.hpp"
#include "spvar/model.hpp"
#include "spvar/panel.hpp"
#include "spvar/rng.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace spvar {

enum class BootstrapMethod {
  seasonal_block,    ///< generalized seasonal block bootstrap of raw residuals
  mbb_standardized,  ///< moving blocks of season-standardized residuals
  seasonal_iid,      ///< seasonal_block with b = 1
  iid_standardized   ///< mbb_standardized with b = 1
};

enum class CiMethod { median_adjusted, percentile, hall_percentile };

struct BootstrapConfig {
  BootstrapMethod method = BootstrapMethod::seasonal_block;
  int block_len = 1;
  int replicates = 499;
  std::uint64_t seed = 1;
  CiMethod ci_method = CiMethod::median_adjusted;
  double alpha = 0.32;

  /// Block length actually used: the iid variants force b = 1.
  int effective_block() const;
  bool seasonal() const {
    return method == BootstrapMethod::seasonal_block || method == BootstrapMethod::seasonal_iid;
  }
  void validate(int sample_length) const;
};

/// b^3 / T, which should be small for block bootstrap consistency.
inline double block_regime_ratio(int block_len, int sample_length) {
  const double b = block_len;
  return b * b * b / sample_length;
}

/// Admissible same-season block starts for the block beginning at position t (all 1-based).
std::vector<int> gsbb_candidates(int T, int S, int b, int t);

/// One start k_t for each t = 1, b+1, ..., (l-1)b+1 with l = ceil(T/b).
std::vector<int> gsbb_start_indices(int T, int S, int b, Rng& rng);

/// Source index (1-based) feeding each output position 1..T under the seasonal block scheme.
std::vector<int> seasonal_source_indices(int T, int S, int b, Rng& rng);

/// Source index feeding each output position under moving blocks with uniform starts on 1..T-b+1.
std::vector<int> mbb_source_indices(int T, int b, Rng& rng);

Matrix resample_residuals_seasonal(const Matrix& residuals, int S, int b, Rng& rng);

/// Standardize by Σ̂(s)^{-1/2} at the source season, block-resample, rescale by Σ̂(s)^{1/2} at the destination.
Matrix resample_residuals_mbb(const Matrix& residuals, const std::vector<Matrix>& sigma, int b, Rng& rng);

/// Symmetric square root and inverse square root of an SPD matrix.
std::pair<Matrix, Matrix> symmetric_sqrt(const Matrix& spd);

/// y*_t = ν(s) + Σ_i A_i(s) y*_{t-i} + ε*_t, started from the given presample.
TimeSeriesPanel regenerate_path(const PvarParams& params, const Matrix& presample, const Matrix& pseudo_residuals);

struct BootstrapDraws {
  Matrix beta_draws;   ///< one row per successful replicate
  Matrix sigma_draws;  ///< vech(Σ̂*(s)) for s = 1..S, concatenated
  std::vector<IrfSet> sirf_draws;
  std::vector<int> replicate_ids;        ///< 1-based replicate index of each row
  std::vector<std::uint64_t> sub_seeds;  ///< seed of every replicate 1..L
  int failure_count = 0;
};

BootstrapDraws bootstrap_engine(const TimeSeriesPanel& panel, const FitResult& base, const RestrictionSet& restr,
                                const IdentScheme& scheme, int horizon, const BootstrapConfig& config,
                                const FitOptions& fit_options = {}, int threads = 1);

/// Order statistic x_(ceil(q L)) clamped to [1, L] of an ascending sample.
double empirical_quantile(std::span<const double> sorted, double q);

std::pair<double, double> ci_bands(double point, std::span<const double> draws, double alpha, CiMethod method);

struct IrfBands {
  IrfSet lower;
  IrfSet upper;
};

/// Entrywise bands over (season, horizon, response, shock).
IrfBands irf_bands(const IrfSet& point, const std::vector<IrfSet>& draws, double alpha, CiMethod method);

}  // namespace spvar

#endif  // SPVAR_BOOTSTRAP_HPP
