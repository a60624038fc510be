#ifndef SPVAR_ESTIMATION_HPP
#define SPVAR_ESTIMATION_HPP

#include "spvar/common.hpp"
#include "spvar/model.hpp"
#include "spvar/panel.hpp"
#include "spvar/restrictions.hpp"

#include <vector>

namespace spvar {

/// Z = B X + E with Z m x SN and X block-diagonal by season.
struct DesignMatrices {
  PvarSpec spec;
  Matrix z;
  Matrix x;
};

DesignMatrices build_design(const TimeSeriesPanel& panel, const PvarSpec& spec);

enum class SigmaDivisor {
  df_corrected,  ///< N - k(s)
  cycles         ///< N
};

struct SigmaOptions {
  SigmaDivisor divisor = SigmaDivisor::df_corrected;
  /// Use divisor N instead of failing when N <= k(s).
  bool fallback_to_cycles = false;
};

struct FitOptions {
  SigmaOptions sigma;
  /// Upper bound on the condition number of R'(XX' ⊗ I)R.
  double max_condition = 1e12;
};

struct FitResult {
  Vector beta;
  Vector gamma;
  PvarParams params;
  Matrix residuals;  ///< T x m, row t-1 holds ε̂_t
  std::vector<int> free_counts;
  int effective_n = 0;
  double stationarity_margin = 0.0;

  bool stationary() const { return stationarity_margin < 1.0 - kStationarityTolerance; }
};

/**
 * k(s): free γ coordinates that touch the season-s block of β, divided by m when
 * that is an integer, otherwise the largest per-equation count.
 */
std::vector<int> free_counts(const RestrictionSet& restr, const PvarSpec& spec);

/// Restricted least squares β̂ = R γ̂ + r via a column-pivoted QR of (X' ⊗ I_m) R.
FitResult fit_constrained(const DesignMatrices& design, const RestrictionSet& restr, const FitOptions& options = {});

/// Σ̂_ε(s) = (N - k(s))^{-1} Σ_n ε̂_{Sn+s} ε̂'_{Sn+s}.
std::vector<Matrix> estimate_sigma(const Matrix& residuals, int num_seasons, const std::vector<int>& free_counts,
                                   const SigmaOptions& options = {});

}  // namespace spvar

#endif  // SPVAR_ESTIMATION_HPP
