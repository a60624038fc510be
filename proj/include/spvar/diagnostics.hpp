#ifndef SPVAR_DIAGNOSTICS_HPP
#define SPVAR_DIAGNOSTICS_HPP

#include "spvar/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace spvar {

struct SeasonalMeans {
  std::vector<Vector> means;  ///< μ̂(s), s = 1..S
};

/// Subtracts the per-season sample mean from every observation.
Matrix seasonal_demean(const Matrix& data, int num_seasons, SeasonalMeans* means = nullptr);

/// ρ̂(0..max_lag) with the divisor-T autocovariance.
std::vector<double> sample_acf(std::span<const double> series, int max_lag);

/// Per-season correlations: row s-1 holds lags 0..max_lag for season s.
Matrix periodic_acf(std::span<const double> series, int num_seasons, int max_lag);

struct SpectralEstimate {
  std::vector<double> freqs;   ///< λ_j = 2πj/T, j = 0..floor(T/2)
  std::vector<double> values;
  int bandwidth = 0;
};

/// Periodogram (2πT)^{-1}|Σ_t (x_t - x̄) e^{-iλ_j t}|² at all T Fourier frequencies.
std::vector<double> periodogram(std::span<const double> series);

/// Daniell moving average of half-width `bandwidth`, circular, over the full Fourier circle.
std::vector<double> smoothed_periodogram(std::span<const double> series, int bandwidth);

SpectralEstimate spectral_density(std::span<const double> series, int bandwidth);

struct WhitenessRow {
  int component = 1;  ///< 1-based
  bool squared = false;
  int lag = 1;
  double acf = 0.0;
  bool flagged = false;  ///< |acf| > 2/sqrt(T)
};

/// ACFs of each column and of its squares at lags 1..max_lag.
std::vector<WhitenessRow> whiteness_summary(const Matrix& series, int max_lag);

}  // namespace spvar

#endif  // SPVAR_DIAGNOSTICS_HPP
