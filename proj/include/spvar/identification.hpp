#ifndef SPVAR_IDENTIFICATION_HPP
#define SPVAR_IDENTIFICATION_HPP

#include "spvar/common.hpp"
#include "spvar/estimation.hpp"
#include "spvar/model.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace spvar {

/// (row, col), both 1-based.
using ZeroEntry = std::pair<int, int>;

struct ImpactNormalization {
  int variable = 1;  ///< 1-based response variable
  int shock = 1;     ///< 1-based structural shock
  double size = 1.0;
};

enum class IdentKind { cholesky, short_long };

/**
 * Zero restrictions on the impact matrix H0(s) (short run) and on the long-run
 * structural matrix D(s) = C(s) H0(s). Exactly m(m-1)/2 restrictions are required
 * for short_long. Columns are always sign-normalized to a nonnegative diagonal.
 */
struct IdentScheme {
  IdentKind kind = IdentKind::cholesky;
  std::vector<ZeroEntry> short_zeros;
  std::vector<ZeroEntry> long_zeros;
  std::optional<ImpactNormalization> impact_normalization;

  static IdentScheme cholesky() { return {}; }
  static IdentScheme short_long(std::vector<ZeroEntry> short_zeros, std::vector<ZeroEntry> long_zeros) {
    return {IdentKind::short_long, std::move(short_zeros), std::move(long_zeros), std::nullopt};
  }

  void validate(int num_vars) const;
};

struct StructuralFit {
  std::vector<Matrix> h0;
  Matrix shocks;  ///< T x m, ŵ_t = H0(s)^{-1} ε̂_t
  IdentScheme scheme;
  std::vector<Matrix> longrun;  ///< D(s) = C(s) H0(s), filled for short_long
};

std::vector<Matrix> identify_cholesky(const std::vector<Matrix>& sigma);

/// Orthogonal Q with chol(Σ) Q satisfying the zeros; exposed for testing the solver directly.
struct RotationSolution {
  Matrix h0;
  double residual = 0.0;  ///< max |violated entry| after solving
  bool constructive = false;
};

/**
 * Solves one season: H0 = chol(sigma) Q with the short zeros on H0 and long zeros on
 * longrun * H0. Uses the recursive construction when the pattern is a staircase and
 * a multi-start Levenberg-Marquardt search over Givens angles otherwise.
 */
RotationSolution solve_rotation(const Matrix& sigma, const Matrix& longrun, const IdentScheme& scheme);

/// Per-season H0(s) under either scheme. Long-run matrices come from longrun_cumulative.
std::vector<Matrix> identify_short_long(const PvarParams& params, const IdentScheme& scheme);

std::vector<Matrix> identify_impact(const PvarParams& params, const IdentScheme& scheme);

/// Identifies a fitted model and recovers the structural shocks.
StructuralFit identify(const FitResult& fit, const IdentScheme& scheme);

/// Θ^SIR_k(s) = Φ^IR_k(s) H0(s), with the optional per-season impact normalization.
IrfSet structural_irf(const IrfSet& reduced, const std::vector<Matrix>& h0,
                      const std::optional<ImpactNormalization>& normalization = std::nullopt);

/// Ψ_h^SIR = Π_h^IR blockdiag(H0(1..S)); input must already be structural.
Matrix stack_structural_irf(const IrfSet& structural, int h);

}  // namespace spvar

#endif  // SPVAR_IDENTIFICATION_HPP
