#ifndef SPVAR_RESTRICTIONS_HPP
#define SPVAR_RESTRICTIONS_HPP

#include "spvar/common.hpp"
#include "spvar/model.hpp"

#include <string>
#include <vector>

namespace spvar {

/**
 * Coordinates of β = (β(1)', ..., β(S)')' with β(s) = vec(ν(s), A_1(s), ..., A_p(s)(s))
 * in column-major order. Every restriction matrix R and vector r is expressed here.
 */
class BetaLayout {
 public:
  explicit BetaLayout(const PvarSpec& spec);

  int size() const { return total_; }
  /// Number of regressor rows Σ_s (m p(s) + 1) of the design matrix X.
  int regressor_rows() const { return regressor_rows_; }
  int season_offset(int season) const { return offsets_[static_cast<size_t>(season - 1)]; }
  int season_size(int season) const;
  /// First regressor row of season s inside X.
  int regressor_offset(int season) const { return offsets_[static_cast<size_t>(season - 1)] / spec_.num_vars; }

  /// Coordinate of ν(s)[row]; rows are 0-based.
  int intercept_index(int season, int row) const;
  /// Coordinate of A_lag(s)[row, col]; rows and columns are 0-based.
  int coeff_index(int season, int lag, int row, int col) const;
  /// Season owning coordinate i.
  int season_of(int index) const;

  const PvarSpec& spec() const { return spec_; }

 private:
  PvarSpec spec_;
  std::vector<int> offsets_;
  int total_ = 0;
  int regressor_rows_ = 0;
};

Vector vectorize(const PvarParams& params);
/// Inverse of vectorize for ν and A; covariances are left at identity.
PvarParams unvectorize(const Vector& beta, const PvarSpec& spec);

enum class EntryCode { seasonal, constant, zero, fixed };

struct EntryRule {
  EntryCode code = EntryCode::seasonal;
  double value = 0.0;

  static EntryRule seasonal() { return {EntryCode::seasonal, 0.0}; }
  static EntryRule constant() { return {EntryCode::constant, 0.0}; }
  static EntryRule zero() { return {EntryCode::zero, 0.0}; }
  static EntryRule fixed(double v) { return {EntryCode::fixed, v}; }

  bool operator==(const EntryRule&) const = default;
};

/// One rule per β coordinate.
class RestrictionPattern {
 public:
  RestrictionPattern(const PvarSpec& spec, EntryRule fill);

  const BetaLayout& layout() const { return layout_; }
  const std::vector<EntryRule>& rules() const { return rules_; }

  EntryRule& intercept(int season, int row) { return rules_[static_cast<size_t>(layout_.intercept_index(season, row))]; }
  EntryRule& coeff(int season, int lag, int row, int col) {
    return rules_[static_cast<size_t>(layout_.coeff_index(season, lag, row, col))];
  }
  /// Applies a rule to ν(s)[row] in every season.
  void set_intercept_all(int row, EntryRule rule);
  /// Applies a rule to A_lag(s)[row, col] in every season with p(s) >= lag.
  void set_coeff_all(int lag, int row, int col, EntryRule rule);

  std::string description;

 private:
  BetaLayout layout_;
  std::vector<EntryRule> rules_;
};

/// β = R γ + r.
struct RestrictionSet {
  Matrix r_matrix;
  Vector r_vector;
  std::string provenance;

  int free_params() const { return static_cast<int>(r_matrix.cols()); }
  int dim() const { return static_cast<int>(r_matrix.rows()); }
};

/**
 * Compiles a pattern. Seasonal entries get their own γ coordinate; constant entries
 * sharing (term, lag, row, col) share one coordinate across seasons; zero and fixed
 * entries only populate r. γ coordinates are numbered in order of first appearance.
 */
RestrictionSet build_restrictions(const RestrictionPattern& pattern);

/// Checks rank(R) = M numerically.
void check_full_column_rank(const RestrictionSet& restr);

RestrictionPattern unrestricted_pattern(const PvarSpec& spec);
/// All parameters shared across seasons: a plain VAR(p) estimated on the periodic sample.
RestrictionPattern var_collapse_pattern(const PvarSpec& spec);

enum class PeersmanVariant {
  as_displayed,     ///< first column of A_1..A_4 seasonal in all three equations
  ffr_nonseasonal   ///< additionally shares the FFR equation's lag 1..4 coefficients
};

/**
 * Restricted PVAR(9) pattern for (IP, INF, FFR) monthly data: seasonal IP and INF
 * intercepts, constant FFR intercept, first columns of A_1..A_4 seasonal, all other
 * coefficients shared across seasons. Requires m = 3, S = 12, p(s) = 9.
 */
RestrictionPattern peersman_pattern(const PvarSpec& spec, PeersmanVariant variant = PeersmanVariant::as_displayed);

}  // namespace spvar

#endif  // SPVAR_RESTRICTIONS_HPP
