#include "spvar/restrictions.hpp"

#include <map>
#include <tuple>

namespace spvar {

BetaLayout::BetaLayout(const PvarSpec& spec) : spec_(spec) {
  spec.validate();
  const int m = spec.num_vars;
  for (int s = 1; s <= spec.num_seasons; ++s) {
    offsets_.push_back(total_);
    total_ += m * spec.regressors(s);
    regressor_rows_ += spec.regressors(s);
  }
}

int BetaLayout::season_size(int season) const { return spec_.num_vars * spec_.regressors(season); }

int BetaLayout::intercept_index(int season, int row) const {
  if (season < 1 || season > spec_.num_seasons || row < 0 || row >= spec_.num_vars)
    fail(ErrorCategory::config, "intercept entry out of range");
  return season_offset(season) + row;
}

int BetaLayout::coeff_index(int season, int lag, int row, int col) const {
  const int m = spec_.num_vars;
  if (season < 1 || season > spec_.num_seasons || lag < 1 || lag > spec_.order(season) || row < 0 || row >= m ||
      col < 0 || col >= m)
    fail(ErrorCategory::config, "coefficient entry out of range");
  // Column of B(s) is 1 + (lag-1) m + col; column-major vec.
  return season_offset(season) + (1 + (lag - 1) * m + col) * m + row;
}

int BetaLayout::season_of(int index) const {
  for (int s = spec_.num_seasons; s >= 1; --s)
    if (index >= season_offset(s)) return s;
  return 1;
}

Vector vectorize(const PvarParams& params) {
  const BetaLayout layout(params.spec);
  const int m = params.spec.num_vars;
  Vector beta(layout.size());
  for (int s = 1; s <= params.spec.num_seasons; ++s) {
    const int off = layout.season_offset(s);
    beta.segment(off, m) = params.intercept(s);
    for (int i = 1; i <= params.spec.order(s); ++i)
      beta.segment(off + m + (i - 1) * m * m, m * m) = params.coeff_or_zero(s, i).reshaped();
  }
  return beta;
}

PvarParams unvectorize(const Vector& beta, const PvarSpec& spec) {
  const BetaLayout layout(spec);
  if (beta.size() != layout.size()) fail(ErrorCategory::precondition, "β has the wrong dimension for this spec");
  const int m = spec.num_vars;
  PvarParams params = PvarParams::zeros(spec);
  for (int s = 1; s <= spec.num_seasons; ++s) {
    const int off = layout.season_offset(s);
    params.intercept(s) = beta.segment(off, m);
    for (int i = 1; i <= spec.order(s); ++i) params.coeff(s, i) = beta.segment(off + m + (i - 1) * m * m, m * m).reshaped(m, m);
  }
  return params;
}

RestrictionPattern::RestrictionPattern(const PvarSpec& spec, EntryRule fill)
    : layout_(spec), rules_(static_cast<size_t>(layout_.size()), fill) {}

void RestrictionPattern::set_intercept_all(int row, EntryRule rule) {
  for (int s = 1; s <= layout_.spec().num_seasons; ++s) intercept(s, row) = rule;
}

void RestrictionPattern::set_coeff_all(int lag, int row, int col, EntryRule rule) {
  for (int s = 1; s <= layout_.spec().num_seasons; ++s)
    if (lag <= layout_.spec().order(s)) coeff(s, lag, row, col) = rule;
}

RestrictionSet build_restrictions(const RestrictionPattern& pattern) {
  const BetaLayout& layout = pattern.layout();
  const int d = layout.size();
  if (static_cast<int>(pattern.rules().size()) != d)
    fail(ErrorCategory::config, "restriction pattern does not cover every parameter");

  // Constant entries are keyed by their position inside β(s): the same offset
  // within the season block means the same (term, lag, row, col).
  std::map<int, int> constant_slot;
  std::vector<std::pair<int, int>> nonzeros;  // (β index, γ index)
  Vector r = Vector::Zero(d);
  int next = 0;
  for (int i = 0; i < d; ++i) {
    const EntryRule& rule = pattern.rules()[static_cast<size_t>(i)];
    switch (rule.code) {
      case EntryCode::seasonal:
        nonzeros.emplace_back(i, next++);
        break;
      case EntryCode::constant: {
        const int within = i - layout.season_offset(layout.season_of(i));
        auto [it, inserted] = constant_slot.try_emplace(within, next);
        if (inserted) ++next;
        nonzeros.emplace_back(i, it->second);
        break;
      }
      case EntryCode::zero:
        break;
      case EntryCode::fixed:
        r(i) = rule.value;
        break;
    }
  }
  RestrictionSet out;
  out.r_matrix = Matrix::Zero(d, next);
  for (auto [row, col] : nonzeros) out.r_matrix(row, col) = 1.0;
  out.r_vector = std::move(r);
  out.provenance = pattern.description;
  return out;
}

void check_full_column_rank(const RestrictionSet& restr) {
  if (restr.free_params() > restr.dim()) fail(ErrorCategory::config, "more free parameters than coordinates");
  if (restr.free_params() == 0) return;
  Eigen::JacobiSVD<Matrix> svd(restr.r_matrix);
  const Vector& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-10 * sv(0)) fail(ErrorCategory::config, "restriction matrix R is not of full column rank");
}

RestrictionPattern unrestricted_pattern(const PvarSpec& spec) {
  RestrictionPattern p(spec, EntryRule::seasonal());
  p.description = "unrestricted";
  return p;
}

RestrictionPattern var_collapse_pattern(const PvarSpec& spec) {
  RestrictionPattern p(spec, EntryRule::constant());
  p.description = "var_collapse";
  return p;
}

RestrictionPattern peersman_pattern(const PvarSpec& spec, PeersmanVariant variant) {
  if (spec.num_vars != 3 || spec.num_seasons != 12)
    fail(ErrorCategory::config, "peersman_pattern needs m=3 variables (IP, INF, FFR) and S=12");
  for (int order : spec.orders)
    if (order != 9) fail(ErrorCategory::config, "peersman_pattern needs p(s)=9 in every season");

  RestrictionPattern p(spec, EntryRule::constant());
  p.set_intercept_all(0, EntryRule::seasonal());
  p.set_intercept_all(1, EntryRule::seasonal());
  const int seasonal_rows = variant == PeersmanVariant::as_displayed ? 3 : 2;
  for (int lag = 1; lag <= 4; ++lag)
    for (int row = 0; row < seasonal_rows; ++row) p.set_coeff_all(lag, row, 0, EntryRule::seasonal());
  p.description = variant == PeersmanVariant::as_displayed ? "peersman_pattern" : "peersman_pattern_ffr_nonseasonal";
  return p;
}

}  // namespace spvar
