#ifndef SPVAR_PANEL_HPP
#define SPVAR_PANEL_HPP

#include "spvar/common.hpp"
#include "spvar/model.hpp"

namespace spvar {

/// How presample rows y_{s'}..y_0 are obtained from a raw series.
enum class PresamplePolicy {
  consume,  ///< leading whole cycles of the raw series become presample
  require   ///< the caller states how many leading rows are presample
};

/**
 * Observations y_1..y_T (T = S N) plus the presample rows that precede them.
 * Season of observation t is wrap_season(t, S); the presample ends at y_0.
 */
struct TimeSeriesPanel {
  Matrix presample;  ///< oldest row first, last row is y_0
  Matrix data;       ///< row t-1 holds y_t
  int num_seasons = 1;

  int num_vars() const { return static_cast<int>(data.cols()); }
  int length() const { return static_cast<int>(data.rows()); }
  int cycles() const { return length() / num_seasons; }

  /// y_t for any t >= 1 - presample.rows().
  auto row(int t) const {
    if (t >= 1) return data.row(t - 1);
    return presample.row(presample.rows() - 1 + t);
  }
};

/// Splits a raw T_raw x m matrix into presample and sample according to the policy.
TimeSeriesPanel make_panel(const Matrix& raw, const PvarSpec& spec, PresamplePolicy policy = PresamplePolicy::consume,
                           int presample_rows = 0);

/// Number of leading cycles the consume policy sets aside: ceil(max_s(p(s) - s + 1) / S).
int consumed_cycles(const PvarSpec& spec);

}  // namespace spvar

#endif  // SPVAR_PANEL_HPP
