#include "spvar/panel.hpp"

#include <string>

namespace spvar {

int consumed_cycles(const PvarSpec& spec) {
  const int rows = spec.presample_rows();
  return (rows + spec.num_seasons - 1) / spec.num_seasons;
}

TimeSeriesPanel make_panel(const Matrix& raw, const PvarSpec& spec, PresamplePolicy policy, int presample_rows) {
  const int S = spec.num_seasons;
  if (raw.cols() != spec.num_vars)
    fail(ErrorCategory::data, "series has " + std::to_string(raw.cols()) + " columns, expected " +
                                  std::to_string(spec.num_vars));
  const int needed = spec.presample_rows();
  int lead = 0;
  if (policy == PresamplePolicy::consume) {
    lead = consumed_cycles(spec) * S;
  } else {
    if (presample_rows < needed)
      fail(ErrorCategory::data, "presample has " + std::to_string(presample_rows) + " rows but the lag orders need " +
                                    std::to_string(needed));
    lead = presample_rows;
  }
  const auto rest = raw.rows() - lead;
  if (rest < S)
    fail(ErrorCategory::data, "series too short: " + std::to_string(raw.rows()) + " rows leave fewer than one cycle after " +
                                  std::to_string(lead) + " presample rows");
  if (rest % S != 0)
    fail(ErrorCategory::data, "sample length " + std::to_string(rest) + " after presample is not divisible by S=" +
                                  std::to_string(S));
  TimeSeriesPanel panel;
  panel.num_seasons = S;
  panel.presample = raw.topRows(lead);
  panel.data = raw.bottomRows(rest);
  return panel;
}

}  // namespace spvar
