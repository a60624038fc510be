#include "spvar/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace spvar {

DesignMatrices build_design(const TimeSeriesPanel& panel, const PvarSpec& spec) {
  spec.validate();
  const int S = spec.num_seasons;
  const int m = spec.num_vars;
  if (panel.num_seasons != S) fail(ErrorCategory::data, "panel season count does not match the model");
  if (panel.num_vars() != m) fail(ErrorCategory::data, "panel variable count does not match the model");
  const int T = panel.length();
  if (T < S || T % S != 0)
    fail(ErrorCategory::data, "sample length " + std::to_string(T) + " is not a positive multiple of S=" + std::to_string(S));
  if (panel.presample.rows() < spec.presample_rows())
    fail(ErrorCategory::data, "presample has " + std::to_string(panel.presample.rows()) + " rows, lag orders need " +
                                  std::to_string(spec.presample_rows()));

  const BetaLayout layout(spec);
  DesignMatrices out;
  out.spec = spec;
  out.z = panel.data.transpose();
  out.x = Matrix::Zero(layout.regressor_rows(), T);
  for (int t = 1; t <= T; ++t) {
    const int s = wrap_season(t, S);
    const int off = layout.regressor_offset(s);
    auto col = out.x.col(t - 1);
    col(off) = 1.0;
    for (int i = 1; i <= spec.order(s); ++i) col.segment(off + 1 + (i - 1) * m, m) = panel.row(t - i).transpose();
  }
  return out;
}

std::vector<int> free_counts(const RestrictionSet& restr, const PvarSpec& spec) {
  const BetaLayout layout(spec);
  const int m = spec.num_vars;
  const Matrix& R = restr.r_matrix;
  std::vector<int> out;
  for (int s = 1; s <= spec.num_seasons; ++s) {
    const int off = layout.season_offset(s);
    const int len = layout.season_size(s);
    std::vector<int> per_equation(static_cast<size_t>(m), 0);
    int touching = 0;
    for (Eigen::Index j = 0; j < R.cols(); ++j) {
      bool any = false;
      for (int i = 0; i < len; ++i) {
        if (R(off + i, j) != 0.0) {
          any = true;
          ++per_equation[static_cast<size_t>(i % m)];
          break;
        }
      }
      if (any) ++touching;
    }
    if (touching % m == 0)
      out.push_back(touching / m);
    else
      out.push_back(*std::max_element(per_equation.begin(), per_equation.end()));
  }
  return out;
}

std::vector<Matrix> estimate_sigma(const Matrix& residuals, int num_seasons, const std::vector<int>& counts,
                                   const SigmaOptions& options) {
  const int S = num_seasons;
  const auto T = residuals.rows();
  const auto m = residuals.cols();
  if (T % S != 0) fail(ErrorCategory::precondition, "residual length is not a multiple of S");
  if (static_cast<int>(counts.size()) != S) fail(ErrorCategory::precondition, "need one free-parameter count per season");
  const auto N = static_cast<int>(T / S);
  std::vector<Matrix> out;
  for (int s = 1; s <= S; ++s) {
    Matrix acc = Matrix::Zero(m, m);
    for (int n = 0; n < N; ++n) {
      const auto e = residuals.row(n * S + s - 1);
      acc.noalias() += e.transpose() * e;
    }
    int divisor = N;
    if (options.divisor == SigmaDivisor::df_corrected) {
      divisor = N - counts[static_cast<size_t>(s - 1)];
      if (divisor <= 0) {
        if (!options.fallback_to_cycles)
          fail(ErrorCategory::numerical, "insufficient cycles for df correction in season " + std::to_string(s) + ": N=" +
                                             std::to_string(N) + ", k(s)=" +
                                             std::to_string(counts[static_cast<size_t>(s - 1)]));
        divisor = N;
      }
    }
    acc /= static_cast<double>(divisor);
    out.push_back((acc + acc.transpose()) / 2.0);
  }
  return out;
}

namespace {

std::string seasons_touched(const Vector& beta_direction, const BetaLayout& layout) {
  const double scale = beta_direction.cwiseAbs().maxCoeff();
  std::set<int> seasons;
  for (Eigen::Index i = 0; i < beta_direction.size(); ++i)
    if (std::abs(beta_direction(i)) > 1e-6 * scale) seasons.insert(layout.season_of(static_cast<int>(i)));
  std::ostringstream os;
  bool first = true;
  for (int s : seasons) {
    os << (first ? "" : ",") << s;
    first = false;
  }
  return os.str();
}

}  // namespace

FitResult fit_constrained(const DesignMatrices& design, const RestrictionSet& restr, const FitOptions& options) {
  const PvarSpec& spec = design.spec;
  const BetaLayout layout(spec);
  const int m = spec.num_vars;
  const int S = spec.num_seasons;
  const auto T = design.x.cols();
  const auto K = design.x.rows();
  const int d = layout.size();
  const int M = restr.free_params();
  if (restr.dim() != d || restr.r_vector.size() != d)
    fail(ErrorCategory::config, "restriction set has dimension " + std::to_string(restr.dim()) + ", model needs " +
                                    std::to_string(d));

  // z - (X' ⊗ I) r, arranged as an m x T matrix.
  const Matrix fixed_part = restr.r_vector.reshaped(m, K);
  const Matrix target = design.z - fixed_part * design.x;

  Vector gamma = Vector::Zero(M);
  if (M > 0) {
    if (static_cast<Eigen::Index>(M) > T * m)
      fail(ErrorCategory::numerical, "more free parameters (" + std::to_string(M) + ") than observations");
    // Rows t*m + r of W = (X' ⊗ I_m) R.
    Matrix W = Matrix::Zero(T * m, M);
    for (Eigen::Index t = 0; t < T; ++t) {
      const int s = wrap_season(t + 1, S);
      const int k0 = layout.regressor_offset(s);
      const int k1 = k0 + spec.regressors(s);
      auto rows = W.middleRows(t * m, m);
      for (int k = k0; k < k1; ++k) {
        const double xv = design.x(k, t);
        if (xv != 0.0) rows.noalias() += xv * restr.r_matrix.middleRows(static_cast<Eigen::Index>(k) * m, m);
      }
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(W);
    const Matrix upper = qr.matrixR().topLeftCorner(M, M).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Matrix> svd(upper, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(M - 1);
    // cond(R'(XX' ⊗ I)R) = cond(W)^2
    const bool singular = !(smin > 0.0) || (smax / smin) * (smax / smin) > options.max_condition;
    if (singular) {
      const Vector null_gamma = qr.colsPermutation() * svd.matrixV().col(M - 1);
      const Vector null_beta = restr.r_matrix * null_gamma;
      std::ostringstream os;
      os << "restricted normal equations are singular or ill-conditioned (condition "
         << (smin > 0.0 ? (smax / smin) * (smax / smin) : INFINITY) << "); near-collinear direction involves season(s) "
         << seasons_touched(null_beta, layout);
      fail(ErrorCategory::numerical, os.str());
    }
    gamma = qr.solve(target.reshaped());
  }

  FitResult fit;
  fit.gamma = gamma;
  fit.beta = restr.r_matrix * gamma + restr.r_vector;
  const Matrix coef = fit.beta.reshaped(m, K);
  fit.residuals = (design.z - coef * design.x).transpose();
  fit.free_counts = free_counts(restr, spec);
  fit.effective_n = static_cast<int>(T / S);
  fit.params = unvectorize(fit.beta, spec);
  fit.params.sigma = estimate_sigma(fit.residuals, S, fit.free_counts, options.sigma);
  fit.stationarity_margin = stationarity_margin(fit.params);
  return fit;
}

}  // namespace spvar
