#ifndef SPVAR_MODEL_HPP
#define SPVAR_MODEL_HPP

#include "spvar/common.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace spvar {

/**
 * Dimensions of a periodic VAR: S seasons per cycle, m variables and one
 * autoregressive order per season. Seasons are 1-based throughout.
 */
struct PvarSpec {
  int num_seasons = 1;
  int num_vars = 1;
  std::vector<int> orders;
  std::vector<std::string> var_names;

  static PvarSpec make(int num_seasons, int num_vars, std::vector<int> orders,
                       std::vector<std::string> names = {}) {
    PvarSpec spec{num_seasons, num_vars, std::move(orders), std::move(names)};
    if (spec.var_names.empty()) {
      for (int i = 1; i <= num_vars; ++i) spec.var_names.push_back("y" + std::to_string(i));
    }
    spec.validate();
    return spec;
  }

  static PvarSpec uniform(int num_seasons, int num_vars, int order) {
    return make(num_seasons, num_vars, std::vector<int>(static_cast<size_t>(num_seasons), order));
  }

  void validate() const {
    if (num_seasons < 1) fail(ErrorCategory::config, "number of seasons must be >= 1");
    if (num_vars < 1) fail(ErrorCategory::config, "number of variables must be >= 1");
    if (static_cast<int>(orders.size()) != num_seasons)
      fail(ErrorCategory::config, "expected " + std::to_string(num_seasons) + " seasonal orders, got " +
                                      std::to_string(orders.size()));
    for (int p : orders)
      if (p < 0) fail(ErrorCategory::config, "seasonal orders must be nonnegative");
    if (!var_names.empty() && static_cast<int>(var_names.size()) != num_vars)
      fail(ErrorCategory::config, "variable name count does not match number of variables");
  }

  int order(int season) const { return orders[static_cast<size_t>(season - 1)]; }
  int max_order() const { return orders.empty() ? 0 : *std::max_element(orders.begin(), orders.end()); }
  /// Order P of the stacked cycle-level VAR.
  int stacked_order() const { return (max_order() + num_seasons - 1) / num_seasons; }
  /// Regressors per equation in season s: intercept plus m lags per order.
  int regressors(int season) const { return num_vars * order(season) + 1; }
  /// Number of presample rows y_{s'}..y_0 the first cycle reaches back to, s' = min_s (s - p(s)).
  int presample_rows() const {
    int rows = 0;
    for (int s = 1; s <= num_seasons; ++s) rows = std::max(rows, order(s) - s + 1);
    return rows;
  }

  bool operator==(const PvarSpec&) const = default;
};

/// Reduced-form parameters ν(s), A_i(s), Σ_ε(s) of a periodic VAR.
template <typename Scalar>
struct BasicPvarParams {
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  PvarSpec spec;
  std::vector<VectorType> intercepts;
  std::vector<std::vector<MatrixType>> coeffs;
  std::vector<MatrixType> sigma;

  static BasicPvarParams zeros(const PvarSpec& spec) {
    spec.validate();
    BasicPvarParams out;
    out.spec = spec;
    const int m = spec.num_vars;
    for (int s = 1; s <= spec.num_seasons; ++s) {
      out.intercepts.push_back(VectorType::Zero(m));
      out.coeffs.emplace_back(static_cast<size_t>(spec.order(s)), MatrixType::Zero(m, m));
      out.sigma.push_back(MatrixType::Identity(m, m));
    }
    return out;
  }

  const VectorType& intercept(int season) const { return intercepts[static_cast<size_t>(season - 1)]; }
  VectorType& intercept(int season) { return intercepts[static_cast<size_t>(season - 1)]; }
  MatrixType& coeff(int season, int lag) {
    return coeffs[static_cast<size_t>(season - 1)][static_cast<size_t>(lag - 1)];
  }
  const MatrixType& cov(int season) const { return sigma[static_cast<size_t>(season - 1)]; }
  MatrixType& cov(int season) { return sigma[static_cast<size_t>(season - 1)]; }

  /// A_lag(season), the zero matrix outside 1..p(season).
  MatrixType coeff_or_zero(int season, int lag) const {
    const int m = spec.num_vars;
    if (lag < 1 || lag > spec.order(season)) return MatrixType::Zero(m, m);
    return coeffs[static_cast<size_t>(season - 1)][static_cast<size_t>(lag - 1)];
  }

  /// Shape checks only; covariances may be singular (e.g. an exact fit).
  void validate_shapes() const {
    spec.validate();
    const int m = spec.num_vars;
    const auto S = static_cast<size_t>(spec.num_seasons);
    if (intercepts.size() != S || coeffs.size() != S || sigma.size() != S)
      fail(ErrorCategory::config, "parameter arrays must have one entry per season");
    for (int s = 1; s <= spec.num_seasons; ++s) {
      const auto i = static_cast<size_t>(s - 1);
      if (intercepts[i].size() != m) fail(ErrorCategory::config, "intercept size mismatch in season " + std::to_string(s));
      if (static_cast<int>(coeffs[i].size()) != spec.order(s))
        fail(ErrorCategory::config, "season " + std::to_string(s) + " must have exactly p(s) coefficient matrices");
      for (const auto& a : coeffs[i])
        if (a.rows() != m || a.cols() != m)
          fail(ErrorCategory::config, "coefficient matrix shape mismatch in season " + std::to_string(s));
      if (sigma[i].rows() != m || sigma[i].cols() != m)
        fail(ErrorCategory::config, "covariance shape mismatch in season " + std::to_string(s));
    }
  }

  /// Full validation: shapes plus symmetric positive definite covariances.
  void validate() const {
    validate_shapes();
    for (int s = 1; s <= spec.num_seasons; ++s) {
      const MatrixType& c = cov(s);
      if ((c - c.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12))
        fail(ErrorCategory::numerical, "covariance of season " + std::to_string(s) + " is not symmetric");
      Eigen::SelfAdjointEigenSolver<MatrixType> eig(c, Eigen::EigenvaluesOnly);
      if (!(eig.eigenvalues().minCoeff() > Scalar(0)))
        fail(ErrorCategory::numerical, "covariance of season " + std::to_string(s) + " is not positive definite");
    }
  }
};

using PvarParams = BasicPvarParams<double>;

/// Cycle-level representation A0 Y_n = ν + A_1 Y_{n-1} + ... + A_P Y_{n-P} + ξ_n.
template <typename Scalar>
struct BasicStackedVar {
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  MatrixType a0;
  std::vector<MatrixType> lag_coeffs;
  VectorType intercept;
};

using StackedVar = BasicStackedVar<double>;

template <typename Scalar>
BasicStackedVar<Scalar> build_stacked_var(const BasicPvarParams<Scalar>& params) {
  using MatrixType = typename BasicStackedVar<Scalar>::MatrixType;
  const PvarSpec& spec = params.spec;
  const int S = spec.num_seasons;
  const int m = spec.num_vars;
  const int P = spec.stacked_order();

  BasicStackedVar<Scalar> out;
  out.a0 = MatrixType::Identity(S * m, S * m);
  out.intercept.resize(S * m);
  for (int r = 1; r <= S; ++r) {
    out.intercept.segment((r - 1) * m, m) = params.intercept(r);
    for (int c = 1; c < r; ++c) out.a0.block((r - 1) * m, (c - 1) * m, m, m) = -params.coeff_or_zero(r, r - c);
  }
  for (int i = 1; i <= P; ++i) {
    MatrixType a = MatrixType::Zero(S * m, S * m);
    for (int r = 1; r <= S; ++r)
      for (int c = 1; c <= S; ++c) a.block((r - 1) * m, (c - 1) * m, m, m) = params.coeff_or_zero(r, S * i + r - c);
    out.lag_coeffs.push_back(std::move(a));
  }
  return out;
}

/// SmP x SmP companion matrix of the reduced cycle-level VAR with coefficients A0^{-1} A_i.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> companion_matrix(const BasicStackedVar<Scalar>& stacked) {
  using MatrixType = typename BasicStackedVar<Scalar>::MatrixType;
  const auto n = stacked.a0.rows();
  const auto P = static_cast<Eigen::Index>(stacked.lag_coeffs.size());
  MatrixType comp = MatrixType::Zero(n * P, n * P);
  if (P == 0) return comp;
  // A0 is unit lower triangular, so the triangular solve is exact in structure.
  const auto a0 = stacked.a0.template triangularView<Eigen::UnitLower>();
  for (Eigen::Index i = 0; i < P; ++i) comp.block(0, i * n, n, n) = a0.solve(stacked.lag_coeffs[static_cast<size_t>(i)]);
  if (P > 1) comp.block(n, 0, n * (P - 1), n * (P - 1)).setIdentity();
  return comp;
}

/// Spectral radius of the stacked companion matrix; < 1 means periodically stationary.
template <typename Scalar>
Scalar stationarity_margin(const BasicPvarParams<Scalar>& params) {
  const auto comp = companion_matrix(build_stacked_var(params));
  if (comp.size() == 0) return Scalar(0);
  Eigen::EigenSolver<std::decay_t<decltype(comp)>> solver(comp, false);
  if (solver.info() != Eigen::Success) fail(ErrorCategory::numerical, "eigenvalue solver failed on companion matrix");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

inline constexpr double kStationarityTolerance = 1e-10;

template <typename Scalar>
bool is_periodically_stationary(const BasicPvarParams<Scalar>& params, double tolerance = kStationarityTolerance) {
  return stationarity_margin(params) < Scalar(1.0 - tolerance);
}

enum class IrfKind { ma_coefficient, reduced_ir, structural_ir };

/// Dense m x m response matrices indexed by (season 1..S, lag 0..K).
template <typename Scalar>
class BasicIrfSet {
 public:
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BasicIrfSet() = default;
  BasicIrfSet(PvarSpec spec, int horizon, IrfKind kind)
      : spec_(std::move(spec)),
        horizon_(horizon),
        kind_(kind),
        values_(static_cast<size_t>(spec_.num_seasons * (horizon + 1)),
                MatrixType::Zero(spec_.num_vars, spec_.num_vars)) {
    if (horizon < 0) fail(ErrorCategory::precondition, "impulse response horizon must be >= 0");
  }

  const PvarSpec& spec() const { return spec_; }
  int horizon() const { return horizon_; }
  IrfKind kind() const { return kind_; }

  const MatrixType& at(int season, int lag) const { return values_[index(season, lag)]; }
  MatrixType& at(int season, int lag) { return values_[index(season, lag)]; }

 private:
  size_t index(int season, int lag) const {
    return static_cast<size_t>((season - 1) * (horizon_ + 1) + lag);
  }

  PvarSpec spec_;
  int horizon_ = 0;
  IrfKind kind_ = IrfKind::ma_coefficient;
  std::vector<MatrixType> values_;
};

using IrfSet = BasicIrfSet<double>;

/// Periodic moving-average coefficients Φ_k(s), k = 0..K.
template <typename Scalar>
BasicIrfSet<Scalar> ma_coefficients(const BasicPvarParams<Scalar>& params, int horizon) {
  const PvarSpec& spec = params.spec;
  const int S = spec.num_seasons;
  const int m = spec.num_vars;
  BasicIrfSet<Scalar> phi(spec, horizon, IrfKind::ma_coefficient);
  for (int s = 1; s <= S; ++s) phi.at(s, 0).setIdentity(m, m);
  for (int k = 1; k <= horizon; ++k) {
    for (int s = 1; s <= S; ++s) {
      auto& out = phi.at(s, k);
      const int terms = std::min(k, spec.order(s));
      for (int j = 1; j <= terms; ++j) out.noalias() += params.coeffs[static_cast<size_t>(s - 1)][static_cast<size_t>(j - 1)] * phi.at(wrap_season(s - j, S), k - j);
    }
  }
  return phi;
}

/// Φ^IR_k(s) = Φ_k(s + k): response k steps after a unit innovation dated in season s.
template <typename Scalar>
BasicIrfSet<Scalar> impulse_responses(const BasicPvarParams<Scalar>& params, int horizon) {
  const auto phi = ma_coefficients(params, horizon);
  const int S = params.spec.num_seasons;
  BasicIrfSet<Scalar> ir(params.spec, horizon, IrfKind::reduced_ir);
  for (int s = 1; s <= S; ++s)
    for (int k = 0; k <= horizon; ++k) ir.at(s, k) = phi.at(wrap_season(s + k, S), k);
  return ir;
}

/// Sm x Sm stacked response at cycle lag h; block (r, c) holds values(c, Sh + r - c).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> stack_var_irf(const BasicIrfSet<Scalar>& irf, int h) {
  const int S = irf.spec().num_seasons;
  const int m = irf.spec().num_vars;
  if (h < 0) fail(ErrorCategory::precondition, "stacked horizon must be >= 0");
  if (irf.horizon() < S * h + S - 1)
    fail(ErrorCategory::precondition, "impulse responses computed to horizon " + std::to_string(irf.horizon()) +
                                          " but stacking at h=" + std::to_string(h) + " needs " +
                                          std::to_string(S * h + S - 1));
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(S * m, S * m);
  for (int r = 1; r <= S; ++r)
    for (int c = 1; c <= S; ++c) {
      const int lag = S * h + r - c;
      if (lag >= 0) out.block((r - 1) * m, (c - 1) * m, m, m) = irf.at(c, lag);
    }
  return out;
}

/**
 * Long-run cumulative responses C(s) = Σ_k Φ^IR_k(s), read off column block s of
 * (I - Σ_i A0^{-1} A_i)^{-1} A0^{-1} and summed over row blocks.
 */
template <typename Scalar>
std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> longrun_cumulative(
    const BasicPvarParams<Scalar>& params, double tolerance = kStationarityTolerance) {
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (!is_periodically_stationary(params, tolerance))
    fail(ErrorCategory::numerical, "long-run response undefined: parameters are not periodically stationary");
  const PvarSpec& spec = params.spec;
  const int S = spec.num_seasons;
  const int m = spec.num_vars;
  const auto stacked = build_stacked_var(params);
  const auto a0 = stacked.a0.template triangularView<Eigen::UnitLower>();
  MatrixType lhs = MatrixType::Identity(S * m, S * m);
  for (const auto& a : stacked.lag_coeffs) lhs -= a0.solve(a);
  const MatrixType a0_inv = a0.solve(MatrixType::Identity(S * m, S * m));
  const MatrixType total = lhs.partialPivLu().solve(a0_inv);

  std::vector<MatrixType> out;
  for (int s = 1; s <= S; ++s) {
    MatrixType c = MatrixType::Zero(m, m);
    for (int r = 1; r <= S; ++r) c += total.block((r - 1) * m, (s - 1) * m, m, m);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace spvar

#endif  // SPVAR_MODEL_HPP
