#include "spvar/bootstrap.hpp"

#include "spvar/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace spvar {

namespace {

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

Vector vech(const Matrix& a) {
  const auto m = a.rows();
  Vector out(m * (m + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = j; i < m; ++i) out(k++) = a(i, j);
  return out;
}

Matrix gather_rows(const Matrix& source, const std::vector<int>& index) {
  Matrix out(static_cast<Eigen::Index>(index.size()), source.cols());
  for (size_t t = 0; t < index.size(); ++t) out.row(static_cast<Eigen::Index>(t)) = source.row(index[t] - 1);
  return out;
}

}  // namespace

int BootstrapConfig::effective_block() const {
  if (method == BootstrapMethod::seasonal_iid || method == BootstrapMethod::iid_standardized) return 1;
  return block_len;
}

void BootstrapConfig::validate(int sample_length) const {
  if (effective_block() < 1) fail(ErrorCategory::config, "block length must be >= 1");
  if (effective_block() >= sample_length)
    fail(ErrorCategory::config, "block length " + std::to_string(effective_block()) + " must be below T=" +
                                    std::to_string(sample_length));
  if (replicates < 1) fail(ErrorCategory::config, "bootstrap replicates must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCategory::config, "alpha must lie in (0, 1)");
}

std::vector<int> gsbb_candidates(int T, int S, int b, int t) {
  const long long r1 = floor_div(t - 1, S);
  const long long r2 = floor_div(static_cast<long long>(T) - b - t, S);
  std::vector<int> out;
  for (long long j = -r1; j <= r2; ++j) out.push_back(static_cast<int>(t + S * j));
  if (out.empty()) {
    // Near the end of short samples the formula's range is empty; fall back to
    // every same-season start that keeps the (possibly truncated) block inside the sample.
    const int needed = std::min(b, T - t + 1);
    for (int k = wrap_season(t, S); k <= T - needed + 1; k += S) out.push_back(k);
  }
  if (out.empty())
    fail(ErrorCategory::precondition, "no same-season block start for t=" + std::to_string(t) + " with b=" +
                                          std::to_string(b) + ", T=" + std::to_string(T));
  return out;
}

std::vector<int> gsbb_start_indices(int T, int S, int b, Rng& rng) {
  if (b < 1 || b >= T)
    fail(ErrorCategory::precondition, "block length must satisfy 1 <= b < T (b=" + std::to_string(b) + ", T=" +
                                          std::to_string(T) + ")");
  const int l = (T + b - 1) / b;
  std::vector<int> starts;
  starts.reserve(static_cast<size_t>(l));
  for (int i = 0; i < l; ++i) {
    const auto cand = gsbb_candidates(T, S, b, i * b + 1);
    starts.push_back(cand[static_cast<size_t>(uniform_int(rng, 0, static_cast<long long>(cand.size()) - 1))]);
  }
  return starts;
}

std::vector<int> seasonal_source_indices(int T, int S, int b, Rng& rng) {
  std::vector<int> index;
  index.reserve(static_cast<size_t>(T));
  if (b == T) {
    for (int t = 1; t <= T; ++t) index.push_back(t);
    return index;
  }
  for (int start : gsbb_start_indices(T, S, b, rng))
    for (int j = 0; j < b && static_cast<int>(index.size()) < T; ++j) index.push_back(start + j);
  return index;
}

std::vector<int> mbb_source_indices(int T, int b, Rng& rng) {
  if (b < 1 || b > T)
    fail(ErrorCategory::precondition, "block length must satisfy 1 <= b <= T (b=" + std::to_string(b) + ", T=" +
                                          std::to_string(T) + ")");
  const int l = (T + b - 1) / b;
  std::vector<int> index;
  index.reserve(static_cast<size_t>(T));
  for (int i = 0; i < l; ++i) {
    const auto start = static_cast<int>(uniform_int(rng, 1, T - b + 1));
    for (int j = 0; j < b && static_cast<int>(index.size()) < T; ++j) index.push_back(start + j);
  }
  return index;
}

Matrix resample_residuals_seasonal(const Matrix& residuals, int S, int b, Rng& rng) {
  return gather_rows(residuals, seasonal_source_indices(static_cast<int>(residuals.rows()), S, b, rng));
}

std::pair<Matrix, Matrix> symmetric_sqrt(const Matrix& spd) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(spd);
  const Vector& ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 1e-12 * ev.cwiseAbs().maxCoeff()))
    fail(ErrorCategory::numerical, "covariance is not positive definite; cannot standardize residuals");
  const Matrix& v = eig.eigenvectors();
  Matrix root = v * ev.cwiseSqrt().asDiagonal() * v.transpose();
  Matrix inv_root = v * ev.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  return {root, inv_root};
}

Matrix resample_residuals_mbb(const Matrix& residuals, const std::vector<Matrix>& sigma, int b, Rng& rng) {
  const auto S = static_cast<int>(sigma.size());
  const auto T = static_cast<int>(residuals.rows());
  std::vector<std::pair<Matrix, Matrix>> roots;
  for (const auto& s : sigma) roots.push_back(symmetric_sqrt(s));
  Matrix standardized(residuals.rows(), residuals.cols());
  for (int t = 1; t <= T; ++t)
    standardized.row(t - 1) =
        (roots[static_cast<size_t>(wrap_season(t, S) - 1)].second * residuals.row(t - 1).transpose()).transpose();
  Matrix out = gather_rows(standardized, mbb_source_indices(T, b, rng));
  for (int t = 1; t <= T; ++t)
    out.row(t - 1) = (roots[static_cast<size_t>(wrap_season(t, S) - 1)].first * out.row(t - 1).transpose()).transpose();
  return out;
}

TimeSeriesPanel regenerate_path(const PvarParams& params, const Matrix& presample, const Matrix& pseudo_residuals) {
  const PvarSpec& spec = params.spec;
  const int S = spec.num_seasons;
  if (presample.rows() < spec.presample_rows())
    fail(ErrorCategory::precondition, "presample does not cover the deepest lag");
  TimeSeriesPanel out;
  out.num_seasons = S;
  out.presample = presample;
  out.data = Matrix::Zero(pseudo_residuals.rows(), spec.num_vars);
  const auto T = static_cast<int>(pseudo_residuals.rows());
  for (int t = 1; t <= T; ++t) {
    const int s = wrap_season(t, S);
    Vector y = params.intercept(s) + pseudo_residuals.row(t - 1).transpose();
    for (int i = 1; i <= spec.order(s); ++i)
      y.noalias() += params.coeffs[static_cast<size_t>(s - 1)][static_cast<size_t>(i - 1)] * out.row(t - i).transpose();
    out.data.row(t - 1) = y.transpose();
  }
  return out;
}

BootstrapDraws bootstrap_engine(const TimeSeriesPanel& panel, const FitResult& base, const RestrictionSet& restr,
                                const IdentScheme& scheme, int horizon, const BootstrapConfig& config,
                                const FitOptions& fit_options, int threads) {
  const PvarSpec& spec = base.params.spec;
  const int S = spec.num_seasons;
  const int T = panel.length();
  config.validate(T);
  const int L = config.replicates;
  const int b = config.effective_block();

  struct Replicate {
    Vector beta;
    Vector sigma;
    IrfSet sirf;
  };
  std::vector<std::optional<Replicate>> results(static_cast<size_t>(L));
  BootstrapDraws draws;
  for (int l = 1; l <= L; ++l) draws.sub_seeds.push_back(sub_seed(config.seed, static_cast<std::uint64_t>(l)));

  parallel_for(L, threads, [&](int i) {
    Rng rng(draws.sub_seeds[static_cast<size_t>(i)]);
    const Matrix pseudo = config.seasonal() ? resample_residuals_seasonal(base.residuals, S, b, rng)
                                            : resample_residuals_mbb(base.residuals, base.params.sigma, b, rng);
    try {
      const TimeSeriesPanel star = regenerate_path(base.params, panel.presample, pseudo);
      const FitResult refit = fit_constrained(build_design(star, spec), restr, fit_options);
      const auto h0 = identify_impact(refit.params, scheme);
      Replicate rep;
      rep.beta = refit.beta;
      rep.sigma.resize(S * spec.num_vars * (spec.num_vars + 1) / 2);
      Eigen::Index off = 0;
      for (const auto& sig : refit.params.sigma) {
        const Vector v = vech(sig);
        rep.sigma.segment(off, v.size()) = v;
        off += v.size();
      }
      rep.sirf = structural_irf(impulse_responses(refit.params, horizon), h0, scheme.impact_normalization);
      results[static_cast<size_t>(i)] = std::move(rep);
    } catch (const Error&) {
      // counted below
    }
  });

  int ok = 0;
  for (const auto& r : results) ok += r.has_value() ? 1 : 0;
  draws.failure_count = L - ok;
  if (draws.failure_count > 0.05 * L)
    fail(ErrorCategory::numerical, std::to_string(draws.failure_count) + " of " + std::to_string(L) +
                                       " bootstrap replicates failed (limit 5%)");
  draws.beta_draws.resize(ok, base.beta.size());
  draws.sigma_draws.resize(ok, S * spec.num_vars * (spec.num_vars + 1) / 2);
  int row = 0;
  for (int i = 0; i < L; ++i) {
    auto& r = results[static_cast<size_t>(i)];
    if (!r) continue;
    draws.beta_draws.row(row) = r->beta.transpose();
    draws.sigma_draws.row(row) = r->sigma.transpose();
    draws.sirf_draws.push_back(std::move(r->sirf));
    draws.replicate_ids.push_back(i + 1);
    ++row;
  }
  return draws;
}

double empirical_quantile(std::span<const double> sorted, double q) {
  const auto L = static_cast<long long>(sorted.size());
  if (L == 0) fail(ErrorCategory::precondition, "quantile of an empty sample");
  // The offset keeps products that are integers in exact arithmetic (0.07 * 100) from rounding up.
  long long k = static_cast<long long>(std::ceil(q * static_cast<double>(L) - 1e-9));
  k = std::clamp(k, 1LL, L);
  return sorted[static_cast<size_t>(k - 1)];
}

std::pair<double, double> ci_bands(double point, std::span<const double> draws, double alpha, CiMethod method) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCategory::config, "alpha must lie in (0, 1)");
  if (draws.size() < 2) fail(ErrorCategory::precondition, "need at least two bootstrap draws");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = empirical_quantile(sorted, alpha / 2.0);
  const double hi = empirical_quantile(sorted, 1.0 - alpha / 2.0);
  switch (method) {
    case CiMethod::median_adjusted: {
      const double mid = empirical_quantile(sorted, 0.5);
      return {point + lo - mid, point + hi - mid};
    }
    case CiMethod::percentile:
      return {lo, hi};
    case CiMethod::hall_percentile:
      return {2.0 * point - hi, 2.0 * point - lo};
  }
  return {lo, hi};
}

IrfBands irf_bands(const IrfSet& point, const std::vector<IrfSet>& draws, double alpha, CiMethod method) {
  const PvarSpec& spec = point.spec();
  const int m = spec.num_vars;
  IrfBands out{IrfSet(spec, point.horizon(), point.kind()), IrfSet(spec, point.horizon(), point.kind())};
  std::vector<double> values(draws.size());
  for (int s = 1; s <= spec.num_seasons; ++s)
    for (int k = 0; k <= point.horizon(); ++k)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          for (size_t l = 0; l < draws.size(); ++l) values[l] = draws[l].at(s, k)(i, j);
          const auto [lo, hi] = ci_bands(point.at(s, k)(i, j), values, alpha, method);
          out.lower.at(s, k)(i, j) = lo;
          out.upper.at(s, k)(i, j) = hi;
        }
  return out;
}

}  // namespace spvar
