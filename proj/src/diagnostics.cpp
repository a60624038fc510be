#include "spvar/diagnostics.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numeric>

namespace spvar {

Matrix seasonal_demean(const Matrix& data, int S, SeasonalMeans* means) {
  const auto T = data.rows();
  if (S < 1 || T % S != 0) fail(ErrorCategory::data, "series length is not a multiple of S");
  const auto N = T / S;
  Matrix out = data;
  SeasonalMeans local;
  for (int s = 1; s <= S; ++s) {
    Vector mu = Vector::Zero(data.cols());
    for (Eigen::Index n = 0; n < N; ++n) mu += data.row(n * S + s - 1).transpose();
    mu /= static_cast<double>(N);
    for (Eigen::Index n = 0; n < N; ++n) out.row(n * S + s - 1) -= mu.transpose();
    local.means.push_back(std::move(mu));
  }
  if (means) *means = std::move(local);
  return out;
}

std::vector<double> sample_acf(std::span<const double> x, int max_lag) {
  const auto T = static_cast<int>(x.size());
  if (max_lag < 0 || T <= max_lag) fail(ErrorCategory::precondition, "series must be longer than the maximum lag");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / T;
  auto gamma = [&](int h) {
    double acc = 0.0;
    for (int t = 0; t + h < T; ++t) acc += (x[static_cast<size_t>(t)] - mean) * (x[static_cast<size_t>(t + h)] - mean);
    return acc / T;
  };
  const double g0 = gamma(0);
  if (!(g0 > 0.0)) fail(ErrorCategory::numerical, "zero sample variance");
  std::vector<double> out;
  for (int h = 0; h <= max_lag; ++h) out.push_back(gamma(h) / g0);
  out[0] = 1.0;
  return out;
}

Matrix periodic_acf(std::span<const double> x, int S, int max_lag) {
  const auto T = static_cast<int>(x.size());
  if (S < 1 || T % S != 0) fail(ErrorCategory::data, "series length is not a multiple of S");
  if (max_lag < 0 || max_lag >= T) fail(ErrorCategory::precondition, "series must be longer than the maximum lag");
  const int N = T / S;
  std::vector<double> mu(static_cast<size_t>(S), 0.0);
  for (int t = 1; t <= T; ++t) mu[static_cast<size_t>(wrap_season(t, S) - 1)] += x[static_cast<size_t>(t - 1)] / N;
  auto dev = [&](int t) { return x[static_cast<size_t>(t - 1)] - mu[static_cast<size_t>(wrap_season(t, S) - 1)]; };

  // γ̂_s(h) = N^{-1} Σ_n dev(Sn+s) dev(Sn+s-h) over indices inside the sample.
  auto gamma = [&](int s, int h) {
    double acc = 0.0;
    for (int n = 0; n < N; ++n) {
      const int t = n * S + s;
      if (t - h >= 1) acc += dev(t) * dev(t - h);
    }
    return acc / N;
  };
  std::vector<double> g0(static_cast<size_t>(S));
  for (int s = 1; s <= S; ++s) {
    g0[static_cast<size_t>(s - 1)] = gamma(s, 0);
    if (!(g0[static_cast<size_t>(s - 1)] > 1e-300))
      fail(ErrorCategory::numerical, "zero sample variance in season " + std::to_string(s));
  }
  Matrix out(S, max_lag + 1);
  for (int s = 1; s <= S; ++s)
    for (int h = 0; h <= max_lag; ++h)
      out(s - 1, h) = gamma(s, h) / std::sqrt(g0[static_cast<size_t>(s - 1)] *
                                               g0[static_cast<size_t>(wrap_season(s - h, S) - 1)]);
  return out;
}

std::vector<double> periodogram(std::span<const double> x) {
  const auto T = x.size();
  if (T == 0) return {};
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(T);
  std::vector<double> centered(x.begin(), x.end());
  for (auto& v : centered) v -= mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, centered);
  std::vector<double> out(T);
  const double scale = 1.0 / (2.0 * M_PI * static_cast<double>(T));
  for (size_t j = 0; j < T; ++j) out[j] = std::norm(spectrum[j]) * scale;
  return out;
}

std::vector<double> smoothed_periodogram(std::span<const double> x, int bandwidth) {
  if (bandwidth < 0) fail(ErrorCategory::precondition, "bandwidth must be >= 0");
  const auto raw = periodogram(x);
  const auto T = static_cast<long long>(raw.size());
  std::vector<double> out(raw.size(), 0.0);
  const double w = 1.0 / (2.0 * bandwidth + 1.0);
  for (long long j = 0; j < T; ++j) {
    double acc = 0.0;
    for (long long k = -bandwidth; k <= bandwidth; ++k) acc += raw[static_cast<size_t>(((j + k) % T + T) % T)];
    out[static_cast<size_t>(j)] = acc * w;
  }
  return out;
}

SpectralEstimate spectral_density(std::span<const double> x, int bandwidth) {
  const auto T = static_cast<int>(x.size());
  if (T < 8) fail(ErrorCategory::precondition, "spectral density needs at least 8 observations");
  const auto full = smoothed_periodogram(x, bandwidth);
  SpectralEstimate est;
  est.bandwidth = bandwidth;
  for (int j = 0; j <= T / 2; ++j) {
    est.freqs.push_back(2.0 * M_PI * j / T);
    est.values.push_back(full[static_cast<size_t>(j)]);
  }
  return est;
}

std::vector<WhitenessRow> whiteness_summary(const Matrix& series, int max_lag) {
  const auto T = series.rows();
  const double band = 2.0 / std::sqrt(static_cast<double>(T));
  std::vector<WhitenessRow> out;
  for (Eigen::Index c = 0; c < series.cols(); ++c) {
    const Vector level = series.col(c);
    const Vector square = level.array().square();
    for (bool squared : {false, true}) {
      const Vector& v = squared ? square : level;
      const auto acf = sample_acf(std::span<const double>(v.data(), static_cast<size_t>(v.size())), max_lag);
      for (int h = 1; h <= max_lag; ++h)
        out.push_back({static_cast<int>(c + 1), squared, h, acf[static_cast<size_t>(h)],
                       std::abs(acf[static_cast<size_t>(h)]) > band});
    }
  }
  return out;
}

}  // namespace spvar
