#ifndef SPVAR_TESTS_SUPPORT_HPP
#define SPVAR_TESTS_SUPPORT_HPP

#include "spvar/estimation.hpp"
#include "spvar/model.hpp"
#include "spvar/panel.hpp"
#include "spvar/restrictions.hpp"
#include "spvar/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace spvar::testing {

inline double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

inline Matrix random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = n(rng);
  return a;
}

inline Matrix random_spd(Rng& rng, int m) {
  const Matrix b = random_matrix(rng, m, m);
  return b * b.transpose() + 0.5 * Matrix::Identity(m, m);
}

inline std::vector<int> random_orders(Rng& rng, int S, int max_p) {
  std::vector<int> orders;
  for (int s = 0; s < S; ++s) orders.push_back(static_cast<int>(uniform_int(rng, 0, max_p)));
  if (*std::max_element(orders.begin(), orders.end()) == 0) orders[0] = 1;
  return orders;
}

/// Random coefficients shrunk until the spectral radius is at most `max_rho`.
inline PvarParams random_stationary(Rng& rng, const PvarSpec& spec, double max_rho = 0.9) {
  PvarParams p = PvarParams::zeros(spec);
  for (int s = 1; s <= spec.num_seasons; ++s) {
    p.intercept(s) = random_matrix(rng, spec.num_vars, 1);
    for (int i = 1; i <= spec.order(s); ++i) p.coeff(s, i) = random_matrix(rng, spec.num_vars, spec.num_vars, 0.4);
    p.cov(s) = random_spd(rng, spec.num_vars);
  }
  while (stationarity_margin(p) > max_rho)
    for (auto& season : p.coeffs)
      for (auto& a : season) a *= 0.85;
  return p;
}

/// Draws one of the acceptance-suite shapes: S in {1,2,4,12}, m in {1,2,3}, mixed orders.
/// With per_period set, the bound applies to ρ^(1/S), the decay rate per observation.
inline PvarParams random_instance(Rng& rng, double max_rho = 0.9, bool per_period = false) {
  static const int kSeasons[] = {1, 2, 4, 12};
  const int S = kSeasons[uniform_int(rng, 0, 3)];
  const int m = static_cast<int>(uniform_int(rng, 1, 3));
  const int max_p = S == 12 ? 3 : 4;
  const double bound = per_period ? std::pow(max_rho, S) : max_rho;
  return random_stationary(rng, PvarSpec::make(S, m, random_orders(rng, S, max_p)), bound);
}

/// True when a noise-free path can identify every season's coefficients: each lag y_{t-j}
/// in season s's regressor window must depend on a value outside that window.
inline bool noise_free_identifiable(const PvarSpec& spec) {
  const int S = spec.num_seasons;
  for (int s = 1; s <= S; ++s)
    for (int j = 1; j <= spec.order(s); ++j)
      if (spec.order(wrap_season(s - j, S)) < std::max(1, spec.order(s) - j + 1)) return false;
  return true;
}

/// A random instance whose orders satisfy noise_free_identifiable.
inline PvarParams random_identifiable_instance(Rng& rng, double max_rho = 0.9) {
  for (;;) {
    PvarParams p = random_instance(rng, max_rho);
    if (noise_free_identifiable(p.spec)) return p;
  }
}

/// Response path of y to a unit innovation e_j dated at season s, by direct iteration of the model.
inline std::vector<Matrix> impulse_by_simulation(const PvarParams& p, int s, int horizon) {
  const int S = p.spec.num_seasons;
  const int m = p.spec.num_vars;
  const int pmax = p.spec.max_order();
  std::vector<Matrix> out(static_cast<size_t>(horizon + 1), Matrix::Zero(m, m));
  for (int j = 0; j < m; ++j) {
    // Absolute time index t0 sits in season s; earlier values are zero.
    const int t0 = S * (pmax + 1) + s;
    std::vector<Vector> y(static_cast<size_t>(t0 + horizon + 1), Vector::Zero(m));
    y[static_cast<size_t>(t0)](j) = 1.0;
    for (int t = t0 + 1; t <= t0 + horizon; ++t) {
      const int season = ((t - 1) % S) + 1;
      Vector v = Vector::Zero(m);
      for (int i = 1; i <= p.spec.order(season); ++i)
        v += p.coeffs[static_cast<size_t>(season - 1)][static_cast<size_t>(i - 1)] * y[static_cast<size_t>(t - i)];
      y[static_cast<size_t>(t)] = v;
    }
    for (int k = 0; k <= horizon; ++k) out[static_cast<size_t>(k)].col(j) = y[static_cast<size_t>(t0 + k)];
  }
  return out;
}

/// Stacked A0 and A_1..A_P assembled entry by entry from the model definition.
struct StackedOracle {
  Matrix a0;
  std::vector<Matrix> a;
};

inline StackedOracle stacked_oracle(const PvarParams& p) {
  const int S = p.spec.num_seasons;
  const int m = p.spec.num_vars;
  const int P = (p.spec.max_order() + S - 1) / S;
  auto coeff = [&](int season, int lag) -> Matrix {
    if (lag <= 0 || lag > p.spec.order(season)) return Matrix::Zero(m, m);
    return p.coeffs[static_cast<size_t>(season - 1)][static_cast<size_t>(lag - 1)];
  };
  StackedOracle o;
  o.a0 = Matrix::Identity(S * m, S * m);
  for (int r = 1; r <= S; ++r)
    for (int c = 1; c < r; ++c) o.a0.block((r - 1) * m, (c - 1) * m, m, m) = -coeff(r, r - c);
  for (int i = 1; i <= P; ++i) {
    Matrix ai = Matrix::Zero(S * m, S * m);
    for (int r = 1; r <= S; ++r)
      for (int c = 1; c <= S; ++c) ai.block((r - 1) * m, (c - 1) * m, m, m) = coeff(r, S * i + r - c);
    o.a.push_back(ai);
  }
  return o;
}

/// J C^h J' A0^{-1} with C the companion matrix of A0^{-1} A_i.
inline Matrix companion_power_irf(const PvarParams& p, int h) {
  const StackedOracle o = stacked_oracle(p);
  const int n = static_cast<int>(o.a0.rows());
  const Matrix a0_inv = o.a0.inverse();
  const int P = std::max<int>(1, static_cast<int>(o.a.size()));
  Matrix c = Matrix::Zero(n * P, n * P);
  for (size_t i = 0; i < o.a.size(); ++i) c.block(0, static_cast<Eigen::Index>(i) * n, n, n) = a0_inv * o.a[i];
  if (P > 1) c.bottomLeftCorner(n * (P - 1), n * (P - 1)).setIdentity();
  Matrix power = Matrix::Identity(n * P, n * P);
  for (int k = 0; k < h; ++k) power = power * c;
  return power.topLeftCorner(n, n) * a0_inv;
}

/// Raw series (including enough leading cycles for the consume policy) generated without noise.
inline Matrix noise_free_series(const PvarParams& p, int cycles, Rng& rng) {
  const int S = p.spec.num_seasons;
  const int m = p.spec.num_vars;
  const int lead = consumed_cycles(p.spec) * S;
  const int total = lead + cycles * S;
  const int pmax = std::max(1, p.spec.max_order());
  Matrix y = Matrix::Zero(total + pmax, m);
  y.topRows(pmax) = random_matrix(rng, pmax, m);
  for (int r = pmax; r < total + pmax; ++r) {
    // Row r corresponds to t = r - pmax - lead + 1, season wrap(t).
    const int t = r - pmax - lead + 1;
    const int season = wrap_season(t, S);
    Vector v = p.intercept(season);
    for (int i = 1; i <= p.spec.order(season); ++i) v += p.coeffs[static_cast<size_t>(season - 1)][static_cast<size_t>(i - 1)] * y.row(r - i).transpose();
    y.row(r) = v.transpose();
  }
  return y.bottomRows(total);
}

}  // namespace spvar::testing

#endif  // SPVAR_TESTS_SUPPORT_HPP
