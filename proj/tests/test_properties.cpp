#include "spvar/bootstrap.hpp"
#include "spvar/diagnostics.hpp"
#include "spvar/estimation.hpp"
#include "spvar/identification.hpp"
#include "spvar/restrictions.hpp"
#include "spvar/simulation.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace spvar;
using spvar::testing::max_abs;

namespace {

EntryRule random_rule(Rng& rng) {
  switch (uniform_int(rng, 0, 5)) {
    case 0: return EntryRule::constant();
    case 1: return EntryRule::zero();
    case 2: return EntryRule::fixed(std::normal_distribution<double>(0.0, 0.3)(rng));
    default: return EntryRule::seasonal();
  }
}

/// Random entry codes; intercepts stay free so the regression never degenerates.
RestrictionPattern random_pattern(Rng& rng, const PvarSpec& spec) {
  RestrictionPattern pattern(spec, EntryRule::seasonal());
  const int m = spec.num_vars;
  for (int s = 1; s <= spec.num_seasons; ++s)
    for (int i = 1; i <= spec.order(s); ++i)
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) pattern.coeff(s, i, r, c) = random_rule(rng);
  return pattern;
}

TimeSeriesPanel noisy_panel(const PvarParams& p, int cycles, Rng& rng) {
  const int m = p.spec.num_vars;
  const std::vector<Matrix> eye(static_cast<size_t>(p.spec.num_seasons), Matrix::Identity(m, m));
  const Matrix pre = spvar::testing::random_matrix(rng, std::max(p.spec.presample_rows(), 1), m);
  return simulate_spvar(p, eye, spvar::testing::random_matrix(rng, cycles * p.spec.num_seasons, m), pre);
}

Matrix permutation(Rng& rng, int m) {
  std::vector<int> order(static_cast<size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Matrix p = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) p(i, order[static_cast<size_t>(i)]) = 1.0;
  return p;
}

}  // namespace

TEST_CASE("property: restricted fits honour every entry code") {
  Rng rng(101);
  for (int rep = 0; rep < 40; ++rep) {
    const auto p = spvar::testing::random_instance(rng, 0.8);
    const auto& spec = p.spec;
    const auto pattern = random_pattern(rng, spec);
    const auto restr = build_restrictions(pattern);
    const auto panel = noisy_panel(p, 40 + 10 * spec.num_vars * spec.max_order(), rng);
    const auto design = build_design(panel, spec);
    const auto fit = fit_constrained(design, restr, {{SigmaDivisor::df_corrected, true}, 1e12});
    const BetaLayout& layout = pattern.layout();

    CHECK(max_abs(fit.beta - (restr.r_matrix * fit.gamma + restr.r_vector)) == 0.0);
    CHECK(max_abs(vectorize(fit.params) - fit.beta) == 0.0);
    for (int idx = 0; idx < layout.size(); ++idx) {
      const EntryRule& rule = pattern.rules()[static_cast<size_t>(idx)];
      if (rule.code == EntryCode::zero) CHECK(fit.beta(idx) == 0.0);
      if (rule.code == EntryCode::fixed) CHECK(fit.beta(idx) == rule.value);
    }
    for (int s = 1; s <= spec.num_seasons; ++s)
      for (int i = 1; i <= spec.order(s); ++i)
        for (int r = 0; r < spec.num_vars; ++r)
          for (int c = 0; c < spec.num_vars; ++c)
            if (pattern.rules()[static_cast<size_t>(layout.coeff_index(s, i, r, c))].code == EntryCode::constant)
              for (int s2 = 1; s2 <= spec.num_seasons; ++s2)
                if (i <= spec.order(s2) &&
                    pattern.rules()[static_cast<size_t>(layout.coeff_index(s2, i, r, c))].code == EntryCode::constant)
                  CHECK(fit.beta(layout.coeff_index(s2, i, r, c)) == fit.beta(layout.coeff_index(s, i, r, c)));

    const Matrix e = fit.residuals.transpose();
    const Vector score = restr.r_matrix.transpose() * (e * design.x.transpose()).reshaped();
    CHECK(max_abs(score) < 1e-8 * std::max(1.0, max_abs(design.x) * max_abs(e) * panel.length()));

    for (const auto& sig : fit.params.sigma) {
      CHECK(max_abs(sig - sig.transpose()) == 0.0);
      CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(sig).eigenvalues().minCoeff() >= -1e-12);
    }
  }
}

TEST_CASE("property: vectorize and unvectorize are inverse") {
  Rng rng(102);
  for (int rep = 0; rep < 50; ++rep) {
    const auto p = spvar::testing::random_instance(rng);
    const Vector beta = vectorize(p);
    CHECK(beta.size() == BetaLayout(p.spec).size());
    CHECK(max_abs(vectorize(unvectorize(beta, p.spec)) - beta) == 0.0);
  }
}

TEST_CASE("property: Cholesky reconstruction survives variable permutations") {
  Rng rng(103);
  for (int rep = 0; rep < 50; ++rep) {
    const int m = static_cast<int>(uniform_int(rng, 1, 5));
    const Matrix sigma = spvar::testing::random_spd(rng, m);
    const Matrix P = permutation(rng, m);
    const Matrix permuted = P * sigma * P.transpose();
    const Matrix h = identify_cholesky({permuted})[0];
    CHECK(max_abs(h * h.transpose() - permuted) < 1e-10 * std::max(1.0, max_abs(sigma)));
    CHECK(max_abs(h.triangularView<Eigen::StrictlyUpper>().toDenseMatrix()) == 0.0);
    CHECK(h.diagonal().minCoeff() > 0.0);
    const Matrix back = P.transpose() * h;
    CHECK(max_abs(back * back.transpose() - sigma) < 1e-10 * std::max(1.0, max_abs(sigma)));
  }
}

TEST_CASE("property: short and long run identification factors the covariance") {
  Rng rng(104);
  int checked = 0;
  for (int rep = 0; rep < 30; ++rep) {
    auto p = spvar::testing::random_stationary(rng, PvarSpec::uniform(static_cast<int>(uniform_int(rng, 1, 4)), 2, 1), 0.8);
    for (auto& s : p.sigma) s = spvar::testing::random_spd(rng, 2);
    const auto scheme = IdentScheme::short_long({}, {{1, 2}});
    const auto h0 = identify_short_long(p, scheme);
    const auto c = longrun_cumulative(p);
    for (int s = 1; s <= p.spec.num_seasons; ++s) {
      const Matrix& h = h0[static_cast<size_t>(s - 1)];
      CHECK(max_abs(h * h.transpose() - p.cov(s)) < 1e-10 * std::max(1.0, max_abs(p.cov(s))));
      CHECK(std::abs((c[static_cast<size_t>(s - 1)] * h)(0, 1)) < 1e-8);
      CHECK(h.diagonal().minCoeff() >= 0.0);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("property: seasonal demeaning is idempotent and linear") {
  Rng rng(105);
  for (int rep = 0; rep < 30; ++rep) {
    const int S = static_cast<int>(uniform_int(rng, 1, 12));
    const int N = static_cast<int>(uniform_int(rng, 1, 8));
    const int m = static_cast<int>(uniform_int(rng, 1, 3));
    const Matrix x = spvar::testing::random_matrix(rng, S * N, m, 3.0);
    const Matrix y = spvar::testing::random_matrix(rng, S * N, m, 3.0);
    const double a = std::normal_distribution<double>()(rng);
    const Matrix dx = seasonal_demean(x, S);
    CHECK(max_abs(seasonal_demean(dx, S) - dx) < 1e-12);
    CHECK(max_abs(seasonal_demean(a * x + y, S) - (a * dx + seasonal_demean(y, S))) < 1e-11);
  }
}

TEST_CASE("property: empirical quantiles are order statistics") {
  Rng rng(106);
  for (int rep = 0; rep < 200; ++rep) {
    const int L = static_cast<int>(uniform_int(rng, 1, 60));
    std::vector<double> d(static_cast<size_t>(L));
    for (auto& v : d) v = std::normal_distribution<double>()(rng);
    std::sort(d.begin(), d.end());
    const double q = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double v = empirical_quantile(d, q);
    const auto pos = std::find(d.begin(), d.end(), v) - d.begin();
    REQUIRE(pos < L);
    const long long expect = std::clamp<long long>(static_cast<long long>(std::ceil(q * L - 1e-9)), 1, L);
    CHECK(pos + 1 == expect);
    CHECK(empirical_quantile(d, q) <= empirical_quantile(d, std::min(1.0, q + 0.1)));
  }
}

TEST_CASE("property: seasonal resamples keep seasons for arbitrary shapes") {
  Rng rng(107);
  for (int rep = 0; rep < 300; ++rep) {
    const int S = static_cast<int>(uniform_int(rng, 1, 12));
    const int N = static_cast<int>(uniform_int(rng, 1, 10));
    const int T = S * N;
    if (T < 2) continue;
    const int b = static_cast<int>(uniform_int(rng, 1, T - 1));
    const auto idx = seasonal_source_indices(T, S, b, rng);
    REQUIRE(static_cast<int>(idx.size()) == T);
    for (int tau = 1; tau <= T; ++tau) {
      const int src = idx[static_cast<size_t>(tau - 1)];
      CHECK((src - tau) % S == 0);
      CHECK(src >= 1);
      CHECK(src <= T);
      if ((tau - 1) % b != 0) CHECK(src == idx[static_cast<size_t>(tau - 2)] + 1);
    }
  }
}

TEST_CASE("property: structural responses are reduced responses times the impact matrix") {
  Rng rng(108);
  for (int rep = 0; rep < 20; ++rep) {
    auto p = spvar::testing::random_instance(rng, 0.9);
    for (auto& s : p.sigma) s = spvar::testing::random_spd(rng, p.spec.num_vars);
    const auto h0 = identify_cholesky(p.sigma);
    const auto ir = impulse_responses(p, 10);
    const auto sirf = structural_irf(ir, h0);
    for (int s = 1; s <= p.spec.num_seasons; ++s)
      for (int k = 0; k <= 10; ++k)
        CHECK(max_abs(sirf.at(s, k) - ir.at(s, k) * h0[static_cast<size_t>(s - 1)]) < 1e-12);
  }
}

TEST_CASE("property: coverage error shrinks from N=25 to N=100") {
  Rng rng(109);
  CoverageConfig c;
  c.dgp = PvarParams::zeros(PvarSpec::uniform(4, 2, 1));
  for (int s = 1; s <= 4; ++s) {
    c.dgp.coeff(s, 1) << 0.5, 0.1, 0.1 * s, 0.3;
    c.dgp.cov(s) << 1.0, 0.3, 0.3, 1.0;
  }
  c.scheme = IdentScheme::cholesky();
  c.h0 = identify_impact(c.dgp, c.scheme);
  c.restrictions = build_restrictions(unrestricted_pattern(c.dgp.spec));
  c.bootstrap.replicates = 99;
  c.bootstrap.block_len = 1;
  c.bootstrap.method = BootstrapMethod::seasonal_iid;
  c.bootstrap.seed = 2024;
  c.horizons = {0, 4};
  c.mc_reps = 100;
  auto mad = [&](int cycles) {
    CoverageConfig run = c;
    run.cycles = cycles;
    const auto table = coverage_experiment(run);
    double acc = 0.0;
    for (const auto& cell : table.cells) acc += std::abs(cell.coverage - 0.68);
    return acc / static_cast<double>(table.cells.size());
  };
  const double small = mad(25);
  const double large = mad(100);
  MESSAGE("mean |coverage - 0.68|: N=25 ", small, ", N=100 ", large);
  CHECK(large <= small);
}
