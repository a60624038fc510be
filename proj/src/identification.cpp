#include "spvar/identification.hpp"

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace spvar {

void IdentScheme::validate(int num_vars) const {
  const int m = num_vars;
  auto check_entries = [m](const std::vector<ZeroEntry>& zeros, const char* what) {
    std::set<ZeroEntry> seen;
    for (const auto& [i, j] : zeros) {
      if (i < 1 || i > m || j < 1 || j > m)
        fail(ErrorCategory::config, std::string(what) + " zero (" + std::to_string(i) + "," + std::to_string(j) +
                                        ") lies outside 1.." + std::to_string(m));
      if (!seen.insert({i, j}).second)
        fail(ErrorCategory::config, std::string(what) + " zero (" + std::to_string(i) + "," + std::to_string(j) +
                                        ") listed twice");
    }
  };
  check_entries(short_zeros, "short-run");
  check_entries(long_zeros, "long-run");
  if (kind == IdentKind::short_long) {
    const auto count = short_zeros.size() + long_zeros.size();
    const auto needed = static_cast<size_t>(m * (m - 1) / 2);
    if (count != needed)
      fail(ErrorCategory::config, "exact identification needs " + std::to_string(needed) + " zero restrictions, got " +
                                      std::to_string(count));
  }
  if (impact_normalization) {
    const auto& n = *impact_normalization;
    if (n.variable < 1 || n.variable > m || n.shock < 1 || n.shock > m)
      fail(ErrorCategory::config, "impact normalization refers to a variable or shock outside 1..m");
  }
}

namespace {

Matrix checked_cholesky(const Matrix& sigma, int season) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  if (!(top > 0.0) || !(ev.minCoeff() > 1e-12 * top))
    fail(ErrorCategory::numerical, "covariance of season " + std::to_string(season) + " is not positive definite");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    fail(ErrorCategory::numerical, "Cholesky factorization failed in season " + std::to_string(season));
  return llt.matrixL();
}

void fix_signs(Matrix& h0) {
  for (Eigen::Index j = 0; j < h0.cols(); ++j)
    if (h0(j, j) < 0.0) h0.col(j) *= -1.0;
}

// Unit-norm constraint rows per column: q_j must be orthogonal to each.
std::vector<std::vector<Vector>> constraint_rows(const Matrix& chol, const Matrix& longrun, const IdentScheme& scheme) {
  const auto m = chol.rows();
  std::vector<std::vector<Vector>> rows(static_cast<size_t>(m));
  const Matrix lr = longrun * chol;
  auto push = [&rows](Eigen::Index col, Vector v) {
    const double n = v.norm();
    if (n > 0.0) v /= n;
    rows[static_cast<size_t>(col)].push_back(std::move(v));
  };
  for (const auto& [i, j] : scheme.short_zeros) push(j - 1, chol.row(i - 1).transpose());
  for (const auto& [i, j] : scheme.long_zeros) push(j - 1, lr.row(i - 1).transpose());
  return rows;
}

double violation(const std::vector<std::vector<Vector>>& rows, const Matrix& q) {
  double worst = 0.0;
  for (size_t j = 0; j < rows.size(); ++j)
    for (const auto& a : rows[j]) worst = std::max(worst, std::abs(a.dot(q.col(static_cast<Eigen::Index>(j)))));
  return worst;
}

Matrix givens_rotation(const Vector& angles, Eigen::Index m) {
  Matrix q = Matrix::Identity(m, m);
  Eigen::Index k = 0;
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = a + 1; b < m; ++b) {
      Eigen::JacobiRotation<double> g(std::cos(angles(k)), std::sin(angles(k)));
      q.applyOnTheRight(a, b, g);
      ++k;
    }
  return q;
}

struct ViolationFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Vector;
  using ValueType = Vector;
  using JacobianType = Matrix;

  const std::vector<std::vector<Vector>>* rows = nullptr;
  Eigen::Index m = 0;
  Eigen::Index n_inputs = 0;
  Eigen::Index n_values = 0;

  Eigen::Index inputs() const { return n_inputs; }
  Eigen::Index values() const { return n_values; }

  int operator()(const Vector& angles, Vector& out) const {
    const Matrix q = givens_rotation(angles, m);
    Eigen::Index k = 0;
    for (size_t j = 0; j < rows->size(); ++j)
      for (const auto& a : (*rows)[j]) out(k++) = a.dot(q.col(static_cast<Eigen::Index>(j)));
    return 0;
  }
};

}  // namespace

std::vector<Matrix> identify_cholesky(const std::vector<Matrix>& sigma) {
  std::vector<Matrix> out;
  for (size_t s = 0; s < sigma.size(); ++s) out.push_back(checked_cholesky(sigma[s], static_cast<int>(s + 1)));
  return out;
}

RotationSolution solve_rotation(const Matrix& sigma, const Matrix& longrun, const IdentScheme& scheme) {
  const auto m = sigma.rows();
  scheme.validate(static_cast<int>(m));
  const Matrix chol = checked_cholesky(sigma, 1);
  RotationSolution sol;
  if (m == 1) {
    sol.h0 = chol;
    sol.constructive = true;
    return sol;
  }
  const auto rows = constraint_rows(chol, longrun, scheme);

  // Most constrained column first; a staircase has counts m-1, m-2, ..., 0.
  std::vector<Eigen::Index> order(static_cast<size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&rows](Eigen::Index a, Eigen::Index b) {
    return rows[static_cast<size_t>(a)].size() > rows[static_cast<size_t>(b)].size();
  });
  bool staircase = true;
  for (size_t k = 0; k < order.size(); ++k)
    if (rows[static_cast<size_t>(order[k])].size() > static_cast<size_t>(m) - 1 - k) staircase = false;

  Matrix q = Matrix::Identity(m, m);
  if (staircase) {
    std::vector<Vector> chosen;
    for (size_t k = 0; k < order.size(); ++k) {
      const auto col = order[k];
      const auto& own = rows[static_cast<size_t>(col)];
      Matrix a(static_cast<Eigen::Index>(own.size() + chosen.size()), m);
      Eigen::Index r = 0;
      for (const auto& v : own) a.row(r++) = v.transpose();
      for (const auto& v : chosen) a.row(r++) = v.transpose();
      Vector next;
      if (a.rows() == 0) {
        next = Vector::Unit(m, col);
      } else {
        Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
        next = svd.matrixV().col(m - 1);
      }
      q.col(col) = next;
      chosen.push_back(next);
    }
    sol.constructive = true;
  } else {
    ViolationFunctor f;
    f.rows = &rows;
    f.m = m;
    f.n_inputs = m * (m - 1) / 2;
    f.n_values = static_cast<Eigen::Index>(scheme.short_zeros.size() + scheme.long_zeros.size());
    double best = INFINITY;
    Matrix best_q = q;
    for (int start = 0; start < 8; ++start) {
      Vector angles(f.n_inputs);
      for (Eigen::Index k = 0; k < angles.size(); ++k)
        angles(k) = -M_PI + (2.0 * M_PI) * ((start + 0.5) / 8.0) + 0.37 * static_cast<double>(k);
      Eigen::NumericalDiff<ViolationFunctor, Eigen::Central> numdiff(f);
      Eigen::LevenbergMarquardt<decltype(numdiff)> lm(numdiff);
      lm.parameters.ftol = 1e-16;
      lm.parameters.xtol = 1e-16;
      lm.parameters.maxfev = 4000;
      lm.minimize(angles);
      const Matrix candidate = givens_rotation(angles, m);
      const double v = violation(rows, candidate);
      if (v < best) {
        best = v;
        best_q = candidate;
      }
      if (best < 1e-12) break;
    }
    q = best_q;
  }
  sol.residual = violation(rows, q);
  if (sol.residual > 1e-8) {
    std::ostringstream os;
    os << "zero restrictions could not be satisfied (achieved residual " << sol.residual << ")";
    fail(ErrorCategory::numerical, os.str());
  }
  sol.h0 = chol * q;
  fix_signs(sol.h0);
  return sol;
}

std::vector<Matrix> identify_short_long(const PvarParams& params, const IdentScheme& scheme) {
  scheme.validate(params.spec.num_vars);
  const auto longrun = longrun_cumulative(params);
  std::vector<Matrix> out;
  for (int s = 1; s <= params.spec.num_seasons; ++s) {
    try {
      out.push_back(solve_rotation(params.cov(s), longrun[static_cast<size_t>(s - 1)], scheme).h0);
    } catch (const Error& e) {
      fail(e.category(), "season " + std::to_string(s) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Matrix> identify_impact(const PvarParams& params, const IdentScheme& scheme) {
  scheme.validate(params.spec.num_vars);
  if (scheme.kind == IdentKind::cholesky) return identify_cholesky(params.sigma);
  return identify_short_long(params, scheme);
}

StructuralFit identify(const FitResult& fit, const IdentScheme& scheme) {
  const PvarSpec& spec = fit.params.spec;
  const int S = spec.num_seasons;
  StructuralFit out;
  out.scheme = scheme;
  out.h0 = identify_impact(fit.params, scheme);
  if (scheme.kind == IdentKind::short_long) {
    const auto c = longrun_cumulative(fit.params);
    for (int s = 0; s < S; ++s) out.longrun.push_back(c[static_cast<size_t>(s)] * out.h0[static_cast<size_t>(s)]);
  }
  std::vector<Eigen::PartialPivLU<Matrix>> lu;
  for (const auto& h : out.h0) lu.emplace_back(h);
  out.shocks.resize(fit.residuals.rows(), fit.residuals.cols());
  for (Eigen::Index t = 0; t < fit.residuals.rows(); ++t) {
    const int s = wrap_season(t + 1, S);
    out.shocks.row(t) = lu[static_cast<size_t>(s - 1)].solve(fit.residuals.row(t).transpose()).transpose();
  }
  return out;
}

IrfSet structural_irf(const IrfSet& reduced, const std::vector<Matrix>& h0,
                      const std::optional<ImpactNormalization>& normalization) {
  const PvarSpec& spec = reduced.spec();
  const int S = spec.num_seasons;
  if (static_cast<int>(h0.size()) != S) fail(ErrorCategory::precondition, "need one impact matrix per season");
  IrfSet out(spec, reduced.horizon(), IrfKind::structural_ir);
  for (int s = 1; s <= S; ++s) {
    Matrix impact = h0[static_cast<size_t>(s - 1)];
    if (normalization) {
      const auto& n = *normalization;
      const double base = impact(n.variable - 1, n.shock - 1);
      if (std::abs(base) < 1e-12)
        fail(ErrorCategory::numerical, "impact too small to normalize in season " + std::to_string(s));
      impact.col(n.shock - 1) *= n.size / base;
    }
    for (int k = 0; k <= reduced.horizon(); ++k) out.at(s, k).noalias() = reduced.at(s, k) * impact;
    if (normalization) out.at(s, 0)(normalization->variable - 1, normalization->shock - 1) = normalization->size;
  }
  return out;
}

Matrix stack_structural_irf(const IrfSet& structural, int h) {
  if (structural.kind() != IrfKind::structural_ir)
    fail(ErrorCategory::precondition, "stack_structural_irf expects structural impulse responses");
  return stack_var_irf(structural, h);
}

}  // namespace spvar
