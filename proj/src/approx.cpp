#include "kst/approx.hpp"

#include <cmath>
#include <cstdio>

#include "kst/corpus.hpp"
#include "kst/error.hpp"
#include "kst/simd.hpp"
#include "kst/util.hpp"

namespace kst {

double rmse(std::span<const double> values, std::span<const double> references) {
  require(values.size() == references.size(), ErrorKind::Shape, "rmse inputs differ in length");
  require(!values.empty(), ErrorKind::Shape, "rmse of an empty vector");
  return std::sqrt(simd::sum_sq_diff(values, references) / static_cast<double>(values.size()));
}

std::vector<int> prune_columns(const Eigen::MatrixXd& A, double rel_tol) {
  require(A.size() > 0, ErrorKind::EmptyBasis, "empty design matrix");
  const double tol = rel_tol * A.cwiseAbs().maxCoeff();
  std::vector<int> kept;
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    if (A.col(j).cwiseAbs().maxCoeff() >= tol && A.col(j).cwiseAbs().maxCoeff() > 0.0) kept.push_back(static_cast<int>(j));
  if (kept.empty()) fail(ErrorKind::EmptyBasis, "all design columns pruned");
  return kept;
}

DesignMatrix make_design(const LKBSet& set, int per_axis, double prune_rel_tol) {
  const auto axis = grid_axis(per_axis);
  const auto basis = set.basis();
  DesignMatrix out;
  out.per_axis = per_axis;
  std::size_t rows = 1;
  for (int p = 0; p < set.d; ++p) rows *= static_cast<std::size_t>(per_axis);
  out.entries.resize(static_cast<Eigen::Index>(rows), set.count());
  parallel_for(static_cast<std::size_t>(set.count()), [&](std::size_t j) {
    const auto v = tensor_on_grid(basis, set.members[j], set.d, axis);
    out.entries.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  });
  out.kept = prune_columns(out.entries, prune_rel_tol);
  return out;
}

namespace {

Eigen::MatrixXd kept_columns(const DesignMatrix& design, std::span<const int> rows) {
  const auto k = static_cast<Eigen::Index>(design.kept.size());
  Eigen::MatrixXd A(rows.empty() ? design.entries.rows() : static_cast<Eigen::Index>(rows.size()), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto col = design.entries.col(design.kept[static_cast<std::size_t>(c)]);
    if (rows.empty()) {
      A.col(c) = col;
    } else {
      for (std::size_t r = 0; r < rows.size(); ++r) A(static_cast<Eigen::Index>(r), c) = col(rows[r]);
    }
  }
  return A;
}

FitResult solve_subset(const DesignMatrix& design, std::span<const int> rows, std::span<const double> f,
                       std::uint64_t basis_hash) {
  require(static_cast<Eigen::Index>(f.size()) == design.entries.rows(), ErrorKind::Shape,
          "sample count does not match the design grid");
  const Eigen::MatrixXd A = kept_columns(design, rows);
  Eigen::VectorXd b(A.rows());
  for (Eigen::Index r = 0; r < A.rows(); ++r)
    b(r) = f[rows.empty() ? static_cast<std::size_t>(r) : static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  const Eigen::VectorXd c = cod.solve(b);
  if (!c.allFinite()) fail(ErrorKind::Numerical, "least-squares solution is not finite");
  FitResult fit;
  fit.basis_hash = basis_hash;
  fit.rank_deficient = cod.rank() < A.cols();
  if (fit.rank_deficient)
    std::fprintf(stderr, "warning: design has rank %ld of %ld columns; using the minimum-norm solution\n",
                 static_cast<long>(cod.rank()), static_cast<long>(A.cols()));
  fit.coefficients.assign(static_cast<std::size_t>(design.entries.cols()), 0.0);
  for (std::size_t i = 0; i < design.kept.size(); ++i)
    fit.coefficients[static_cast<std::size_t>(design.kept[i])] = c(static_cast<Eigen::Index>(i));
  const Eigen::VectorXd fitted = design.entries * Eigen::Map<const Eigen::VectorXd>(fit.coefficients.data(), design.entries.cols());
  fit.rmse_P = rmse(std::span<const double>(fitted.data(), static_cast<std::size_t>(fitted.size())), f);
  fit.pivots.assign(rows.begin(), rows.end());
  return fit;
}

}  // namespace

FitResult dls_fit(const DesignMatrix& design, std::span<const double> f, std::uint64_t basis_hash) {
  require(design.entries.rows() >= static_cast<Eigen::Index>(design.kept.size()), ErrorKind::Shape,
          "fewer samples than kept columns");
  return solve_subset(design, {}, f, basis_hash);
}

PivotSet pivotal_points(const DesignMatrix& design, double gain_ratio) {
  require(!design.kept.empty() && design.entries.rows() > 0, ErrorKind::EmptyBasis, "empty design matrix");
  const auto& K = simd::active();
  const std::size_t rows = static_cast<std::size_t>(design.entries.rows());
  const std::size_t cols = design.kept.size();
  // residual rows, contiguous per row
  std::vector<double> R(rows * cols);
  for (std::size_t c = 0; c < cols; ++c) {
    const auto col = design.entries.col(design.kept[c]);
    for (std::size_t r = 0; r < rows; ++r) R[r * cols + c] = col(static_cast<Eigen::Index>(r));
  }
  std::vector<double> norms(rows);
  std::vector<char> taken(rows, 0);
  std::vector<double> v(cols);
  PivotSet out;
  double first_gain = 0.0;
  while (out.rows.size() < cols) {
    std::size_t best = rows;
    double best_sq = -1.0;
    for (std::size_t r = 0; r < rows; ++r) {
      if (taken[r]) continue;
      const double* row = &R[r * cols];
      norms[r] = K.dot(row, row, cols);
      if (norms[r] > best_sq) {
        best_sq = norms[r];
        best = r;
      }
    }
    if (best == rows) break;
    const double gain = std::sqrt(best_sq);
    if (out.rows.empty()) first_gain = gain;
    if (!(gain > 0.0) || gain < gain_ratio * first_gain) break;
    out.rows.push_back(static_cast<int>(best));
    out.gains.push_back(gain);
    taken[best] = 1;
    for (std::size_t c = 0; c < cols; ++c) v[c] = R[best * cols + c] / gain;
    for (std::size_t r = 0; r < rows; ++r) {
      if (taken[r]) continue;
      double* row = &R[r * cols];
      const double proj = K.dot(row, v.data(), cols);
      if (proj != 0.0) K.axpy(-proj, v.data(), row, cols);
    }
  }
  return out;
}

FitResult pivotal_fit(const DesignMatrix& design, const PivotSet& pivots, std::span<const double> f,
                      std::uint64_t basis_hash) {
  require(!pivots.rows.empty(), ErrorKind::EmptyBasis, "pivotal fit needs at least one pivot");
  if (pivots.rows.size() < design.kept.size())
    std::fprintf(stderr, "warning: %zu pivots for %zu columns; using the minimum-norm solution\n", pivots.rows.size(),
                 design.kept.size());
  return solve_subset(design, pivots.rows, f, basis_hash);
}

std::vector<double> combination_on_grid(const LKBSet& set, std::span<const double> coefficients,
                                        std::span<const double> axis) {
  require(static_cast<int>(coefficients.size()) == set.count(), ErrorKind::Shape, "need one coefficient per member");
  TensorCoeffs total;
  total.shape = set.members.front().shape;
  total.coeffs.assign(set.members.front().size(), 0.0);
  for (std::size_t j = 0; j < coefficients.size(); ++j)
    if (coefficients[j] != 0.0) simd::axpy(coefficients[j], set.members[j].coeffs, total.coeffs);
  return tensor_on_grid(set.basis(), total, set.d, axis);
}

void evaluate_fit(const LKBSet& set, FitResult& fit, int eval_per_axis, std::span<const double> f_eval) {
  if (fit.basis_hash != 0 && fit.basis_hash != set.hash())
    fail(ErrorKind::Incompatible, "fit was produced with a different LKB basis");
  const auto values = combination_on_grid(set, fit.coefficients, grid_axis(eval_per_axis));
  fit.rmse_PP = rmse(values, f_eval);
}

RateFit rate_estimate(std::span<const double> n, std::span<const double> err) {
  require(n.size() == err.size(), ErrorKind::Shape, "rate inputs differ in length");
  require(n.size() >= 2, ErrorKind::Domain, "rate estimate needs at least two points");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    require(n[i] > 0.0 && err[i] > 0.0 && std::isfinite(err[i]), ErrorKind::Domain, "rate inputs must be positive");
    sx += std::log(n[i]);
    sy += std::log(err[i]);
  }
  const double mx = sx / n.size(), my = sy / n.size();
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double dx = std::log(n[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(err[i]) - my);
  }
  require(sxx > 0.0, ErrorKind::Domain, "rate estimate needs distinct n values");
  RateFit r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  return r;
}

ExponentEstimate holder_exponent_estimate(std::span<const double> n, std::span<const double> err, double floor) {
  require(n.size() >= 3, ErrorKind::Domain, "exponent estimate needs at least three points");
  ExponentEstimate out;
  if (std::all_of(err.begin(), err.end(), [&](double e) { return e <= floor; })) {
    out.not_a_rate = true;
    return out;
  }
  out.beta = -rate_estimate(n, err).slope;
  return out;
}

ExponentEstimate holder_exponent_estimate(const std::function<double(int)>& error_at, std::span<const int> ns,
                                          double floor) {
  std::vector<double> n, e;
  for (int v : ns) {
    n.push_back(v);
    e.push_back(error_at(v));
  }
  return holder_exponent_estimate(n, e, floor);
}

}  // namespace kst
