#pragma once

// Discrete least-squares fitting in an LKB basis, greedy pivotal-row
// selection, and log-log rate estimation.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kst/smoother.hpp"

namespace kst {

double rmse(std::span<const double> values, std::span<const double> references);

/// Columns whose largest magnitude reaches rel_tol * max|A|.
std::vector<int> prune_columns(const Eigen::MatrixXd& A, double rel_tol = 1e-8);

/// LKB values on a product grid: row = grid point (C order), column = member j.
struct DesignMatrix {
  int per_axis = 0;
  Eigen::MatrixXd entries;
  std::vector<int> kept;
};

DesignMatrix make_design(const LKBSet& set, int per_axis, double prune_rel_tol = 1e-8);

struct PivotSet {
  std::vector<int> rows;
  std::vector<double> gains;  // residual norm of each selected row when picked
};

struct FitResult {
  std::vector<double> coefficients;  // dn entries, zero on pruned columns
  double rmse_P = 0.0;
  double rmse_PP = 0.0;
  bool rank_deficient = false;
  std::uint64_t basis_hash = 0;  // LKBSet::hash() of the basis used
  std::vector<int> pivots;       // rows used; empty for a full-grid fit
};

/// Least squares on the kept columns via complete orthogonal decomposition
/// (minimum-norm when rank deficient). Sets coefficients and rmse_P.
FitResult dls_fit(const DesignMatrix& design, std::span<const double> f, std::uint64_t basis_hash = 0);

/// Greedy maximal-volume row selection on the kept columns.
PivotSet pivotal_points(const DesignMatrix& design, double gain_ratio = 1e-10);

/// Least squares restricted to pivot rows; rmse_P is measured on the full design grid.
FitResult pivotal_fit(const DesignMatrix& design, const PivotSet& pivots, std::span<const double> f,
                      std::uint64_t basis_hash = 0);

/// sum_j c_j LKB_{n,j} on the per_axis^d product grid.
std::vector<double> combination_on_grid(const LKBSet& set, std::span<const double> coefficients,
                                        std::span<const double> axis);

/// Sets fit.rmse_PP against f sampled on the eval_per_axis^d grid.
void evaluate_fit(const LKBSet& set, FitResult& fit, int eval_per_axis, std::span<const double> f_eval);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares line through (log n, log rmse).
RateFit rate_estimate(std::span<const double> n, std::span<const double> err);

struct ExponentEstimate {
  double beta = 0.0;
  bool not_a_rate = false;  // all errors at rounding level; no decay to measure
};

ExponentEstimate holder_exponent_estimate(std::span<const double> n, std::span<const double> err,
                                          double floor = 1e-12);
/// Runs `error_at(n)` for each n and regresses.
ExponentEstimate holder_exponent_estimate(const std::function<double(int)>& error_at, std::span<const int> ns,
                                          double floor = 1e-12);

}  // namespace kst
