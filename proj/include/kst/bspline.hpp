#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace kst {

/// Clamped uniform B-spline basis of a given degree with `size` functions on [0,1].
class BSplineBasis {
 public:
  BSplineBasis(int size, int degree);

  int size() const { return size_; }
  int degree() const { return degree_; }
  std::span<const double> knots() const { return knots_; }

  /// Index of the first nonzero function at x.
  int span_of(double x) const;
  /// The degree+1 nonzero values (derivative order `deriv`) at x; returns span_of(x).
  int nonzero(double x, int deriv, std::span<double> out) const;

  /// rows = points, cols = basis functions.
  Eigen::MatrixXd collocation(std::span<const double> xs) const;
  /// Exact Gram matrix of the `deriv`-th derivatives.
  Eigen::MatrixXd gram(int deriv) const;

 private:
  int size_;
  int degree_;
  std::vector<double> knots_;
};

/// Gauss-Legendre nodes and weights on [-1,1].
void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace kst
