#include "kst/bspline.hpp"

#include <cmath>
#include <numbers>

#include "kst/error.hpp"

namespace kst {

BSplineBasis::BSplineBasis(int size, int degree) : size_(size), degree_(degree) {
  require(degree >= 1, ErrorKind::Config, "spline degree must be >= 1");
  require(size >= degree + 1, ErrorKind::Config, "spline basis needs at least degree+1 functions");
  const int pieces = size - degree;
  knots_.assign(static_cast<std::size_t>(degree), 0.0);
  for (int i = 0; i <= pieces; ++i) knots_.push_back(static_cast<double>(i) / pieces);
  knots_.insert(knots_.end(), static_cast<std::size_t>(degree), 1.0);
}

int BSplineBasis::span_of(double x) const {
  require(x >= 0.0 && x <= 1.0, ErrorKind::Domain, "spline argument outside [0,1]");
  const int pieces = size_ - degree_;
  const int piece = std::min(static_cast<int>(std::floor(x * pieces)), pieces - 1);
  // knots_[degree + piece] <= x < knots_[degree + piece + 1], first function = piece
  int s = piece;
  const auto k = [&](int i) { return knots_[static_cast<std::size_t>(i)]; };
  while (s > 0 && x < k(degree_ + s)) --s;
  while (s < pieces - 1 && x >= k(degree_ + s + 1)) ++s;
  return s;
}

// Derivatives of the nonzero basis functions (Piegl & Tiller, A2.3).
int BSplineBasis::nonzero(double x, int deriv, std::span<double> out) const {
  const int p = degree_;
  require(static_cast<int>(out.size()) == p + 1, ErrorKind::Shape, "need degree+1 output slots");
  require(deriv >= 0, ErrorKind::Domain, "derivative order must be >= 0");
  const int first = span_of(x);
  if (deriv > p) {
    std::fill(out.begin(), out.end(), 0.0);
    return first;
  }
  const int i = first + p;
  const auto U = [&](int idx) { return knots_[static_cast<std::size_t>(idx)]; };
  std::vector<std::vector<double>> ndu(static_cast<std::size_t>(p) + 1, std::vector<double>(static_cast<std::size_t>(p) + 1));
  std::vector<double> left(static_cast<std::size_t>(p) + 1), right(static_cast<std::size_t>(p) + 1);
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - U(i + 1 - j);
    right[j] = U(i + j) - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }
  if (deriv == 0) {
    for (int j = 0; j <= p; ++j) out[j] = ndu[j][p];
    return first;
  }
  std::vector<std::vector<double>> a(2, std::vector<double>(static_cast<std::size_t>(p) + 1));
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    double value = 0.0;
    for (int k = 1; k <= deriv; ++k) {
      double dsum = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        dsum = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        dsum += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        dsum += a[s2][k] * ndu[r][pk];
      }
      value = dsum;
      std::swap(s1, s2);
    }
    double factor = 1.0;
    for (int k = p; k > p - deriv; --k) factor *= k;
    out[r] = value * factor;
  }
  return first;
}

Eigen::MatrixXd BSplineBasis::collocation(std::span<const double> xs) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xs.size()), size_);
  std::vector<double> vals(static_cast<std::size_t>(degree_) + 1);
  for (std::size_t r = 0; r < xs.size(); ++r) {
    const int first = nonzero(xs[r], 0, vals);
    for (int j = 0; j <= degree_; ++j) m(static_cast<Eigen::Index>(r), first + j) = vals[static_cast<std::size_t>(j)];
  }
  return m;
}

Eigen::MatrixXd BSplineBasis::gram(int deriv) const {
  std::vector<double> nodes, weights;
  gauss_legendre(std::max(4, degree_ + 1), nodes, weights);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(size_, size_);
  std::vector<double> vals(static_cast<std::size_t>(degree_) + 1);
  const int pieces = size_ - degree_;
  for (int piece = 0; piece < pieces; ++piece) {
    const double a = static_cast<double>(piece) / pieces;
    const double b = static_cast<double>(piece + 1) / pieces;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double x = 0.5 * (a + b) + 0.5 * (b - a) * nodes[k];
      const double w = 0.5 * (b - a) * weights[k];
      const int first = nonzero(x, deriv, vals);
      for (int i = 0; i <= degree_; ++i)
        for (int j = 0; j <= degree_; ++j)
          g(first + i, first + j) += w * vals[static_cast<std::size_t>(i)] * vals[static_cast<std::size_t>(j)];
    }
  }
  return g;
}

void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights) {
  require(count >= 1, ErrorKind::Domain, "quadrature needs at least one node");
  nodes.assign(static_cast<std::size_t>(count), 0.0);
  weights.assign(static_cast<std::size_t>(count), 0.0);
  for (int i = 0; i < count; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= count; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = count * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[static_cast<std::size_t>(i)] = x;
    weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace kst
