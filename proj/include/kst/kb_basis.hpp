#pragma once

// Hat basis on [0,d], KB-splines, the interpolation approximant KB(f)_n,
// Kolmogorov monomials and a tensor Bernstein operator used as a test oracle.
//
// Indices are 0-based: hat j in [0, dn) peaks at t_j = j/n. The last hat is
// held at 1 on [t_{dn-1}, d] so the hats sum to one on all of [0,d].

#include <functional>
#include <span>
#include <vector>

#include "kst/inner_rep.hpp"

namespace kst {

class HatBasis {
 public:
  HatBasis(int n, int d);

  int n() const { return n_; }
  int d() const { return d_; }
  int count() const { return n_ * d_; }
  int last() const { return n_ * d_ - 1; }
  double knot(int j) const;

  /// Hat j at t. Throws Index / Domain errors.
  double eval(int j, double t) const;

  /// Left hat index and weight of its right neighbour: b_j = 1 - frac,
  /// b_{j+1} = frac. frac is 0 when j is the last hat.
  void locate(double t, int& j, double& frac) const;

  /// Vectorised locate; no domain checking.
  void locate(std::span<const double> t, std::span<std::int32_t> j, std::span<double> frac) const;

 private:
  int n_;
  int d_;
};

double hat_eval(const HatBasis& basis, int j, double t);

/// Piecewise-linear interpolant through the knots t_0..t_{dn-1} and d.
class LinearInterpolant {
 public:
  /// `values` has dn+1 entries: g at each knot, then g(d).
  LinearInterpolant(const HatBasis& basis, std::vector<double> values);
  static LinearInterpolant of(const HatBasis& basis, const std::function<double(double)>& g);

  double operator()(double t) const;
  std::span<const double> values() const { return values_; }

 private:
  HatBasis basis_;
  std::vector<double> values_;
};

double kb_eval(const InnerMap& map, const HatBasis& basis, int j, std::span<const double> x);

/// All dn KB values at x; out.size() must equal basis.count().
void kb_eval_all(const InnerMap& map, const HatBasis& basis, std::span<const double> x, std::span<double> out);

double kbf_eval(const InnerMap& map, const LinearInterpolant& g, std::span<const double> x);

double kolmogorov_monomial(const InnerMap& map, int m, std::span<const double> x);

/// Tensor Bernstein operator with degree n[p] along axis p.
double bernstein_tensor(const std::function<double(std::span<const double>)>& f, std::span<const int> n,
                        std::span<const double> x);
double bernstein_tensor(const std::function<double(std::span<const double>)>& f, int n, std::span<const double> x);

}  // namespace kst
