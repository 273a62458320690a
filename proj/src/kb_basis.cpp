#include "kst/kb_basis.hpp"

#include <cmath>

#include "kst/error.hpp"
#include "kst/simd.hpp"

namespace kst {

HatBasis::HatBasis(int n, int d) : n_(n), d_(d) {
  require(n >= 1, ErrorKind::Config, "hat basis needs n >= 1");
  require(d >= 1, ErrorKind::Config, "invalid dimension: d must be >= 1");
}

double HatBasis::knot(int j) const {
  require(j >= 0 && j < count(), ErrorKind::Index, "hat index out of range");
  return static_cast<double>(j) / n_;
}

double HatBasis::eval(int j, double t) const {
  require(j >= 0 && j < count(), ErrorKind::Index, "hat index out of range");
  require(t >= 0.0 && t <= d_, ErrorKind::Domain, "hat argument outside [0,d]");
  const double s = t * n_ - j;
  if (j == last() && s >= 0.0) return 1.0;
  return std::max(0.0, 1.0 - std::abs(s));
}

void HatBasis::locate(double t, int& j, double& frac) const {
  require(t >= 0.0 && t <= d_, ErrorKind::Domain, "hat argument outside [0,d]");
  const double s = t * n_;
  j = std::min(static_cast<int>(std::floor(s)), last());
  frac = j == last() ? 0.0 : s - j;
}

void HatBasis::locate(std::span<const double> t, std::span<std::int32_t> j, std::span<double> frac) const {
  require(j.size() == t.size() && frac.size() == t.size(), ErrorKind::Shape, "locate buffers differ in length");
  simd::active().hat_locate(t.data(), t.size(), static_cast<double>(n_), last(), j.data(), frac.data());
}

double hat_eval(const HatBasis& basis, int j, double t) { return basis.eval(j, t); }

LinearInterpolant::LinearInterpolant(const HatBasis& basis, std::vector<double> values)
    : basis_(basis), values_(std::move(values)) {
  require(static_cast<int>(values_.size()) == basis.count() + 1, ErrorKind::Shape,
          "interpolant needs dn+1 node values");
}

LinearInterpolant LinearInterpolant::of(const HatBasis& basis, const std::function<double(double)>& g) {
  std::vector<double> v(static_cast<std::size_t>(basis.count()) + 1);
  for (int j = 0; j < basis.count(); ++j) v[static_cast<std::size_t>(j)] = g(basis.knot(j));
  v.back() = g(static_cast<double>(basis.d()));
  return LinearInterpolant(basis, std::move(v));
}

double LinearInterpolant::operator()(double t) const {
  require(t >= 0.0 && t <= basis_.d(), ErrorKind::Domain, "interpolant argument outside [0,d]");
  const int last = basis_.last();
  const double s = t * basis_.n();
  const int j = std::min(static_cast<int>(std::floor(s)), last);
  const auto& v = values_;
  if (j == last) {
    const double t0 = static_cast<double>(last) / basis_.n();
    const double w = (t - t0) / (basis_.d() - t0);
    return v[static_cast<std::size_t>(last)] + w * (v.back() - v[static_cast<std::size_t>(last)]);
  }
  const double w = s - j;
  return v[static_cast<std::size_t>(j)] + w * (v[static_cast<std::size_t>(j) + 1] - v[static_cast<std::size_t>(j)]);
}

namespace {

void check_point(const InnerMap& map, std::span<const double> x) {
  require(static_cast<int>(x.size()) == map.d, ErrorKind::Shape, "point dimension does not match the inner map");
}

}  // namespace

double kb_eval(const InnerMap& map, const HatBasis& basis, int j, std::span<const double> x) {
  check_point(map, x);
  require(basis.d() == map.d, ErrorKind::Shape, "hat basis and inner map disagree on d");
  double s = 0.0;
  for (int q = 0; q < map.families(); ++q) s += basis.eval(j, psi(map, q, x));
  return s;
}

void kb_eval_all(const InnerMap& map, const HatBasis& basis, std::span<const double> x, std::span<double> out) {
  check_point(map, x);
  require(static_cast<int>(out.size()) == basis.count(), ErrorKind::Shape, "output needs dn entries");
  std::fill(out.begin(), out.end(), 0.0);
  for (int q = 0; q < map.families(); ++q) {
    int j;
    double frac;
    basis.locate(psi(map, q, x), j, frac);
    out[static_cast<std::size_t>(j)] += 1.0 - frac;
    if (frac > 0.0) out[static_cast<std::size_t>(j) + 1] += frac;
  }
}

double kbf_eval(const InnerMap& map, const LinearInterpolant& g, std::span<const double> x) {
  check_point(map, x);
  double s = 0.0;
  for (int q = 0; q < map.families(); ++q) s += g(psi(map, q, x));
  return s;
}

double kolmogorov_monomial(const InnerMap& map, int m, std::span<const double> x) {
  require(m >= 0, ErrorKind::Domain, "monomial degree must be >= 0");
  check_point(map, x);
  double s = 0.0;
  for (int q = 0; q < map.families(); ++q) s += std::pow(psi(map, q, x), m);
  return s;
}

double bernstein_tensor(const std::function<double(std::span<const double>)>& f, std::span<const int> n,
                        std::span<const double> x) {
  require(n.size() == x.size() && !x.empty(), ErrorKind::Shape, "degree list and point differ in length");
  const std::size_t d = x.size();
  std::vector<std::vector<double>> weights(d);
  for (std::size_t p = 0; p < d; ++p) {
    require(n[p] >= 1, ErrorKind::Domain, "Bernstein degree must be >= 1");
    require(x[p] >= 0.0 && x[p] <= 1.0, ErrorKind::Domain, "Bernstein argument outside [0,1]");
    // de Casteljau-style recurrence for the degree-n[p] basis values
    auto& w = weights[p];
    w.assign(static_cast<std::size_t>(n[p]) + 1, 0.0);
    w[0] = 1.0;
    for (int k = 1; k <= n[p]; ++k)
      for (int i = k; i >= 0; --i)
        w[static_cast<std::size_t>(i)] = (1.0 - x[p]) * w[static_cast<std::size_t>(i)] +
                                        (i > 0 ? x[p] * w[static_cast<std::size_t>(i) - 1] : 0.0);
  }
  std::vector<int> idx(d, 0);
  std::vector<double> node(d);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t p = 0; p < d; ++p) {
      node[p] = static_cast<double>(idx[p]) / n[p];
      w *= weights[p][static_cast<std::size_t>(idx[p])];
    }
    if (w != 0.0) total += w * f(node);
    std::size_t p = d;
    while (p > 0 && idx[p - 1] == n[p - 1]) idx[--p] = 0;
    if (p == 0) break;
    ++idx[p - 1];
  }
  return total;
}

double bernstein_tensor(const std::function<double(std::span<const double>)>& f, int n, std::span<const double> x) {
  const std::vector<int> degrees(x.size(), n);
  return bernstein_tensor(f, degrees, x);
}

}  // namespace kst
