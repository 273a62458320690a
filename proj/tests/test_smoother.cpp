#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "kst/error.hpp"
#include "kst/smoother.hpp"

using namespace kst;

namespace {

std::vector<double> axis(int count) {
  std::vector<double> a(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) a[static_cast<std::size_t>(i)] = static_cast<double>(i) / (count - 1);
  return a;
}

// Cox-de Boor recursion, used as an independent B-spline oracle.
double cox_de_boor(std::span<const double> t, int i, int p, double x) {
  if (p == 0) {
    const bool last = t[static_cast<std::size_t>(i + 1)] == 1.0 && x == 1.0 && t[static_cast<std::size_t>(i)] < 1.0;
    return (t[static_cast<std::size_t>(i)] <= x && x < t[static_cast<std::size_t>(i + 1)]) || last ? 1.0 : 0.0;
  }
  double v = 0.0;
  const double a = t[static_cast<std::size_t>(i + p)] - t[static_cast<std::size_t>(i)];
  const double b = t[static_cast<std::size_t>(i + p + 1)] - t[static_cast<std::size_t>(i + 1)];
  if (a > 0) v += (x - t[static_cast<std::size_t>(i)]) / a * cox_de_boor(t, i, p - 1, x);
  if (b > 0) v += (t[static_cast<std::size_t>(i + p + 1)] - x) / b * cox_de_boor(t, i + 1, p - 1, x);
  return v;
}

double basis_value(const BSplineBasis& b, int a, double x, int deriv) {
  std::vector<double> vals(static_cast<std::size_t>(b.degree() + 1));
  const int first = b.nonzero(x, deriv, vals);
  const int k = a - first;
  return k >= 0 && k <= b.degree() ? vals[static_cast<std::size_t>(k)] : 0.0;
}

std::vector<double> greville(const BSplineBasis& b) {
  const auto t = b.knots();
  std::vector<double> g(static_cast<std::size_t>(b.size()));
  for (int a = 0; a < b.size(); ++a) {
    double s = 0;
    for (int r = 1; r <= b.degree(); ++r) s += t[static_cast<std::size_t>(a + r)];
    g[static_cast<std::size_t>(a)] = s / b.degree();
  }
  return g;
}

// Block data z(i, k) = f(x_i, y_k) on the N2 grid, first coordinate slowest.
template <class F>
std::vector<double> block_data(int n2, F f) {
  const auto ax = axis(n2);
  std::vector<double> z;
  for (double x : ax)
    for (double y : ax) z.push_back(f(x, y));
  return z;
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

const InnerMap& map2() {
  static const InnerMap m = build_inner_functions(InnerConfig::for_dimension(2));
  return m;
}

const LKBSet& small_set() {
  static const LKBSet s = lkb_build(map2(), HatBasis(10, 2), SmoothSpec::for_dimension(2));
  return s;
}

}  // namespace

TEST_CASE("B-spline basis matches Cox-de Boor and sums to one") {
  const BSplineBasis b(9, 3);
  CHECK(b.knots().size() == 13);
  for (int s = 0; s <= 500; ++s) {
    const double x = s / 500.0;
    double sum = 0;
    for (int a = 0; a < 9; ++a) {
      const double v = basis_value(b, a, x, 0);
      CHECK(v == doctest::Approx(cox_de_boor(b.knots(), a, 3, x)).epsilon(1e-13));
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("B-spline derivatives agree with central differences") {
  const BSplineBasis b(7, 3);
  const double h = 1e-6;
  for (double x : {0.05, 0.23, 0.41, 0.66, 0.93})
    for (int a = 0; a < 7; ++a) {
      const double d1 = (basis_value(b, a, x + h, 0) - basis_value(b, a, x - h, 0)) / (2 * h);
      const double d2 = (basis_value(b, a, x + h, 1) - basis_value(b, a, x - h, 1)) / (2 * h);
      CHECK(basis_value(b, a, x, 1) == doctest::Approx(d1).epsilon(1e-6).scale(1));
      CHECK(basis_value(b, a, x, 2) == doctest::Approx(d2).epsilon(1e-5).scale(1));
    }
}

TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
  std::vector<double> nodes, weights;
  gauss_legendre(4, nodes, weights);
  for (int p = 0; p <= 7; ++p) {
    double s = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * std::pow(nodes[i], p);
    CHECK(s == doctest::Approx(p % 2 ? 0.0 : 2.0 / (p + 1)).scale(1));
  }
}

TEST_CASE("Gram matrices agree with a fine midpoint rule") {
  const BSplineBasis b(6, 3);
  const int steps = 60000;
  for (int deriv = 0; deriv <= 2; ++deriv) {
    const Eigen::MatrixXd g = b.gram(deriv);
    Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(6, 6);
    for (int s = 0; s < steps; ++s) {
      const double x = (s + 0.5) / steps;
      for (int a = 0; a < 6; ++a)
        for (int c = 0; c < 6; ++c) ref(a, c) += basis_value(b, a, x, deriv) * basis_value(b, c, x, deriv) / steps;
    }
    CHECK((g - ref).cwiseAbs().maxCoeff() < 1e-5 * (1 + ref.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("thin-plate energy: affine null space, xy has energy 2") {
  const SmoothSpec spec{6, 3, 8, 1.0};
  const BlockOperators ops(spec);
  const auto g = greville(ops.basis);
  std::vector<double> one, x, y, xy;
  for (int a = 0; a < 6; ++a)
    for (int c = 0; c < 6; ++c) {
      one.push_back(1.0);
      x.push_back(g[static_cast<std::size_t>(a)]);
      y.push_back(g[static_cast<std::size_t>(c)]);
      xy.push_back(g[static_cast<std::size_t>(a)] * g[static_cast<std::size_t>(c)]);
    }
  CHECK(std::abs(block_energy(ops, one)) < 1e-10);
  CHECK(std::abs(block_energy(ops, x)) < 1e-10);
  CHECK(std::abs(block_energy(ops, y)) < 1e-10);
  CHECK(block_energy(ops, xy) == doctest::Approx(2.0).epsilon(1e-10));
  for (Eigen::Index r = 0; r < ops.A.rows(); ++r) CHECK(ops.A.row(r).sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("2D smoothing reproduces affine data and damps noise") {
  const SmoothSpec spec{9, 3, 21, 1.0};
  const BlockOperators ops(spec);
  const auto check_reproduces = [&](auto f) {
    const auto c = smooth2d(ops, block_data(21, f));
    double worst = 0;
    for (double u : {0.0, 0.13, 0.5, 0.77, 1.0})
      for (double v : {0.0, 0.31, 0.9, 1.0}) {
        const double p[2] = {u, v};
        worst = std::max(worst, std::abs(tensor_eval(ops.basis, c, p) - f(u, v)));
      }
    return worst;
  };
  CHECK(check_reproduces([](double, double) { return 3.0; }) < 1e-10);
  CHECK(check_reproduces([](double u, double v) { return 0.5 - 2 * u + 0.7 * v; }) < 1e-10);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto z = block_data(21, [&](double, double) { return noise(rng); });
  const auto c = smooth2d(ops, z);
  const auto fitted = tensor_on_grid(ops.basis, c, 2, axis(21));
  double in = 0, out = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    in += z[i] * z[i];
    out += fitted[i] * fitted[i];
  }
  CHECK(out < 0.5 * in);
}

TEST_CASE("2D smoothing is linear and its energy falls as lambda grows") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto z1 = block_data(12, [&](double, double) { return u(rng); });
  const auto z2 = block_data(12, [&](double, double) { return u(rng); });
  std::vector<double> mix(z1.size());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2 * z1[i] - 3 * z2[i];
  const BlockOperators ops(SmoothSpec{6, 3, 12, 1.0});
  const auto c1 = smooth2d(ops, z1), c2 = smooth2d(ops, z2), cm = smooth2d(ops, mix);
  for (std::size_t i = 0; i < cm.size(); ++i) CHECK(cm.coeffs[i] == doctest::Approx(2 * c1.coeffs[i] - 3 * c2.coeffs[i]).scale(1));

  double prev = INFINITY;
  for (double lambda : {1e-4, 1e-2, 1.0, 1e2}) {
    const BlockOperators o(SmoothSpec{6, 3, 12, lambda});
    const double e = block_energy(o, smooth2d(o, z1).coeffs);
    CHECK(e <= prev * (1 + 1e-12));
    prev = e;
  }
}

TEST_CASE("staged smoothing equals the Kronecker normal system") {
  const BlockOperators ops(SmoothSpec{5, 3, 6, 1.0});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> z(36 * 36);
  for (auto& v : z) v = u(rng);
  const auto c = smooth_staged(ops, z, 2);
  CHECK(c.shape == std::vector<int>{5, 5, 5, 5});
  const Eigen::MatrixXd normal = ops.A.transpose() * ops.A + ops.E;
  const Eigen::MatrixXd lhs = Eigen::kroneckerProduct(normal, normal);
  const Eigen::MatrixXd at = Eigen::kroneckerProduct(ops.A.transpose(), ops.A.transpose());
  const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
  const Eigen::Map<const Eigen::VectorXd> cv(c.coeffs.data(), static_cast<Eigen::Index>(c.size()));
  const Eigen::VectorXd rhs = at * zv;
  CHECK((lhs * cv - rhs).norm() < 1e-9 * rhs.norm());
}

TEST_CASE("staged smoothing of constant and separable affine data") {
  const BlockOperators ops(SmoothSpec{5, 3, 6, 1.0});
  const auto ax = axis(6);
  std::vector<double> z;
  for (double a : ax)
    for (double b : ax)
      for (double c : ax)
        for (double d : ax) z.push_back((1 + a - 0.5 * b) * (2 - c + d));
  const auto coeffs = smooth_staged(ops, z, 2);
  for (double a : {0.0, 0.3, 1.0})
    for (double c : {0.2, 0.9}) {
      const double p[4] = {a, 0.4, c, 0.7};
      CHECK(tensor_eval(ops.basis, coeffs, p) == doctest::Approx((1 + a - 0.2) * (2 - c + 0.7)).epsilon(1e-10));
    }
  std::vector<double> ones(36 * 36 * 36, 1.0);
  const auto c6 = smooth_staged(ops, ones, 3);
  CHECK(c6.shape.size() == 6);
  for (double v : c6.coeffs) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(kind_of([&] { smooth_staged(ops, std::vector<double>(35), 1); }) == ErrorKind::Shape);
}

TEST_CASE("direct smoothing solves its normal equations and matches staged on affine-sum data") {
  const BlockOperators ops(SmoothSpec{5, 3, 6, 1.0});
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> z(36 * 36);
  for (auto& v : z) v = u(rng);
  const auto c = smooth_direct(ops, z, 2);
  const Eigen::MatrixXd mass = Eigen::kroneckerProduct(ops.G0, ops.G0);
  Eigen::MatrixXd penalty = Eigen::kroneckerProduct(ops.E, mass);
  penalty += Eigen::kroneckerProduct(mass, ops.E);
  const Eigen::MatrixXd A = Eigen::kroneckerProduct(ops.A, ops.A);
  const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
  const Eigen::Map<const Eigen::VectorXd> cv(c.coeffs.data(), static_cast<Eigen::Index>(c.size()));
  const Eigen::VectorXd rhs = A.transpose() * zv;
  CHECK(((A.transpose() * A + penalty) * cv - rhs).norm() < 1e-9 * rhs.norm());

  const auto ax = axis(6);
  std::vector<double> affine;
  for (double a : ax)
    for (double b : ax)
      for (double c2 : ax)
        for (double d : ax) affine.push_back(1 + a + c2 - 0.5 * b + 0.25 * d);
  const auto staged = smooth_staged(ops, affine, 2);
  const auto direct = smooth_direct(ops, affine, 2);
  for (std::size_t i = 0; i < staged.size(); ++i) CHECK(staged.coeffs[i] == doctest::Approx(direct.coeffs[i]).epsilon(1e-9));

  const BlockOperators big(SmoothSpec{9, 3, 10, 1.0});
  CHECK(kind_of([&] { smooth_direct(big, std::vector<double>(10000 * 100), 3); }) == ErrorKind::Capacity);
}

TEST_CASE("mode_product and tensor evaluation against naive loops") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::vector<int> shape{3, 4, 2};
  std::vector<double> t(24);
  for (auto& v : t) v = u(rng);
  const Eigen::MatrixXd m = Eigen::MatrixXd::Random(5, 4);
  std::vector<int> out_shape;
  const auto r = mode_product(t, shape, 1, m, out_shape);
  CHECK(out_shape == std::vector<int>{3, 5, 2});
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 5; ++a)
      for (int k = 0; k < 2; ++k) {
        double s = 0;
        for (int b = 0; b < 4; ++b) s += m(a, b) * t[static_cast<std::size_t>((i * 4 + b) * 2 + k)];
        CHECK(r[static_cast<std::size_t>((i * 5 + a) * 2 + k)] == doctest::Approx(s).scale(1));
      }
  CHECK(kind_of([&] { mode_product(t, shape, 3, m, out_shape); }) == ErrorKind::Index);
  CHECK(kind_of([&] { mode_product(t, shape, 0, m, out_shape); }) == ErrorKind::Shape);

  const BSplineBasis b(5, 3);
  TensorCoeffs c{{5, 5, 5}, std::vector<double>(125)};
  for (auto& v : c.coeffs) v = u(rng);
  const std::vector<double> ax{0.0, 0.37, 1.0};
  const auto grid = tensor_on_grid(b, c, 3, ax);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        const double x[3] = {ax[static_cast<std::size_t>(i)], ax[static_cast<std::size_t>(j)], ax[static_cast<std::size_t>(k)]};
        double ref = 0;
        for (int a = 0; a < 5; ++a)
          for (int bb = 0; bb < 5; ++bb)
            for (int cc = 0; cc < 5; ++cc)
              ref += c.coeffs[static_cast<std::size_t>((a * 5 + bb) * 5 + cc)] * cox_de_boor(b.knots(), a, 3, x[0]) *
                     cox_de_boor(b.knots(), bb, 3, x[1]) * cox_de_boor(b.knots(), cc, 3, x[2]);
        CHECK(tensor_eval(b, c, x) == doctest::Approx(ref).scale(1));
        CHECK(grid[static_cast<std::size_t>((i * 3 + j) * 3 + k)] == doctest::Approx(ref).scale(1));
      }
}

TEST_CASE("LKB set in 2D") {
  const auto& set = small_set();
  CHECK(set.count() == 20);
  double worst = 0;
  for (int i = 0; i <= 50; ++i)
    for (int k = 0; k <= 50; ++k) {
      const double x[2] = {i / 50.0, k / 50.0};
      double s = 0;
      for (int j = 0; j < 20; ++j) s += lkb_eval(set, j, x);
      worst = std::max(worst, std::abs(s - 5.0));
    }
  CHECK(worst < 1e-9);
  for (double v : set.members[19].coeffs) CHECK(v == 0.0);
  const double bad[2] = {1.1, 0.0};
  CHECK(kind_of([&] { lkb_eval(set, 0, bad); }) == ErrorKind::Domain);
  CHECK(kind_of([&] { lkb_eval(set, 20, std::vector<double>{0.1, 0.1}); }) == ErrorKind::Index);

  const auto again = lkb_build(map2(), HatBasis(10, 2), SmoothSpec::for_dimension(2));
  CHECK(again.hash() == set.hash());

  // Each member is H applied to the KB samples.
  const BlockOperators ops(set.spec);
  const auto samples = kb_samples(map2(), HatBasis(10, 2), set.spec.N2);
  const Eigen::VectorXd z3 = Eigen::MatrixXd(samples.row(3)).transpose();
  const Eigen::VectorXd c3 = ops.H * z3;
  for (Eigen::Index i = 0; i < c3.size(); ++i)
    CHECK(set.members[3].coeffs[static_cast<std::size_t>(i)] == doctest::Approx(c3(i)).scale(1));
  for (Eigen::Index col = 0; col < samples.cols(); col += 97) CHECK(Eigen::MatrixXd(samples.col(col)).sum() == doctest::Approx(5.0));
}

TEST_CASE("LKB cache round trip and refusal") {
  const auto& set = small_set();
  const auto dir = std::filesystem::temp_directory_path() / "kst_test_lkb";
  std::filesystem::create_directories(dir);
  const auto path = dir / "set.bin";
  save_lkb(set, path);
  const auto back = load_lkb(path, set.provenance());
  CHECK(back.hash() == set.hash());
  CHECK(back.members[7].coeffs == set.members[7].coeffs);
  CHECK(kind_of([&] { load_lkb(path, set.provenance() + 1); }) == ErrorKind::Incompatible);
  CHECK(kind_of([&] { load_lkb(dir / "missing.bin"); }) == ErrorKind::MissingCache);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-16, std::ios::end);
    const double junk = 123.0;
    f.write(reinterpret_cast<const char*>(&junk), sizeof junk);
  }
  CHECK(kind_of([&] { load_lkb(path); }) == ErrorKind::Config);
  std::filesystem::remove_all(dir);
}

TEST_CASE("smoothing spec validation") {
  CHECK(SmoothSpec::for_dimension(4).m0 == 8);
  CHECK(SmoothSpec::for_dimension(6).N2 == 6);
  CHECK(kind_of([] { SmoothSpec{17, 3, 11, 1.0}.validate(); }) == ErrorKind::Config);
  CHECK(kind_of([] { SmoothSpec{8, 3, 11, 0.0}.validate(); }) == ErrorKind::Config);
  CHECK(kind_of([] { SmoothSpec::for_dimension(3); }) == ErrorKind::Config);
}
