// Acceptance run: one PASS/FAIL line per criterion. With an argument such as
// "A7" only that criterion runs; the exit status is nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>

#include "kst/approx.hpp"
#include "kst/corpus.hpp"
#include "kst/kb_basis.hpp"
#include "kst/poisson.hpp"
#include "kst/simd.hpp"

using namespace kst;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double halton(int index, int base) {
  double f = 1.0, r = 0.0;
  for (int i = index; i > 0; i /= base) {
    f /= base;
    r += f * (i % base);
  }
  return r;
}

const InnerMap& inner(int d) {
  static std::map<int, InnerMap> cache;
  auto it = cache.find(d);
  if (it == cache.end()) it = cache.emplace(d, build_inner_functions(InnerConfig::for_dimension(d))).first;
  return it->second;
}

Verdict a1() {
  const auto& m = inner(2);
  double worst = 0;
  for (int n : {10, 100}) {
    const HatBasis b(n, 2);
    std::vector<double> all(static_cast<std::size_t>(b.count()));
    for (int i = 1; i <= 10000; ++i) {
      const double x[2] = {halton(i, 2), halton(i, 3)};
      kb_eval_all(m, b, x, all);
      double s = 0;
      for (double v : all) s += v;
      worst = std::max(worst, std::abs(s - 5.0));
    }
  }
  return {worst < 1e-12, fmt("max |sum - 5| = %.3g (tol 1e-12)", worst)};
}

Verdict a2() {
  const auto& m = inner(2);
  const std::vector<int> ns{8, 16, 32, 64};
  std::vector<double> nd, errs;
  bool bound_ok = true;
  std::string detail;
  for (int n : ns) {
    const HatBasis b(n, 2);
    const auto g = LinearInterpolant::of(b, [](double t) { return t * t; });
    double worst = 0;
    for (int i = 0; i <= 200; ++i)
      for (int k = 0; k <= 200; ++k) {
        const double x[2] = {i / 200.0, k / 200.0};
        double exact = 0;
        for (int q = 0; q < 5; ++q) exact += std::pow(psi(m, q, x), 2);
        worst = std::max(worst, std::abs(kbf_eval(m, g, x) - exact));
      }
    const double bound = 10.0 / (8.0 * n * n);
    bound_ok = bound_ok && worst <= bound;
    detail += fmt("n=%d err=%.3g bound=%.3g; ", n, worst, bound);
    nd.push_back(n);
    errs.push_back(worst);
  }
  const double slope = rate_estimate(nd, errs).slope;
  return {bound_ok && slope >= -2.3 && slope <= -1.7, detail + fmt("slope=%.3f (want [-2.3,-1.7])", slope)};
}

Verdict a3() {
  const HatBasis b(10, 2);
  const auto g = LinearInterpolant::of(b, [](double t) { return t * t; });
  double worst = 0;
  for (int j = 0; j < b.count(); ++j) {
    const double mid = b.knot(j) + 0.05;
    worst = std::max(worst, std::abs(std::abs(g(mid) - mid * mid) - 2.5e-3));
  }
  return {worst < 1e-12, fmt("max |err - 2.5e-3| over midpoints = %.3g (tol 1e-12)", worst)};
}

Verdict a4() {
  const auto sq = [](std::span<const double> x) { return x[0] * x[0]; };
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x[1] = {i / 1e4};
    worst = std::max(worst, std::abs(sq(x) - bernstein_tensor(sq, 10, x)));
  }
  // the scan includes x = 1/2 where the gap x(1-x)/n peaks
  return {std::abs(worst - 1.0 / 40) < 1e-12, fmt("max error = %.17g, 1/40 = %.17g", worst, 1.0 / 40)};
}

std::vector<double> block_grid(int n2, const std::function<double(double, double)>& f) {
  const auto ax = grid_axis(n2);
  std::vector<double> z;
  for (double x : ax)
    for (double y : ax) z.push_back(f(x, y));
  return z;
}

Verdict a5() {
  const BlockOperators ops2(SmoothSpec::for_dimension(2));
  const auto residual = [&](const std::function<double(double, double)>& f) {
    const auto z = block_grid(ops2.spec.N2, f);
    const auto fitted = tensor_on_grid(ops2.basis, smooth2d(ops2, z), 2, grid_axis(ops2.spec.N2));
    return rmse(fitted, z);
  };
  const double bilinear = residual([](double x, double y) { return x * y; });
  const double affine = residual([](double x, double y) { return 1 + 2 * x - 3 * y; });

  const BlockOperators ops(SmoothSpec{5, 3, 6, 1.0});
  double worst = 0;
  for (const char* id : {"f2", "f5", "f7"}) {
    const auto f = corpus_4d(id);
    const auto z = sample_on_grid(f, 6);
    const auto staged = tensor_on_grid(ops.basis, smooth_staged(ops, z, 2), 4, grid_axis(11));
    const auto direct = tensor_on_grid(ops.basis, smooth_direct(ops, z, 2), 4, grid_axis(11));
    worst = std::max(worst, rmse(staged, direct));
  }
  const bool pass = bilinear < 1e-8 && worst <= 1e-6;
  return {pass, fmt("bilinear residual=%.3g (tol 1e-8), affine residual=%.3g, staged vs direct RMS=%.3g (tol 1e-6)",
                    bilinear, affine, worst)};
}

struct Pipeline2D {
  LKBSet set;
  DesignMatrix design;
};

const Pipeline2D& pipeline2d() {
  static const Pipeline2D p = [] {
    Pipeline2D out;
    out.set = lkb_build(inner(2), HatBasis(100, 2), SmoothSpec::for_dimension(2));
    out.design = make_design(out.set, 101);
    return out;
  }();
  return p;
}

Verdict a6() {
  const auto& p = pipeline2d();
  const auto f = corpus_lookup("du1");
  auto fit = dls_fit(p.design, sample_on_grid(f, 101), p.set.hash());
  evaluate_fit(p.set, fit, 501, sample_on_grid(f, 501));
  return {fit.rmse_PP <= 1e-2, fmt("rmse_P=%.3g rmse_PP=%.3g (tol 1e-2)", fit.rmse_P, fit.rmse_PP)};
}

struct Pipeline4D {
  LKBSet set;
  DesignMatrix design;
  PivotSet pivots;
};

const Pipeline4D& pipeline4d() {
  static const Pipeline4D p = [] {
    Pipeline4D out;
    out.set = lkb_build(inner(4), HatBasis(100, 4), SmoothSpec::for_dimension(4));
    out.design = make_design(out.set, 11);
    out.pivots = pivotal_points(out.design);
    return out;
  }();
  return p;
}

std::pair<FitResult, FitResult> fit4d(const std::string& id) {
  const auto& p = pipeline4d();
  const auto f = corpus_4d(id);
  const auto fs = sample_on_grid(f, 11), fe = sample_on_grid(f, 21);
  auto full = dls_fit(p.design, fs, p.set.hash());
  evaluate_fit(p.set, full, 21, fe);
  auto piv = pivotal_fit(p.design, p.pivots, fs, p.set.hash());
  evaluate_fit(p.set, piv, 21, fe);
  return {full, piv};
}

Verdict a7() {
  const auto [full, piv] = fit4d("f2");
  return {full.rmse_PP <= 5e-2, fmt("f2 rmse_P=%.3g rmse_PP=%.3g (tol 5e-2)", full.rmse_P, full.rmse_PP)};
}

Verdict a8() {
  const auto& p = pipeline4d();
  const std::size_t count = p.pivots.rows.size();
  bool pass = count <= 400;
  std::string detail = fmt("pivots=%zu (max 400, kept columns %zu); ", count, p.design.kept.size());
  for (const char* id : {"f1", "f2"}) {
    const auto [full, piv] = fit4d(id);
    const double ratio = piv.rmse_PP / full.rmse_PP;
    pass = pass && ratio <= 10.0;
    detail += fmt("%s full=%.3g pivotal=%.3g ratio=%.2f; ", id, full.rmse_PP, piv.rmse_PP, ratio);
  }
  return {pass, detail + "ratio tol 10"};
}

Verdict a9() {
  std::vector<double> hs, errs;
  const auto [u, lap] = corpus_poisson("u2");
  for (int M : {15, 31, 63}) {
    const auto grid = solve_poisson_fd([&](double x, double y) { return lap(std::vector<double>{x, y}); }, M);
    double e = 0;
    for (int i = 0; i < grid.stride(); ++i)
      for (int k = 0; k < grid.stride(); ++k)
        e = std::max(e, std::abs(grid.at(i, k) - u(std::vector<double>{i * grid.h, k * grid.h})));
    hs.push_back(grid.h);
    errs.push_back(e);
  }
  const double slope = rate_estimate(hs, errs).slope;
  return {std::abs(slope - 2.0) <= 0.2,
          fmt("errors %.3g %.3g %.3g, slope=%.3f (want 2 +- 0.2)", errs[0], errs[1], errs[2], slope)};
}

Verdict a10() {
  const auto& p = pipeline2d();
  const int M = 255;
  const auto basis = basis_solutions(p.set, M);
  const auto [u, lap] = corpus_poisson("u1");
  const auto fit = dls_fit(p.design, sample_on_grid(lap, 101), p.set.hash());
  const auto un = superpose(basis, fit);
  const double err = rmse(un.resample(101), sample_on_grid(u, 101));

  const auto Fn = combination_on_grid(p.set, fit.coefficients, grid_axis(M + 2));
  std::vector<double> rhs;
  for (int i = 1; i <= M; ++i)
    for (int k = 1; k <= M; ++k) rhs.push_back(Fn[static_cast<std::size_t>(i * (M + 2) + k)]);
  const auto direct = PoissonSolver(M).solve(rhs);
  double diff = 0;
  for (std::size_t i = 0; i < direct.values.size(); ++i) diff = std::max(diff, std::abs(direct.values[i] - un.values[i]));
  return {err <= 1e-3 && diff <= 1e-9,
          fmt("RMSE(u_n, u1)=%.3g (tol 1e-3), superpose vs direct max diff=%.3g (tol 1e-9)", err, diff)};
}

Verdict a11() {
  const std::vector<double> ns{10, 30, 100, 300, 1000};
  double worst = 0;
  for (double beta : {0.5, 1.0, 2.0})
    for (unsigned seed = 1; seed <= 10; ++seed) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> noise(-0.05, 0.05);
      std::vector<double> err;
      for (double n : ns) err.push_back(0.3 * std::pow(n, -beta) * (1 + noise(rng)));
      worst = std::max(worst, std::abs(holder_exponent_estimate(ns, err).beta - beta));
    }
  return {worst <= 0.05, fmt("max |beta_hat - beta| over 30 series = %.4f (tol 0.05)", worst)};
}

Verdict a12() {
  const auto& m = inner(2);
  bool pass = true;
  std::string detail;
  for (int k : {1, 2}) {
    const auto r = verify_separation(m, k);
    double gap = INFINITY;
    for (double g : r.min_gap) gap = std::min(gap, g);
    pass = pass && r.passed(2);
    detail += fmt("rank %d: disjoint=%d min_gap=%.3g multiplicity=%d; ", k, r.all_disjoint() ? 1 : 0, gap,
                  r.min_multiplicity);
  }
  bool monotone = true;
  for (const auto& phi : m.phi)
    for (std::size_t i = 1; i < phi.size(); ++i)
      monotone = monotone && phi.values()[i] > phi.values()[i - 1] && phi.breakpoints()[i] > phi.breakpoints()[i - 1];
  auto cfg5 = InnerConfig::for_dimension(2);
  cfg5.K = 5;
  const auto m5 = build_inner_functions(cfg5);
  double growth = 0, h4max = 0, h5max = 0;
  for (int q = 0; q < m.families(); ++q) {
    const double h4 = holder_constant(m.phi[static_cast<std::size_t>(q)], m.alpha);
    const double h5 = holder_constant(m5.phi[static_cast<std::size_t>(q)], m5.alpha);
    growth = std::max(growth, h5 / h4 - 1.0);
    h4max = std::max(h4max, h4);
    h5max = std::max(h5max, h5);
  }
  pass = pass && monotone && growth < 0.1;
  return {pass, detail + fmt("strictly monotone=%d, Hoelder K=4 %.4f K=5 %.4f growth=%.2f%% (tol 10%%)",
                             monotone ? 1 : 0, h4max, h5max, 100 * growth)};
}

struct Criterion {
  const char* id;
  Verdict (*run)();
  double time_limit;  // seconds, 0 when none is set
};

const Criterion kCriteria[] = {
    {"A1", a1, 10},  {"A2", a2, 60},  {"A3", a3, 0},   {"A4", a4, 0},   {"A5", a5, 0},    {"A6", a6, 300},
    {"A7", a7, 1800}, {"A8", a8, 0},  {"A9", a9, 60},  {"A10", a10, 0}, {"A11", a11, 0}, {"A12", a12, 60},
};

}  // namespace

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  int failures = 0, ran = 0;
  std::printf("simd kernels: %s\n", std::string(simd::isa_name(simd::active().isa)).c_str());
  for (const auto& c : kCriteria) {
    if (!only.empty() && only != c.id) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && secs > c.time_limit) {
      v.pass = false;
      v.detail += fmt(" [over time limit %.0f s]", c.time_limit);
    }
    std::printf("%-4s %s  %s  (%.2f s)\n", c.id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
