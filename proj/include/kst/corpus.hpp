#pragma once

// Test functions on the unit cube and equally spaced sampling grids.
// Ids: f1..f10 in 4D and 6D ("f2_4d", "f7_6d"), u1..u6 and their Laplacians du1..du6.

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kst {

struct TestFunction {
  std::string id;
  int dim = 0;
  std::function<double(std::span<const double>)> eval;

  double operator()(std::span<const double> x) const { return eval(x); }
};

TestFunction corpus_4d(const std::string& id);
TestFunction corpus_6d(const std::string& id);
/// (u, Laplacian of u) for id in u1..u6.
std::pair<TestFunction, TestFunction> corpus_poisson(const std::string& id);
/// Any id above, including the "_4d"/"_6d" suffixed and "du" forms.
TestFunction corpus_lookup(const std::string& id);
std::vector<std::string> corpus_ids(int dim);

/// i / (per_axis - 1) for i in [0, per_axis).
std::vector<double> grid_axis(int per_axis);

/// Row-major (count x dim) tensor grid, first coordinate slowest.
std::vector<double> grid_points(int dim, int per_axis, long cap = 2'000'000);

/// f on grid_points(dim, per_axis), evaluated in parallel.
std::vector<double> sample_on_grid(const TestFunction& f, int per_axis, long cap = 2'000'000);

}  // namespace kst
