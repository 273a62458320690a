#pragma once

// Five-point finite differences for Laplace(u) = f on the unit square with
// u = 0 on the boundary, plus solution superposition over an LKB basis.
//
// Sign convention: the equation is taken literally, so f >= 0 gives u <= 0.
// Discrete 2-norms carry the cell weight h^2: ||v||_h = sqrt(h^2 sum v_i^2).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "kst/approx.hpp"
#include "kst/smoother.hpp"

namespace kst {

/// Node (i, k) sits at (i h, k h) and is stored at i*(M+2) + k.
struct FDGrid {
  int M = 0;
  double h = 0.0;
  std::vector<double> values;  // (M+2)^2, boundary entries 0

  explicit FDGrid(int M = 3);
  int stride() const { return M + 2; }
  double& at(int i, int k) { return values[static_cast<std::size_t>(i * stride() + k)]; }
  double at(int i, int k) const { return values[static_cast<std::size_t>(i * stride() + k)]; }
  /// Bilinear interpolation of the nodal field.
  double interpolate(double x, double y) const;
  /// Interpolated values on the per_axis^2 grid, first coordinate slowest.
  std::vector<double> resample(int per_axis) const;
};

/// Five-point Laplacian at the M^2 interior nodes, i-major.
std::vector<double> apply_laplacian(const FDGrid& u);

double discrete_norm(std::span<const double> interior, double h);

class PoissonSolver {
 public:
  explicit PoissonSolver(int M);
  ~PoissonSolver();
  PoissonSolver(PoissonSolver&&) noexcept;
  PoissonSolver& operator=(PoissonSolver&&) noexcept;

  int M() const { return M_; }
  double h() const { return 1.0 / (M_ + 1); }
  /// Residual target in the discrete 2-norm.
  static constexpr double tolerance = 1e-10;

  /// rhs: f at the M^2 interior nodes, i-major.
  FDGrid solve(std::span<const double> rhs) const;
  FDGrid solve(const std::function<double(double, double)>& f) const;

 private:
  struct Impl;
  int M_;
  std::unique_ptr<Impl> impl_;
};

FDGrid solve_poisson_fd(const std::function<double(double, double)>& f, int M);

/// Discrete L2 norm of the five-point Laplacian over interior nodes.
double laplace_norm(const FDGrid& u);

/// f at the interior nodes of an M-grid, i-major.
std::vector<double> interior_samples(const std::function<double(double, double)>& f, int M);

struct PoissonBasis {
  int M = 0;
  std::uint64_t lkb_hash = 0;
  std::vector<FDGrid> solutions;

  std::uint64_t hash() const;
};

PoissonBasis basis_solutions(const LKBSet& set, int M);

/// sum_i c_i u_i. The fit must come from the basis the solutions were built on.
FDGrid superpose(const PoissonBasis& basis, const FitResult& fit);

void save_poisson_basis(const PoissonBasis& basis, const std::filesystem::path& path);
PoissonBasis load_poisson_basis(const std::filesystem::path& path, std::uint64_t expected_lkb_hash, int expected_M);

/// CSV rows "x,y,u" for every node.
void export_field_csv(const FDGrid& u, const std::filesystem::path& path);

}  // namespace kst
