#pragma once

// Penalised least-squares smoothing of KB-spline samples into LKB-splines.
//
// A 2D block is a tensor product of clamped cubic B-splines (m0 per axis)
// fitted to an N2 x N2 grid with thin-plate penalty weight lambda. A
// d-dimensional sample tensor (d even) is treated as d/2 consecutive blocks
// (x1,x2), (x3,x4), ... and smoothed one block at a time.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "kst/bspline.hpp"
#include "kst/inner_rep.hpp"
#include "kst/kb_basis.hpp"

namespace kst {

struct SmoothSpec {
  int m0 = 17;
  int degree = 3;
  int N2 = 101;
  double lambda = 1.0;

  /// m0 = 17/8/5 and N2 = 101/11/6 for d = 2/4/6.
  static SmoothSpec for_dimension(int d);
  void validate() const;
  std::uint64_t hash() const;
};

struct TensorCoeffs {
  std::vector<int> shape;
  std::vector<double> coeffs;

  std::size_t size() const { return coeffs.size(); }
};

/// Shared per-block operators. Coefficient (a, b) of a block sits at a*m0 + b,
/// sample (i, k) at i*N2 + k; the first coordinate varies slowest.
struct BlockOperators {
  SmoothSpec spec;
  BSplineBasis basis;
  Eigen::MatrixXd A1;  // N2 x m0
  Eigen::MatrixXd G0, G1, G2;  // 1D Gram matrices of derivatives 0..2
  Eigen::MatrixXd A;   // N2^2 x m0^2
  Eigen::MatrixXd E;   // thin-plate energy, m0^2 x m0^2
  Eigen::MatrixXd H;   // (A^T A + lambda E)^-1 A^T, maps block samples to coefficients

  explicit BlockOperators(const SmoothSpec& spec);
};

inline BlockOperators build_block_operators(const SmoothSpec& spec) { return BlockOperators(spec); }

/// Thin-plate energy of a 2D coefficient block.
double block_energy(const BlockOperators& ops, std::span<const double> coeffs);

TensorCoeffs smooth2d(const BlockOperators& ops, std::span<const double> z);

/// One smoothing stage per 2D block, in coordinate order.
TensorCoeffs smooth_staged(const BlockOperators& ops, std::span<const double> z, int blocks);

/// Joint solve of the full tensor problem with the penalty
/// sum_b (E on block b) x (mass Gram on the other blocks). Only for small problems.
TensorCoeffs smooth_direct(const BlockOperators& ops, std::span<const double> z, int blocks);

/// Mode-b product of a C-ordered tensor with `m` (rows replace the mode size).
std::vector<double> mode_product(std::span<const double> tensor, std::span<const int> shape, int mode,
                                 const Eigen::MatrixXd& m, std::vector<int>& out_shape);

/// Values of a d-axis coefficient tensor on the product grid with the given
/// per-axis abscissae (same on every axis), C order.
std::vector<double> tensor_on_grid(const BSplineBasis& basis, const TensorCoeffs& c, int dim,
                                   std::span<const double> axis);

/// Value at one point by direct sparse evaluation.
double tensor_eval(const BSplineBasis& basis, const TensorCoeffs& c, std::span<const double> x);

struct LKBSet {
  int d = 0;
  int n = 0;
  SmoothSpec spec;
  std::uint64_t inner_hash = 0;
  std::vector<TensorCoeffs> members;  // dn entries, shape (m0, ..., m0)

  int count() const { return static_cast<int>(members.size()); }
  /// Hash of (d, n, spec, inner map); identifies the configuration.
  std::uint64_t provenance() const;
  /// provenance() plus all coefficients.
  std::uint64_t hash() const;
  BSplineBasis basis() const { return BSplineBasis(spec.m0, spec.degree); }
};

/// Samples of all KB_{n,j} on the per_axis^d product grid: row j holds KB_{n,j}.
/// At most 2(2d+1) nonzeros per column.
Eigen::SparseMatrix<double, Eigen::RowMajor> kb_samples(const InnerMap& map, const HatBasis& basis, int per_axis);

LKBSet lkb_build(const InnerMap& map, const HatBasis& basis, const SmoothSpec& spec);
double lkb_eval(const LKBSet& set, int j, std::span<const double> x);

void save_lkb(const LKBSet& set, const std::filesystem::path& path);
/// Rejects files whose stored hash disagrees with the content, or whose
/// provenance differs from `expected_provenance` when that is nonzero.
LKBSet load_lkb(const std::filesystem::path& path, std::uint64_t expected_provenance = 0);

}  // namespace kst
