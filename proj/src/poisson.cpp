#include "kst/poisson.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "kst/corpus.hpp"
#include "kst/error.hpp"
#include "kst/simd.hpp"
#include "kst/util.hpp"

namespace kst {

FDGrid::FDGrid(int M_) : M(M_), h(1.0 / (M_ + 1)) {
  require(M_ >= 3, ErrorKind::Config, "finite-difference grid needs M >= 3");
  values.assign(static_cast<std::size_t>(stride()) * static_cast<std::size_t>(stride()), 0.0);
}

double FDGrid::interpolate(double x, double y) const {
  require(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0, ErrorKind::Domain, "interpolation point outside the square");
  const double sx = x * (M + 1), sy = y * (M + 1);
  const int i = std::min(static_cast<int>(sx), M), k = std::min(static_cast<int>(sy), M);
  const double a = sx - i, b = sy - k;
  return (1 - a) * ((1 - b) * at(i, k) + b * at(i, k + 1)) + a * ((1 - b) * at(i + 1, k) + b * at(i + 1, k + 1));
}

std::vector<double> FDGrid::resample(int per_axis) const {
  const auto axis = grid_axis(per_axis);
  std::vector<double> out;
  out.reserve(axis.size() * axis.size());
  for (double x : axis)
    for (double y : axis) out.push_back(interpolate(x, y));
  return out;
}

std::vector<double> apply_laplacian(const FDGrid& u) {
  const auto& K = simd::active();
  const int M = u.M, s = u.stride();
  const double inv_h2 = 1.0 / (u.h * u.h);
  std::vector<double> out(static_cast<std::size_t>(M) * static_cast<std::size_t>(M));
  for (int i = 1; i <= M; ++i) {
    const double* mid = &u.values[static_cast<std::size_t>(i * s + 1)];
    K.laplacian_row(mid - s, mid, mid + s, &out[static_cast<std::size_t>((i - 1) * M)], static_cast<std::size_t>(M), inv_h2);
  }
  return out;
}

double discrete_norm(std::span<const double> interior, double h) {
  double s = 0.0;
  for (double v : interior) s += v * v;
  return std::sqrt(h * h * s);
}

struct PoissonSolver::Impl {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

PoissonSolver::PoissonSolver(int M) : M_(M), impl_(std::make_unique<Impl>()) {
  require(M >= 3, ErrorKind::Config, "finite-difference grid needs M >= 3");
  const double inv_h2 = static_cast<double>(M + 1) * (M + 1);
  const auto n = static_cast<Eigen::Index>(M) * M;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(n) * 5);
  // negative Laplacian, symmetric positive definite
  for (int i = 0; i < M; ++i)
    for (int k = 0; k < M; ++k) {
      const int r = i * M + k;
      t.emplace_back(r, r, 4.0 * inv_h2);
      if (i > 0) t.emplace_back(r, r - M, -inv_h2);
      if (i + 1 < M) t.emplace_back(r, r + M, -inv_h2);
      if (k > 0) t.emplace_back(r, r - 1, -inv_h2);
      if (k + 1 < M) t.emplace_back(r, r + 1, -inv_h2);
    }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  impl_->ldlt.compute(A);
  if (impl_->ldlt.info() != Eigen::Success) fail(ErrorKind::Numerical, "finite-difference factorisation failed");
}

PoissonSolver::~PoissonSolver() = default;
PoissonSolver::PoissonSolver(PoissonSolver&&) noexcept = default;
PoissonSolver& PoissonSolver::operator=(PoissonSolver&&) noexcept = default;

FDGrid PoissonSolver::solve(std::span<const double> rhs) const {
  const auto n = static_cast<Eigen::Index>(M_) * M_;
  require(static_cast<Eigen::Index>(rhs.size()) == n, ErrorKind::Shape, "right-hand side needs M^2 interior values");
  FDGrid u(M_);
  const Eigen::Map<const Eigen::VectorXd> f(rhs.data(), n);
  if (f.isZero(0.0)) return u;
  Eigen::VectorXd sol = impl_->ldlt.solve(-f);
  const auto scatter = [&](const Eigen::VectorXd& v) {
    for (int i = 0; i < M_; ++i)
      for (int k = 0; k < M_; ++k) u.at(i + 1, k + 1) = v(i * M_ + k);
  };
  scatter(sol);
  double norm = 0.0;
  for (int iter = 0; iter < 6; ++iter) {
    const auto lap = apply_laplacian(u);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = rhs[static_cast<std::size_t>(i)] - lap[static_cast<std::size_t>(i)];
    norm = discrete_norm(std::span<const double>(r.data(), static_cast<std::size_t>(n)), h());
    if (norm <= tolerance) return u;
    sol += impl_->ldlt.solve(-r);
    scatter(sol);
  }
  fail(ErrorKind::Numerical, "finite-difference solve did not reach the residual target (residual " +
                                 std::to_string(norm) + ")");
}

FDGrid PoissonSolver::solve(const std::function<double(double, double)>& f) const {
  return solve(interior_samples(f, M_));
}

FDGrid solve_poisson_fd(const std::function<double(double, double)>& f, int M) { return PoissonSolver(M).solve(f); }

double laplace_norm(const FDGrid& u) { return discrete_norm(apply_laplacian(u), u.h); }

std::vector<double> interior_samples(const std::function<double(double, double)>& f, int M) {
  const double h = 1.0 / (M + 1);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(M) * static_cast<std::size_t>(M));
  for (int i = 1; i <= M; ++i)
    for (int k = 1; k <= M; ++k) out.push_back(f(i * h, k * h));
  return out;
}

std::uint64_t PoissonBasis::hash() const {
  Hasher h;
  h.add(M).add(lkb_hash);
  for (const auto& s : solutions) h.add(std::span<const double>(s.values));
  return h.value();
}

PoissonBasis basis_solutions(const LKBSet& set, int M) {
  require(set.d == 2, ErrorKind::Config, "Poisson basis solutions need d = 2");
  const PoissonSolver solver(M);
  const auto axis = grid_axis(M + 2);
  const auto bs = set.basis();
  PoissonBasis out;
  out.M = M;
  out.lkb_hash = set.hash();
  out.solutions.assign(static_cast<std::size_t>(set.count()), FDGrid(M));
  parallel_for(out.solutions.size(), [&](std::size_t j) {
    const auto full = tensor_on_grid(bs, set.members[j], 2, axis);
    std::vector<double> rhs;
    rhs.reserve(static_cast<std::size_t>(M) * static_cast<std::size_t>(M));
    for (int i = 1; i <= M; ++i)
      for (int k = 1; k <= M; ++k) rhs.push_back(full[static_cast<std::size_t>(i * (M + 2) + k)]);
    try {
      out.solutions[j] = solver.solve(rhs);
    } catch (const Error& e) {
      throw Error(e.kind(), "basis solution " + std::to_string(j) + ": " + e.what());
    }
  });
  return out;
}

FDGrid superpose(const PoissonBasis& basis, const FitResult& fit) {
  if (fit.basis_hash != basis.lkb_hash)
    fail(ErrorKind::Incompatible, "fit coefficients come from a different LKB basis than the Poisson solutions");
  require(fit.coefficients.size() == basis.solutions.size(), ErrorKind::Shape, "coefficient count mismatch");
  FDGrid u(basis.M);
  for (std::size_t i = 0; i < fit.coefficients.size(); ++i)
    if (fit.coefficients[i] != 0.0) simd::axpy(fit.coefficients[i], basis.solutions[i].values, u.values);
  return u;
}

namespace {
constexpr char kBasisMagic[8] = {'K', 'S', 'T', 'P', 'O', 'I', '1', '\n'};
}

void save_poisson_basis(const PoissonBasis& basis, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + tmp.string());
    out.write(kBasisMagic, sizeof kBasisMagic);
    const std::int32_t M = basis.M;
    const std::uint64_t count = basis.solutions.size(), h = basis.hash();
    out.write(reinterpret_cast<const char*>(&M), sizeof M);
    out.write(reinterpret_cast<const char*>(&basis.lkb_hash), sizeof basis.lkb_hash);
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    for (const auto& s : basis.solutions)
      out.write(reinterpret_cast<const char*>(s.values.data()), static_cast<std::streamsize>(s.values.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

PoissonBasis load_poisson_basis(const std::filesystem::path& path, std::uint64_t expected_lkb_hash, int expected_M) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingCache, "Poisson basis cache not found: " + path.string());
  char magic[sizeof kBasisMagic];
  in.read(magic, sizeof magic);
  require(in && std::memcmp(magic, kBasisMagic, sizeof magic) == 0, ErrorKind::Config, "not a Poisson basis cache");
  std::int32_t M = 0;
  std::uint64_t lkb = 0, count = 0, stored = 0;
  in.read(reinterpret_cast<char*>(&M), sizeof M);
  in.read(reinterpret_cast<char*>(&lkb), sizeof lkb);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  require(in && M >= 3 && count < (1u << 24), ErrorKind::Config, "Poisson basis header out of range");
  if (lkb != expected_lkb_hash || M != expected_M)
    fail(ErrorKind::Incompatible, "Poisson basis cache was built for a different LKB basis or mesh");
  PoissonBasis basis;
  basis.M = M;
  basis.lkb_hash = lkb;
  basis.solutions.assign(count, FDGrid(M));
  for (auto& s : basis.solutions) {
    in.read(reinterpret_cast<char*>(s.values.data()), static_cast<std::streamsize>(s.values.size() * sizeof(double)));
    require(static_cast<bool>(in), ErrorKind::Config, "truncated Poisson basis cache");
  }
  in.read(reinterpret_cast<char*>(&stored), sizeof stored);
  require(in && stored == basis.hash(), ErrorKind::Config, "Poisson basis cache content hash mismatch");
  return basis;
}

void export_field_csv(const FDGrid& u, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << "x,y,u\n";
  char buf[96];
  for (int i = 0; i < u.stride(); ++i)
    for (int k = 0; k < u.stride(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", i * u.h, k * u.h, u.at(i, k));
      out << buf;
    }
}

}  // namespace kst
