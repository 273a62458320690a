#include "kst/smoother.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <unsupported/Eigen/KroneckerProduct>

#include "kst/error.hpp"
#include "kst/util.hpp"

namespace kst {

SmoothSpec SmoothSpec::for_dimension(int d) {
  SmoothSpec s;
  switch (d) {
    case 2:
      break;
    case 4:
      s.m0 = 8;
      s.N2 = 11;
      break;
    case 6:
      s.m0 = 5;
      s.N2 = 6;
      break;
    default:
      fail(ErrorKind::Config, "smoothing supports d in {2, 4, 6}");
  }
  return s;
}

void SmoothSpec::validate() const {
  require(degree >= 1, ErrorKind::Config, "smoother degree must be >= 1");
  require(m0 >= 4 && m0 >= degree + 1, ErrorKind::Config, "smoother m0 must be >= 4 and > degree");
  require(N2 >= 2 && N2 >= m0, ErrorKind::Config,
          "smoother grid must be overdetermined: N2^2 >= m0^2 (N2=" + std::to_string(N2) +
              ", m0=" + std::to_string(m0) + ")");
  require(std::isfinite(lambda) && lambda > 0.0, ErrorKind::Config, "smoother lambda must be > 0");
}

std::uint64_t SmoothSpec::hash() const { return Hasher{}.add(m0).add(degree).add(N2).add(lambda).value(); }

namespace {

std::vector<double> uniform_axis(int count) {
  std::vector<double> a(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) a[static_cast<std::size_t>(i)] = static_cast<double>(i) / (count - 1);
  a.back() = 1.0;
  return a;
}

std::size_t product(std::span<const int> shape, std::size_t from, std::size_t to) {
  std::size_t p = 1;
  for (std::size_t i = from; i < to; ++i) p *= static_cast<std::size_t>(shape[i]);
  return p;
}

}  // namespace

BlockOperators::BlockOperators(const SmoothSpec& s) : spec(s), basis((s.validate(), s.m0), s.degree) {
  const auto axis = uniform_axis(spec.N2);
  A1 = basis.collocation(axis);
  G0 = basis.gram(0);
  G1 = basis.gram(1);
  G2 = basis.gram(2);
  A = Eigen::kroneckerProduct(A1, A1);
  E = Eigen::kroneckerProduct(G2, G0).eval() + 2.0 * Eigen::kroneckerProduct(G1, G1).eval() +
      Eigen::kroneckerProduct(G0, G2).eval();
  const Eigen::MatrixXd normal = A.transpose() * A + spec.lambda * E;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  const double rcond = ldlt.rcond();
  if (ldlt.info() != Eigen::Success || !(rcond > 1e-14))
    fail(ErrorKind::Numerical, "singular smoothing system (rcond estimate " + std::to_string(rcond) + ")");
  H = ldlt.solve(A.transpose());
}

double block_energy(const BlockOperators& ops, std::span<const double> coeffs) {
  require(static_cast<Eigen::Index>(coeffs.size()) == ops.E.rows(), ErrorKind::Shape, "block needs m0^2 coefficients");
  const Eigen::Map<const Eigen::VectorXd> c(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  return c.dot(ops.E * c);
}

TensorCoeffs smooth2d(const BlockOperators& ops, std::span<const double> z) {
  require(static_cast<Eigen::Index>(z.size()) == ops.H.cols(), ErrorKind::Shape, "2D smoothing needs N2^2 samples");
  const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
  TensorCoeffs out;
  out.shape = {ops.spec.m0, ops.spec.m0};
  out.coeffs.resize(static_cast<std::size_t>(ops.H.rows()));
  Eigen::Map<Eigen::VectorXd>(out.coeffs.data(), ops.H.rows()) = ops.H * zv;
  return out;
}

std::vector<double> mode_product(std::span<const double> tensor, std::span<const int> shape, int mode,
                                 const Eigen::MatrixXd& m, std::vector<int>& out_shape) {
  const auto b = static_cast<std::size_t>(mode);
  require(b < shape.size(), ErrorKind::Index, "mode out of range");
  require(m.cols() == shape[b], ErrorKind::Shape, "mode size does not match matrix");
  require(tensor.size() == product(shape, 0, shape.size()), ErrorKind::Shape, "tensor size does not match shape");
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const std::size_t pre = product(shape, 0, b);
  const std::size_t post = product(shape, b + 1, shape.size());
  const auto in_size = static_cast<Eigen::Index>(shape[b]);
  const auto rows = m.rows();
  out_shape.assign(shape.begin(), shape.end());
  out_shape[b] = static_cast<int>(rows);
  std::vector<double> out(pre * static_cast<std::size_t>(rows) * post, 0.0);
  for (std::size_t i = 0; i < pre; ++i) {
    const double* src = tensor.data() + i * static_cast<std::size_t>(in_size) * post;
    const std::size_t len = static_cast<std::size_t>(in_size) * post;
    if (std::all_of(src, src + len, [](double v) { return v == 0.0; })) continue;
    Eigen::Map<const RowMat> in(src, in_size, static_cast<Eigen::Index>(post));
    Eigen::Map<RowMat> dst(out.data() + i * static_cast<std::size_t>(rows) * post, rows, static_cast<Eigen::Index>(post));
    dst.noalias() = m * in;
  }
  return out;
}

TensorCoeffs smooth_staged(const BlockOperators& ops, std::span<const double> z, int blocks) {
  require(blocks >= 1, ErrorKind::Shape, "need at least one block");
  const int n2 = ops.spec.N2 * ops.spec.N2;
  std::vector<int> shape(static_cast<std::size_t>(blocks), n2);
  require(z.size() == product(shape, 0, shape.size()), ErrorKind::Shape, "staged smoothing needs (N2^2)^blocks samples");
  std::vector<double> current(z.begin(), z.end());
  std::vector<int> next_shape;
  for (int b = 0; b < blocks; ++b) {
    current = mode_product(current, shape, b, ops.H, next_shape);
    shape = next_shape;
  }
  TensorCoeffs out;
  out.shape.assign(static_cast<std::size_t>(2 * blocks), ops.spec.m0);
  out.coeffs = std::move(current);
  return out;
}

TensorCoeffs smooth_direct(const BlockOperators& ops, std::span<const double> z, int blocks) {
  require(blocks >= 1, ErrorKind::Shape, "need at least one block");
  const Eigen::Index unknowns = static_cast<Eigen::Index>(std::pow(ops.A.cols(), blocks));
  if (unknowns > 4096) fail(ErrorKind::Capacity, "direct joint smoothing limited to 4096 unknowns");
  Eigen::MatrixXd A = ops.A;
  for (int b = 1; b < blocks; ++b) A = Eigen::kroneckerProduct(A, ops.A).eval();
  require(static_cast<Eigen::Index>(z.size()) == A.rows(), ErrorKind::Shape, "direct smoothing sample count mismatch");
  const Eigen::MatrixXd mass = Eigen::kroneckerProduct(ops.G0, ops.G0);
  Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(unknowns, unknowns);
  for (int b = 0; b < blocks; ++b) {
    Eigen::MatrixXd term = b == 0 ? ops.E : mass;
    for (int c = 1; c < blocks; ++c) term = Eigen::kroneckerProduct(term, c == b ? ops.E : mass).eval();
    penalty += term;
  }
  const Eigen::MatrixXd normal = A.transpose() * A + ops.spec.lambda * penalty;
  const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success) fail(ErrorKind::Numerical, "direct smoothing system is singular");
  TensorCoeffs out;
  out.shape.assign(static_cast<std::size_t>(2 * blocks), ops.spec.m0);
  out.coeffs.resize(static_cast<std::size_t>(unknowns));
  Eigen::Map<Eigen::VectorXd>(out.coeffs.data(), unknowns) = ldlt.solve(A.transpose() * zv);
  return out;
}

std::vector<double> tensor_on_grid(const BSplineBasis& basis, const TensorCoeffs& c, int dim,
                                   std::span<const double> axis) {
  require(static_cast<int>(c.shape.size()) == dim, ErrorKind::Shape, "coefficient tensor rank mismatch");
  const Eigen::MatrixXd B = basis.collocation(axis);
  std::vector<double> current = c.coeffs;
  std::vector<int> shape = c.shape, next;
  for (int p = 0; p < dim; ++p) {
    current = mode_product(current, shape, p, B, next);
    shape = next;
  }
  return current;
}

double tensor_eval(const BSplineBasis& basis, const TensorCoeffs& c, std::span<const double> x) {
  const std::size_t dim = c.shape.size();
  require(x.size() == dim, ErrorKind::Shape, "point dimension does not match coefficient tensor");
  const int w = basis.degree() + 1;
  std::vector<int> first(dim);
  std::vector<double> vals(dim * static_cast<std::size_t>(w));
  for (std::size_t p = 0; p < dim; ++p)
    first[p] = basis.nonzero(x[p], 0, std::span<double>(vals).subspan(p * static_cast<std::size_t>(w), static_cast<std::size_t>(w)));
  std::vector<int> idx(dim, 0);
  double total = 0.0;
  while (true) {
    std::size_t offset = 0;
    double weight = 1.0;
    for (std::size_t p = 0; p < dim; ++p) {
      offset = offset * static_cast<std::size_t>(c.shape[p]) + static_cast<std::size_t>(first[p] + idx[p]);
      weight *= vals[p * static_cast<std::size_t>(w) + static_cast<std::size_t>(idx[p])];
    }
    total += weight * c.coeffs[offset];
    std::size_t p = dim;
    while (p > 0 && idx[p - 1] == w - 1) idx[--p] = 0;
    if (p == 0) break;
    ++idx[p - 1];
  }
  return total;
}

std::uint64_t LKBSet::provenance() const { return Hasher{}.add(d).add(n).add(spec.hash()).add(inner_hash).value(); }

std::uint64_t LKBSet::hash() const {
  Hasher h;
  h.add(provenance());
  for (const auto& m : members) {
    h.add(std::span<const int>(m.shape));
    h.add(std::span<const double>(m.coeffs));
  }
  return h.value();
}

Eigen::SparseMatrix<double, Eigen::RowMajor> kb_samples(const InnerMap& map, const HatBasis& basis, int per_axis) {
  require(basis.d() == map.d, ErrorKind::Shape, "hat basis and inner map disagree on d");
  require(per_axis >= 2, ErrorKind::Config, "sample grid needs at least 2 points per axis");
  const auto axis = uniform_axis(per_axis);
  std::size_t total = 1;
  for (int p = 0; p < map.d; ++p) total *= static_cast<std::size_t>(per_axis);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(total * static_cast<std::size_t>(map.families()) * 2);
  std::vector<double> psi_vals;
  std::vector<std::int32_t> index(total);
  std::vector<double> frac(total);
  for (int q = 0; q < map.families(); ++q) {
    const auto& phi = map.phi[static_cast<std::size_t>(q)];
    psi_vals.assign(1, 0.0);
    for (int p = 0; p < map.d; ++p) {
      const double lam = map.lambdas[static_cast<std::size_t>(p)];
      std::vector<double> next;
      next.reserve(psi_vals.size() * axis.size());
      for (double base : psi_vals)
        for (double a : axis) next.push_back(base + lam * phi(a));
      psi_vals.swap(next);
    }
    basis.locate(psi_vals, index, frac);
    for (std::size_t i = 0; i < total; ++i) {
      triplets.emplace_back(index[i], static_cast<int>(i), 1.0 - frac[i]);
      if (frac[i] > 0.0) triplets.emplace_back(index[i] + 1, static_cast<int>(i), frac[i]);
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> out(basis.count(), static_cast<Eigen::Index>(total));
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

LKBSet lkb_build(const InnerMap& map, const HatBasis& basis, const SmoothSpec& spec) {
  require(map.d == basis.d(), ErrorKind::Shape, "hat basis and inner map disagree on d");
  require(map.d % 2 == 0, ErrorKind::Config, "LKB smoothing needs an even dimension");
  const BlockOperators ops(spec);
  const auto samples = kb_samples(map, basis, spec.N2);
  LKBSet set;
  set.d = map.d;
  set.n = basis.n();
  set.spec = spec;
  set.inner_hash = map.hash;
  set.members.resize(static_cast<std::size_t>(basis.count()));
  const int blocks = map.d / 2;
  parallel_for(set.members.size(), [&](std::size_t j) {
    std::vector<double> z(static_cast<std::size_t>(samples.cols()), 0.0);
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(samples, static_cast<Eigen::Index>(j)); it; ++it)
      z[static_cast<std::size_t>(it.col())] = it.value();
    try {
      set.members[j] = smooth_staged(ops, z, blocks);
    } catch (const Error& e) {
      throw Error(e.kind(), "LKB member " + std::to_string(j) + ": " + e.what());
    }
  });
  return set;
}

double lkb_eval(const LKBSet& set, int j, std::span<const double> x) {
  require(j >= 0 && j < set.count(), ErrorKind::Index, "LKB index out of range");
  for (double v : x) require(v >= 0.0 && v <= 1.0, ErrorKind::Domain, "LKB argument outside the unit cube");
  return tensor_eval(set.basis(), set.members[static_cast<std::size_t>(j)], x);
}

namespace {

constexpr char kLkbMagic[8] = {'K', 'S', 'T', 'L', 'K', 'B', '1', '\n'};

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(static_cast<bool>(in), ErrorKind::Config, "truncated LKB cache");
  return v;
}

}  // namespace

void save_lkb(const LKBSet& set, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + tmp.string());
    out.write(kLkbMagic, sizeof kLkbMagic);
    put<std::int32_t>(out, set.d);
    put<std::int32_t>(out, set.n);
    put<std::int32_t>(out, set.spec.m0);
    put<std::int32_t>(out, set.spec.degree);
    put<std::int32_t>(out, set.spec.N2);
    put<double>(out, set.spec.lambda);
    put<std::uint64_t>(out, set.inner_hash);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(set.members.size()));
    for (const auto& m : set.members) {
      put<std::int32_t>(out, static_cast<std::int32_t>(m.shape.size()));
      for (int s : m.shape) put<std::int32_t>(out, s);
      out.write(reinterpret_cast<const char*>(m.coeffs.data()), static_cast<std::streamsize>(m.coeffs.size() * sizeof(double)));
    }
    put<std::uint64_t>(out, set.hash());
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
  std::ofstream index(path.string() + ".csv", std::ios::trunc);
  index << "j,coefficients,max_abs\n";
  for (std::size_t j = 0; j < set.members.size(); ++j) {
    double mx = 0.0;
    for (double v : set.members[j].coeffs) mx = std::max(mx, std::abs(v));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", mx);
    index << j << ',' << set.members[j].coeffs.size() << ',' << buf << '\n';
  }
}

LKBSet load_lkb(const std::filesystem::path& path, std::uint64_t expected_provenance) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingCache, "LKB cache not found: " + path.string());
  char magic[sizeof kLkbMagic];
  in.read(magic, sizeof magic);
  require(in && std::memcmp(magic, kLkbMagic, sizeof magic) == 0, ErrorKind::Config, "not an LKB cache: " + path.string());
  LKBSet set;
  set.d = get<std::int32_t>(in);
  set.n = get<std::int32_t>(in);
  set.spec.m0 = get<std::int32_t>(in);
  set.spec.degree = get<std::int32_t>(in);
  set.spec.N2 = get<std::int32_t>(in);
  set.spec.lambda = get<double>(in);
  set.inner_hash = get<std::uint64_t>(in);
  const auto count = get<std::uint64_t>(in);
  require(set.d >= 1 && set.n >= 1 && count == static_cast<std::uint64_t>(set.d) * static_cast<std::uint64_t>(set.n),
          ErrorKind::Config, "LKB cache header out of range");
  set.spec.validate();
  set.members.resize(count);
  for (auto& m : set.members) {
    const auto rank = get<std::int32_t>(in);
    require(rank == set.d, ErrorKind::Config, "LKB member rank mismatch");
    std::size_t size = 1;
    for (int i = 0; i < rank; ++i) {
      m.shape.push_back(get<std::int32_t>(in));
      require(m.shape.back() == set.spec.m0, ErrorKind::Config, "LKB member shape mismatch");
      size *= static_cast<std::size_t>(m.shape.back());
    }
    m.coeffs.resize(size);
    in.read(reinterpret_cast<char*>(m.coeffs.data()), static_cast<std::streamsize>(size * sizeof(double)));
    require(static_cast<bool>(in), ErrorKind::Config, "truncated LKB cache");
  }
  const auto stored = get<std::uint64_t>(in);
  require(stored == set.hash(), ErrorKind::Config, "LKB cache content hash mismatch");
  if (expected_provenance != 0 && set.provenance() != expected_provenance)
    fail(ErrorKind::Incompatible, "LKB cache was built from a different configuration");
  return set;
}

}  // namespace kst
