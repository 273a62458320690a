#include "kst/corpus.hpp"

#include <cmath>
#include <numbers>

#include "kst/error.hpp"
#include "kst/util.hpp"

namespace kst {
namespace {

using std::numbers::pi;
using Fn = std::function<double(std::span<const double>)>;

double sum_pow(std::span<const double> x, int k) {
  double s = 0.0;
  for (double v : x) s += std::pow(v, k);
  return s;
}

double hinge(double v) { return std::max(v - 0.5, 0.0); }

// f1..f10 shared by the 4D and 6D lists where the formula only depends on d.
Fn generic(int index, int d) {
  switch (index) {
    case 2:
      return [d](std::span<const double> x) { return sum_pow(x, 2) / d; };
    case 5:
      return [](std::span<const double> x) { return 1.0 / (1.0 + sum_pow(x, 2)); };
    case 6:
      return [](std::span<const double> x) {
        double p = 1.0;
        for (double v : x) p *= std::sin(pi * v);
        return p;
      };
    case 7:
      return [](std::span<const double> x) { return (std::sin(pi * sum_pow(x, 2)) + 1.0) / 2.0; };
    case 8:
      return [](std::span<const double> x) { return std::exp(-sum_pow(x, 2)); };
    case 9:
      return [](std::span<const double> x) {
        double p = 1.0;
        for (double v : x) p *= hinge(v);
        return p;
      };
    case 10:
      return [d](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v;
        return std::max(s - d / 2.0, 0.0);
      };
    default:
      return nullptr;
  }
}

int parse_index(const std::string& id, char prefix) {
  if (id.size() < 2 || id[0] != prefix) return -1;
  try {
    std::size_t used = 0;
    const int v = std::stoi(id.substr(1), &used);
    return used + 1 == id.size() ? v : -1;
  } catch (...) {
    return -1;
  }
}

[[noreturn]] void unknown(const std::string& id) { fail(ErrorKind::Config, "unknown corpus id: " + id); }

}  // namespace

TestFunction corpus_4d(const std::string& id) {
  const int k = parse_index(id, 'f');
  Fn f;
  switch (k) {
    case 1:
      f = [](std::span<const double> x) { return (1 + 2 * x[0] + 3 * x[1] + 4 * x[2] + 5 * x[3]) / 15.0; };
      break;
    case 3:
      f = [](std::span<const double> x) { return sum_pow(x, 4) / 4.0; };
      break;
    case 4:
      f = [](std::span<const double> x) {
        return (std::sin(x[0]) * std::exp(x[1]) + std::cos(x[0]) * std::exp(x[2]) + std::sin(x[0]) * std::exp(x[3])) /
               (3.0 * std::numbers::e);
      };
      break;
    default:
      f = k >= 1 ? generic(k, 4) : nullptr;
  }
  if (!f) unknown(id);
  return {id + "_4d", 4, std::move(f)};
}

TestFunction corpus_6d(const std::string& id) {
  const int k = parse_index(id, 'f');
  Fn f;
  switch (k) {
    case 1:
      f = [](std::span<const double> x) {
        return (1 + 2 * x[0] + 3 * x[1] + 4 * x[2] + 5 * x[3] + 6 * x[4] + 7 * x[5]) / 28.0;
      };
      break;
    case 3:
      f = [](std::span<const double> x) {
        const auto c = [&](int i) { return std::pow(x[static_cast<std::size_t>(i)], 3); };
        return (c(0) * c(1) + c(0) * c(2) + c(1) * c(2) + c(0) * c(3) + c(3) * c(4) + c(4) * c(5)) / 6.0;
      };
      break;
    case 4:
      f = [](std::span<const double> x) {
        return (std::sin(x[0]) * std::exp(x[1]) + std::cos(x[0]) * std::exp(x[2]) + std::sin(x[0]) * std::exp(x[3]) +
                std::cos(x[1]) * std::exp(x[4]) + std::sin(x[0]) * std::exp(x[5])) /
               (5.0 * std::numbers::e);
      };
      break;
    default:
      f = k >= 1 ? generic(k, 6) : nullptr;
  }
  if (!f) unknown(id);
  return {id + "_6d", 6, std::move(f)};
}

std::pair<TestFunction, TestFunction> corpus_poisson(const std::string& id) {
  // p = x(1-x)y(1-y)/4, s = sin(pi x) sin(pi y), w = sin(x)(1-x) sin(y)(1-y)
  Fn u, lap;
  switch (parse_index(id, 'u')) {
    case 1:
      u = [](std::span<const double> x) { return x[0] * (1 - x[0]) * x[1] * (1 - x[1]) / 4.0; };
      lap = [](std::span<const double> x) { return -(x[0] * (1 - x[0]) + x[1] * (1 - x[1])) / 2.0; };
      break;
    case 2:
      u = [](std::span<const double> x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
      lap = [](std::span<const double> x) { return -2.0 * pi * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]); };
      break;
    case 3:
      u = [](std::span<const double> x) {
        return std::sin(x[0]) * (1 - x[0]) * (1 - x[1]) * std::sin(x[1]);
      };
      lap = [](std::span<const double> x) {
        // a(t) = sin(t)(1-t): a' = cos(t)(1-t) - sin(t), a'' = -sin(t)(1-t) - 2cos(t)
        const auto a = [](double t) { return std::sin(t) * (1 - t); };
        const auto a2 = [](double t) { return -std::sin(t) * (1 - t) - 2 * std::cos(t); };
        return a2(x[0]) * a(x[1]) + a(x[0]) * a2(x[1]);
      };
      break;
    case 4:
      u = [](std::span<const double> x) {
        const double p = x[0] * (1 - x[0]) * x[1] * (1 - x[1]) / 4.0;
        return p * p;
      };
      lap = [](std::span<const double> x) {
        const double X = x[0] * (1 - x[0]), Y = x[1] * (1 - x[1]);
        const double p = X * Y / 4.0;
        const double px = (1 - 2 * x[0]) * Y / 4.0, py = X * (1 - 2 * x[1]) / 4.0;
        const double lp = -(X + Y) / 2.0;
        return 2.0 * p * lp + 2.0 * (px * px + py * py);
      };
      break;
    case 5:
      u = [](std::span<const double> x) {
        const double s = std::sin(pi * x[0]) * std::sin(pi * x[1]);
        return s * s;
      };
      lap = [](std::span<const double> x) {
        // sin^2(pi x) sin^2(pi y); (sin^2)'' = 2 pi^2 cos(2 pi t)
        const double sx = std::sin(pi * x[0]), sy = std::sin(pi * x[1]);
        return 2 * pi * pi * (std::cos(2 * pi * x[0]) * sy * sy + sx * sx * std::cos(2 * pi * x[1]));
      };
      break;
    case 6:
      u = [](std::span<const double> x) {
        const double w = std::sin(x[0]) * (1 - x[0]) * (1 - x[1]) * std::sin(x[1]);
        return w * w;
      };
      lap = [](std::span<const double> x) {
        // b = a^2 per axis: b'' = 2 a'^2 + 2 a a''
        const auto a = [](double t) { return std::sin(t) * (1 - t); };
        const auto a1 = [](double t) { return std::cos(t) * (1 - t) - std::sin(t); };
        const auto a2 = [](double t) { return -std::sin(t) * (1 - t) - 2 * std::cos(t); };
        const auto b = [&](double t) { return a(t) * a(t); };
        const auto b2 = [&](double t) { return 2 * a1(t) * a1(t) + 2 * a(t) * a2(t); };
        return b2(x[0]) * b(x[1]) + b(x[0]) * b2(x[1]);
      };
      break;
    default:
      unknown(id);
  }
  return {TestFunction{id, 2, std::move(u)}, TestFunction{"d" + id, 2, std::move(lap)}};
}

TestFunction corpus_lookup(const std::string& id) {
  if (id.size() > 3 && id.compare(id.size() - 3, 3, "_4d") == 0) return corpus_4d(id.substr(0, id.size() - 3));
  if (id.size() > 3 && id.compare(id.size() - 3, 3, "_6d") == 0) return corpus_6d(id.substr(0, id.size() - 3));
  if (!id.empty() && id[0] == 'u') return corpus_poisson(id).first;
  if (id.size() > 1 && id[0] == 'd') return corpus_poisson(id.substr(1)).second;
  unknown(id);
}

std::vector<std::string> corpus_ids(int dim) {
  std::vector<std::string> out;
  if (dim == 4 || dim == 6)
    for (int k = 1; k <= 10; ++k) out.push_back("f" + std::to_string(k) + "_" + std::to_string(dim) + "d");
  else if (dim == 2)
    for (int k = 1; k <= 6; ++k) out.push_back("du" + std::to_string(k));
  return out;
}

std::vector<double> grid_axis(int per_axis) {
  require(per_axis >= 2, ErrorKind::Config, "grid needs at least 2 points per axis");
  std::vector<double> a(static_cast<std::size_t>(per_axis));
  for (int i = 0; i < per_axis; ++i) a[static_cast<std::size_t>(i)] = static_cast<double>(i) / (per_axis - 1);
  return a;
}

std::vector<double> grid_points(int dim, int per_axis, long cap) {
  require(dim >= 1, ErrorKind::Config, "invalid dimension: d must be >= 1");
  const auto axis = grid_axis(per_axis);
  long count = 1;
  for (int p = 0; p < dim; ++p) {
    if (count > cap / per_axis) fail(ErrorKind::Capacity, "grid exceeds the point cap of " + std::to_string(cap));
    count *= per_axis;
  }
  std::vector<double> pts(static_cast<std::size_t>(count) * static_cast<std::size_t>(dim));
  for (long i = 0; i < count; ++i) {
    long rest = i;
    for (int p = dim - 1; p >= 0; --p) {
      pts[static_cast<std::size_t>(i * dim + p)] = axis[static_cast<std::size_t>(rest % per_axis)];
      rest /= per_axis;
    }
  }
  return pts;
}

std::vector<double> sample_on_grid(const TestFunction& f, int per_axis, long cap) {
  const auto pts = grid_points(f.dim, per_axis, cap);
  const std::size_t dim = static_cast<std::size_t>(f.dim);
  std::vector<double> out(pts.size() / dim);
  const std::size_t chunk = 4096;
  parallel_for((out.size() + chunk - 1) / chunk, [&](std::size_t c) {
    for (std::size_t i = c * chunk; i < std::min(out.size(), (c + 1) * chunk); ++i)
      out[i] = f(std::span<const double>(pts).subspan(i * dim, dim));
  });
  return out;
}

}  // namespace kst
