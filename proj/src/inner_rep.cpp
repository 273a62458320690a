#include "kst/inner_rep.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "kst/error.hpp"
#include "kst/util.hpp"

namespace kst {
namespace {

using i64 = std::int64_t;

constexpr i64 kMaxDenominator = i64{1} << 53;

i64 checked_pow(i64 base, int exp) {
  i64 r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > kMaxDenominator / base) fail(ErrorKind::Config, "inner grid denominator exceeds 2^53; lower K or gamma");
    r *= base;
  }
  return r;
}

i64 floor_div(i64 a, i64 b) {
  i64 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

i64 floor_mod(i64 a, i64 b) { return a - floor_div(a, b) * b; }

// Positions are integers in units of 1/den, den = (2d+1) gamma^(depth+1).
struct Lattice {
  int d;
  int gamma;
  int depth;
  i64 den;

  Lattice(int d_, int gamma_, int depth_) : d(d_), gamma(gamma_), depth(depth_) {
    den = checked_pow(gamma, depth + 1);
    if (den > kMaxDenominator / (2 * d + 1)) fail(ErrorKind::Config, "inner grid denominator exceeds 2^53");
    den *= (2 * d + 1);
  }

  struct Rank {
    i64 period, shift, length, gap;
  };

  Rank rank(int q, int k) const {
    const i64 g = checked_pow(gamma, depth + 1 - k);
    const i64 period = (2 * d + 1) * g;
    const i64 gap = period / gamma;
    return {period, q * g, period - gap, gap};
  }

  double to_double(i64 v) const { return static_cast<double>(v) / static_cast<double>(den); }
};

struct IntInterval {
  i64 lo, hi;
};

std::vector<IntInterval> lattice_intervals(const Lattice& lat, int q, int k) {
  const auto r = lat.rank(q, k);
  std::vector<IntInterval> out;
  for (i64 j = floor_div(-r.shift, r.period) - 1;; ++j) {
    const i64 a = j * r.period + r.shift;
    if (a > lat.den) break;
    const i64 lo = std::max<i64>(a, 0);
    const i64 hi = std::min<i64>(a + r.length, lat.den);
    if (lo < hi) out.push_back({lo, hi});
  }
  return out;
}

// Interval/gap endpoints of rank k strictly inside (a, b).
void cuts_between(const Lattice::Rank& r, i64 a, i64 b, std::vector<i64>& out) {
  out.clear();
  for (i64 j = floor_div(a - r.shift, r.period);; ++j) {
    const i64 start = j * r.period + r.shift;
    if (start >= b) break;
    if (start > a) out.push_back(start);
    const i64 end = start + r.length;
    if (end > a && end < b) out.push_back(end);
  }
}

// Piece [u, v] contains no rank-k endpoint in its interior.
bool piece_in_interval(const Lattice::Rank& r, i64 u, i64 v) {
  return floor_mod(u + v - 2 * r.shift, 2 * r.period) < 2 * r.length;
}

// Golden-ratio Weyl sequence mapped to [-1, 1).
class Weyl {
 public:
  Weyl(std::uint64_t seed, int family) {
    state_ = std::fmod(0.5 + static_cast<double>(seed % 1000003) * 0.7548776662466927 + family * 0.5698402909980532, 1.0);
  }
  double next() {
    state_ += 0.6180339887498949;
    state_ -= std::floor(state_);
    return 2.0 * state_ - 1.0;
  }

 private:
  double state_;
};

struct Segment {
  i64 a, b;
  double mass;
  bool riser;
};

MonotonePL build_family(const InnerConfig& cfg, const Lattice& lat, int q, const std::vector<int>& flattened,
                        int attempt) {
  std::vector<Segment> segs{{0, lat.den, 1.0, false}};
  std::vector<Segment> next;
  std::vector<i64> cuts;
  Weyl weyl(cfg.seed + static_cast<std::uint64_t>(attempt) * 7919u, q);
  for (int k = 1; k <= cfg.K; ++k) {
    const bool flat = std::find(flattened.begin(), flattened.end(), k) != flattened.end();
    const double plateau_share = flat ? cfg.flatten_share : cfg.rise_share;
    const double riser_share = flat ? cfg.riser_share : cfg.rise_share;
    const double amp = attempt > 0 ? cfg.jitter_scale * std::ldexp(1.0, -k) : 0.0;
    const auto r = lat.rank(q, k);
    next.clear();
    next.reserve(segs.size() * 3);
    for (const auto& s : segs) {
      cuts_between(r, s.a, s.b, cuts);
      const double share = s.riser ? riser_share : plateau_share;
      const std::size_t first = next.size();
      double total = 0.0;
      i64 u = s.a;
      for (std::size_t c = 0; c <= cuts.size(); ++c) {
        const i64 v = c < cuts.size() ? cuts[c] : s.b;
        const bool inside = piece_in_interval(r, u, v);
        const double len = static_cast<double>(v - u);
        double w = inside ? share * len / static_cast<double>(r.length)
                          : (1.0 - share) * len / static_cast<double>(r.gap);
        if (!inside && amp > 0.0) w *= 1.0 + amp * weyl.next();
        next.push_back({u, v, w, !inside});
        total += w;
        u = v;
      }
      for (std::size_t i = first; i < next.size(); ++i) next[i].mass = s.mass * next[i].mass / total;
    }
    segs.swap(next);
  }
  std::vector<double> xs(segs.size() + 1), ys(segs.size() + 1);
  xs[0] = 0.0;
  ys[0] = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    acc += segs[i].mass;
    xs[i + 1] = lat.to_double(segs[i].b);
    ys[i + 1] = acc;
  }
  for (auto& y : ys) y /= acc;
  ys.back() = 1.0;
  return MonotonePL(std::move(xs), std::move(ys));
}

std::uint64_t hash_tables(const InnerMap& m) {
  Hasher h;
  h.add(m.d).add(m.gamma).add(m.K);
  for (const auto& pl : m.phi) h.add(pl.breakpoints()).add(pl.values());
  return h.value();
}

long count_power(long base, int exp, long cap) {
  long r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > cap / std::max(base, 1L)) return cap + 1;
    r *= base;
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------- config

InnerConfig InnerConfig::for_dimension(int d) {
  require(d >= 1, ErrorKind::Config, "invalid dimension: d must be >= 1");
  InnerConfig c;
  c.d = d;
  c.gamma = 4 * d + 2;
  c.K = d == 2 ? 4 : 3;
  c.flatten_share = 0.1 * std::pow(static_cast<double>(c.gamma), -d);
  c.riser_share = c.flatten_share * c.flatten_share;
  return c;
}

void InnerConfig::validate() const {
  require(d >= 1, ErrorKind::Config, "invalid dimension: d must be >= 1");
  require(gamma >= 2 * d + 2, ErrorKind::Config,
          "gamma must be >= 2d+2 (got " + std::to_string(gamma) + " for d=" + std::to_string(d) + ")");
  require(K >= 1, ErrorKind::Config, "K must be >= 1");
  require(max_retries >= 0, ErrorKind::Config, "max_retries must be >= 0");
  require(enumeration_cap >= 1, ErrorKind::Config, "enumeration_cap must be >= 1");
  for (double v : {flatten_share, riser_share, rise_share})
    require(std::isfinite(v) && v > 0.0 && v < 1.0, ErrorKind::Config, "rise shares must lie in (0,1)");
  require(std::isfinite(jitter_scale) && jitter_scale >= 0.0 && jitter_scale < 1.0, ErrorKind::Config,
          "jitter_scale must lie in [0,1)");
  Lattice(d, gamma, K + 1);  // denominator check, with room for one refinement
}

std::uint64_t InnerConfig::hash() const {
  return Hasher{}
      .add(d)
      .add(gamma)
      .add(K)
      .add(jitter_scale)
      .add(max_retries)
      .add(seed)
      .add(flatten_share)
      .add(riser_share)
      .add(rise_share)
      .add(enumeration_cap)
      .value();
}

// ---------------------------------------------------------------- tables

MonotonePL::MonotonePL(std::vector<double> breakpoints, std::vector<double> values)
    : x_(std::move(breakpoints)), y_(std::move(values)) {
  require(x_.size() == y_.size(), ErrorKind::Shape, "breakpoints and values differ in length");
  require(x_.size() >= 2, ErrorKind::Domain, "a monotone table needs at least two breakpoints");
  require(x_.front() == 0.0 && x_.back() == 1.0, ErrorKind::Config, "breakpoints must run from 0 to 1");
  require(y_.front() == 0.0 && y_.back() == 1.0, ErrorKind::Config, "values must run from 0 to 1");
  for (std::size_t i = 1; i < x_.size(); ++i) {
    require(x_[i] > x_[i - 1], ErrorKind::Config, "breakpoints must be strictly increasing");
    require(y_[i] > y_[i - 1], ErrorKind::Config, "values must be strictly increasing");
  }
}

double MonotonePL::operator()(double x) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  if (it == x_.end()) return y_.back();
  if (it == x_.begin()) return y_.front();
  const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
  if (x == x_[i]) return y_[i];
  const double t = (x - x_[i]) / (x_[i + 1] - x_[i]);
  return y_[i] + t * (y_[i + 1] - y_[i]);
}

std::vector<double> make_lambdas(int d) {
  require(d >= 1, ErrorKind::Config, "invalid dimension: d must be >= 1");
  std::vector<double> out{1.0};
  for (int candidate = 2; static_cast<int>(out.size()) < d; ++candidate) {
    bool prime = true;
    for (int f = 2; f * f <= candidate; ++f) prime = prime && candidate % f != 0;
    if (prime) out.push_back(1.0 / std::sqrt(static_cast<double>(candidate)));
  }
  return out;
}

std::vector<Interval> rank_intervals(int q, int k, const InnerConfig& cfg) {
  require(q >= 0 && q <= 2 * cfg.d, ErrorKind::Index, "family index out of range");
  require(k >= 1, ErrorKind::Index, "rank must be >= 1");
  const Lattice lat(cfg.d, cfg.gamma, std::max(k, cfg.K));
  std::vector<Interval> out;
  for (const auto& iv : lattice_intervals(lat, q, k)) out.push_back({lat.to_double(iv.lo), lat.to_double(iv.hi)});
  return out;
}

bool gaps_disjoint(const InnerConfig& cfg, int k) {
  const Lattice lat(cfg.d, cfg.gamma, std::max(k, cfg.K));
  struct Gap {
    i64 lo, hi;
    int q;
  };
  std::vector<Gap> gaps;
  for (int q = 0; q <= 2 * cfg.d; ++q) {
    const auto ivs = lattice_intervals(lat, q, k);
    const auto r = lat.rank(q, k);
    // gaps sit between consecutive intervals, plus any clipped gap at either end
    for (i64 j = floor_div(-r.shift, r.period) - 1;; ++j) {
      const i64 lo = j * r.period + r.shift + r.length;
      if (lo >= lat.den) break;
      const i64 hi = lo + r.gap;
      if (hi > 0) gaps.push_back({std::max<i64>(lo, 0), std::min(hi, lat.den), q});
    }
  }
  std::sort(gaps.begin(), gaps.end(), [](const Gap& a, const Gap& b) { return a.lo < b.lo; });
  for (std::size_t i = 1; i < gaps.size(); ++i)
    if (gaps[i].q != gaps[i - 1].q && gaps[i].lo < gaps[i - 1].hi) return false;
  return true;
}

std::vector<int> checkable_ranks(const InnerConfig& cfg) {
  std::vector<int> out;
  const Lattice lat(cfg.d, cfg.gamma, cfg.K);
  for (int k = 1; k <= cfg.K; ++k) {
    long worst = 0;
    for (int q = 0; q <= 2 * cfg.d; ++q)
      worst = std::max(worst, static_cast<long>(lattice_intervals(lat, q, k).size()));
    if (count_power(worst, cfg.d, cfg.enumeration_cap) <= cfg.enumeration_cap) out.push_back(k);
  }
  return out;
}

InnerMap build_inner_functions(const InnerConfig& cfg) {
  cfg.validate();
  const Lattice lat(cfg.d, cfg.gamma, cfg.K);
  const auto ranks = checkable_ranks(cfg);
  InnerMap map;
  map.d = cfg.d;
  map.gamma = cfg.gamma;
  map.K = cfg.K;
  map.alpha = std::log(2.0) / std::log(static_cast<double>(cfg.gamma));
  map.lambdas = make_lambdas(cfg.d);
  SeparationReport last;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    map.phi.assign(static_cast<std::size_t>(map.families()), {});
    parallel_for(map.phi.size(),
                 [&](std::size_t q) { map.phi[q] = build_family(cfg, lat, static_cast<int>(q), ranks, attempt); });
    map.hash = hash_tables(map);
    bool ok = true;
    for (int k : ranks) {
      last = verify_separation(map, k, cfg.enumeration_cap);
      if (!last.passed(cfg.d)) {
        ok = false;
        break;
      }
    }
    if (ok) return map;
  }
  throw ConstructionError("inner-function separation failed at rank " + std::to_string(last.rank) + " family " +
                              std::to_string(last.first_bad_family) + " (cubes " + std::to_string(last.bad_cube_a) +
                              ", " + std::to_string(last.bad_cube_b) + ") after " +
                              std::to_string(cfg.max_retries) + " retries",
                          last.rank, last.first_bad_family, last.bad_cube_a, last.bad_cube_b);
}

double eval_phi(const InnerMap& map, int q, double x) {
  require(q >= 0 && q < map.families(), ErrorKind::Index, "family index out of range");
  require(x >= 0.0 && x <= 1.0, ErrorKind::Domain, "phi argument outside [0,1]");
  return map.phi[static_cast<std::size_t>(q)](x);
}

double psi(const InnerMap& map, int q, std::span<const double> x) {
  require(static_cast<int>(x.size()) == map.d, ErrorKind::Shape, "point dimension does not match the inner map");
  double s = 0.0;
  for (int p = 0; p < map.d; ++p) s += map.lambdas[static_cast<std::size_t>(p)] * eval_phi(map, q, x[static_cast<std::size_t>(p)]);
  return s;
}

// ---------------------------------------------------------------- verification

bool SeparationReport::all_disjoint() const {
  return std::all_of(disjoint.begin(), disjoint.end(), [](bool b) { return b; });
}

SeparationReport verify_separation(const InnerMap& map, int k, long cap) {
  require(k >= 1 && k <= map.K, ErrorKind::Index, "rank outside 1..K");
  const Lattice lat(map.d, map.gamma, map.K);
  const int families = map.families();
  SeparationReport rep;
  rep.rank = k;
  rep.disjoint.assign(static_cast<std::size_t>(families), true);
  rep.cubes.assign(static_cast<std::size_t>(families), 0);
  rep.min_gap.assign(static_cast<std::size_t>(families), std::numeric_limits<double>::infinity());

  for (int q = 0; q < families; ++q) {
    const auto ivs = lattice_intervals(lat, q, k);
    const long cubes = count_power(static_cast<long>(ivs.size()), map.d, cap);
    if (cubes > cap)
      fail(ErrorKind::Capacity, "rank-" + std::to_string(k) + " cube enumeration exceeds cap " + std::to_string(cap) +
                                    "; lower k or d");
    const auto& pl = map.phi[static_cast<std::size_t>(q)];
    std::vector<double> lo, hi;
    for (const auto& iv : ivs) {
      lo.push_back(pl(lat.to_double(iv.lo)));
      hi.push_back(pl(lat.to_double(iv.hi)));
    }
    std::vector<double> left{0.0}, right{0.0};
    for (int p = 0; p < map.d; ++p) {
      const double lam = map.lambdas[static_cast<std::size_t>(p)];
      std::vector<double> nl, nr;
      nl.reserve(left.size() * lo.size());
      nr.reserve(left.size() * lo.size());
      for (std::size_t i = 0; i < left.size(); ++i)
        for (std::size_t j = 0; j < lo.size(); ++j) {
          nl.push_back(left[i] + lam * lo[j]);
          nr.push_back(right[i] + lam * hi[j]);
        }
      left.swap(nl);
      right.swap(nr);
    }
    rep.cubes[static_cast<std::size_t>(q)] = static_cast<long>(left.size());
    std::vector<long> order(left.size());
    std::iota(order.begin(), order.end(), 0L);
    std::sort(order.begin(), order.end(), [&](long a, long b) {
      return left[static_cast<std::size_t>(a)] < left[static_cast<std::size_t>(b)] ||
             (left[static_cast<std::size_t>(a)] == left[static_cast<std::size_t>(b)] && a < b);
    });
    double reach = -std::numeric_limits<double>::infinity();
    long reach_cube = -1;
    for (long idx : order) {
      const double l = left[static_cast<std::size_t>(idx)];
      if (reach_cube >= 0) {
        const double gap = l - reach;
        rep.min_gap[static_cast<std::size_t>(q)] = std::min(rep.min_gap[static_cast<std::size_t>(q)], gap);
        if (gap <= 0.0 && rep.disjoint[static_cast<std::size_t>(q)]) {
          rep.disjoint[static_cast<std::size_t>(q)] = false;
          if (rep.first_bad_family < 0) {
            rep.first_bad_family = q;
            rep.bad_cube_a = reach_cube;
            rep.bad_cube_b = idx;
          }
        }
      }
      if (right[static_cast<std::size_t>(idx)] > reach) {
        reach = right[static_cast<std::size_t>(idx)];
        reach_cube = idx;
      }
    }
  }

  // Covering multiplicity over test points: every rank-k endpoint of every
  // family and the midpoints between consecutive endpoints. Positions are
  // doubled so midpoints stay integral.
  std::vector<i64> cuts{0, lat.den};
  for (int q = 0; q < families; ++q)
    for (const auto& iv : lattice_intervals(lat, q, k)) {
      cuts.push_back(iv.lo);
      cuts.push_back(iv.hi);
    }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<i64> points2;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    points2.push_back(2 * cuts[i]);
    if (i + 1 < cuts.size()) points2.push_back(cuts[i] + cuts[i + 1]);
  }
  std::vector<std::uint32_t> masks;
  for (i64 t2 : points2) {
    std::uint32_t m = 0;
    for (int q = 0; q < families; ++q) {
      const auto r = lat.rank(q, k);
      const i64 rem = floor_mod(t2 - 2 * r.shift, 2 * r.period);
      if (rem > 2 * r.length) m |= 1u << q;
    }
    masks.push_back(m);
  }
  std::sort(masks.begin(), masks.end());
  masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
  int worst_missing = 0;
  std::vector<std::size_t> pick(static_cast<std::size_t>(map.d), 0);
  // non-decreasing d-tuples over the distinct masks
  while (true) {
    std::uint32_t acc = 0;
    for (std::size_t i : pick) acc |= masks[i];
    worst_missing = std::max(worst_missing, std::popcount(acc));
    int pos = map.d - 1;
    while (pos >= 0 && pick[static_cast<std::size_t>(pos)] + 1 == masks.size()) --pos;
    if (pos < 0) break;
    const std::size_t v = pick[static_cast<std::size_t>(pos)] + 1;
    for (int i = pos; i < map.d; ++i) pick[static_cast<std::size_t>(i)] = v;
  }
  rep.min_multiplicity = families - worst_missing;
  return rep;
}

// ---------------------------------------------------------------- Hoelder

namespace {

// Pairwise branch and bound over a min/max segment tree of the values.
class HolderSearch {
 public:
  HolderSearch(std::span<const double> x, std::span<const double> y, double alpha)
      : x_(x), y_(y), alpha_(alpha), lo_(4 * x.size()), hi_(4 * x.size()) {
    build(1, 0, x.size());
  }

  double run() {
    visit_same(1, 0, x_.size());
    return best_;
  }

 private:
  void build(std::size_t node, std::size_t b, std::size_t e) {
    if (e - b == 1) {
      lo_[node] = hi_[node] = y_[b];
      return;
    }
    const std::size_t m = (b + e) / 2;
    build(2 * node, b, m);
    build(2 * node + 1, m, e);
    lo_[node] = std::min(lo_[2 * node], lo_[2 * node + 1]);
    hi_[node] = std::max(hi_[2 * node], hi_[2 * node + 1]);
  }

  void visit_same(std::size_t node, std::size_t b, std::size_t e) {
    if (e - b < 2) return;
    const std::size_t m = (b + e) / 2;
    visit_pair(2 * node, b, m, 2 * node + 1, m, e);
    visit_same(2 * node, b, m);
    visit_same(2 * node + 1, m, e);
  }

  // [b1,e1) lies strictly left of [b2,e2)
  void visit_pair(std::size_t n1, std::size_t b1, std::size_t e1, std::size_t n2, std::size_t b2, std::size_t e2) {
    const double dist = x_[b2] - x_[e1 - 1];
    const double rise = std::max(hi_[n2] - lo_[n1], hi_[n1] - lo_[n2]);
    if (rise / std::pow(dist, alpha_) <= best_) return;
    if (e1 - b1 == 1 && e2 - b2 == 1) {
      best_ = std::max(best_, std::abs(y_[b2] - y_[b1]) / std::pow(dist, alpha_));
      return;
    }
    if (e1 - b1 >= e2 - b2) {
      const std::size_t m = (b1 + e1) / 2;
      // nearer half first tightens the bound sooner
      visit_pair(2 * n1 + 1, m, e1, n2, b2, e2);
      visit_pair(2 * n1, b1, m, n2, b2, e2);
    } else {
      const std::size_t m = (b2 + e2) / 2;
      visit_pair(n1, b1, e1, 2 * n2, b2, m);
      visit_pair(n1, b1, e1, 2 * n2 + 1, m, e2);
    }
  }

  std::span<const double> x_;
  std::span<const double> y_;
  double alpha_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  double best_ = 0.0;
};

}  // namespace

double holder_constant(const MonotonePL& pl, double alpha) {
  require(pl.size() >= 2, ErrorKind::Domain, "degenerate table: fewer than two breakpoints");
  require(alpha > 0.0 && alpha <= 1.0, ErrorKind::Domain, "Hoelder exponent must lie in (0,1]");
  return HolderSearch(pl.breakpoints(), pl.values(), alpha).run();
}

// ---------------------------------------------------------------- file form

void save_inner_map(const InnerMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d %d %d %.17g\n", map.d, map.gamma, map.K, map.alpha);
  out << buf;
  for (int q = 0; q < map.families(); ++q) {
    const auto& pl = map.phi[static_cast<std::size_t>(q)];
    for (std::size_t i = 0; i < pl.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%d %.17g %.17g\n", q, pl.breakpoints()[i], pl.values()[i]);
      out << buf;
    }
  }
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
}

InnerMap load_inner_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::MissingCache, "inner map file not found: " + path.string());
  InnerMap map;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Config, "empty inner map file");
  {
    std::istringstream hs(line);
    require(static_cast<bool>(hs >> map.d >> map.gamma >> map.K >> map.alpha), ErrorKind::Config,
            "malformed inner map header");
  }
  require(map.d >= 1 && map.gamma >= 2 * map.d + 2 && map.K >= 1, ErrorKind::Config, "inner map header out of range");
  const double expected_alpha = std::log(2.0) / std::log(static_cast<double>(map.gamma));
  require(std::abs(map.alpha - expected_alpha) < 1e-12, ErrorKind::Config, "inner map alpha inconsistent with gamma");
  std::vector<std::vector<double>> xs(static_cast<std::size_t>(map.families())), ys(xs.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int q;
    double x, y;
    require(static_cast<bool>(ls >> q >> x >> y), ErrorKind::Config, "malformed inner map row: " + line);
    require(q >= 0 && q < map.families(), ErrorKind::Config, "inner map row has family out of range");
    xs[static_cast<std::size_t>(q)].push_back(x);
    ys[static_cast<std::size_t>(q)].push_back(y);
  }
  map.lambdas = make_lambdas(map.d);
  for (std::size_t q = 0; q < xs.size(); ++q) map.phi.emplace_back(std::move(xs[q]), std::move(ys[q]));
  map.hash = hash_tables(map);
  return map;
}

}  // namespace kst
