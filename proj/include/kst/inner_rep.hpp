#pragma once

// Inner functions phi_q and weights lambda_p of the Kolmogorov
// representation f(x) = sum_q g(sum_p lambda_p phi_q(x_p)).
//
// Each phi_q is a strictly increasing piecewise-linear table on [0,1]
// built rank by rank on a shifted geometric grid. At rank k the family-q
// grid has period gamma^-k, shift q gamma^-k / (2d+1) and gap gamma^-(k+1);
// every piece of the current table is reweighted so that gaps receive most
// of its rise and intervals ("plateaus") the rest.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace kst {

struct InnerConfig {
  int d = 2;
  int gamma = 10;
  int K = 4;
  /// Rank-k jitter amplitude is jitter_scale * 2^-k (2^-(k+3) by default).
  double jitter_scale = 0.125;
  int max_retries = 10;
  std::uint64_t seed = 0;
  /// Share of a plateau's rise kept on rank-k intervals at verified ranks.
  double flatten_share = 1e-3;
  /// Share of a gap's rise leaked to rank-k intervals at verified ranks.
  double riser_share = 1e-6;
  /// Interval share at ranks too fine to verify.
  double rise_share = 0.5;
  long enumeration_cap = 1'000'000;

  /// gamma = 4d+2, K = 4 (d=2) or 3, flatten_share = 0.1 gamma^-d,
  /// riser_share = flatten_share^2.
  static InnerConfig for_dimension(int d);
  /// Throws ErrorKind::Config on violation.
  void validate() const;
  std::uint64_t hash() const;
};

class MonotonePL {
 public:
  MonotonePL() = default;
  /// Validates: strictly increasing, pinned to (0,0) and (1,1).
  MonotonePL(std::vector<double> breakpoints, std::vector<double> values);

  double operator()(double x) const;
  std::size_t size() const { return x_.size(); }
  std::span<const double> breakpoints() const { return x_; }
  std::span<const double> values() const { return y_; }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
};

struct InnerMap {
  int d = 0;
  int gamma = 0;
  int K = 0;
  double alpha = 0.0;
  std::vector<double> lambdas;
  std::vector<MonotonePL> phi;  // 2d+1 tables
  std::uint64_t hash = 0;

  int families() const { return 2 * d + 1; }
};

struct Interval {
  double lo;
  double hi;
};

/// lambda_1 = 1, lambda_p = 1/sqrt(p-th prime) for p >= 2.
std::vector<double> make_lambdas(int d);

/// Closed rank-k intervals of family q clipped to [0,1].
std::vector<Interval> rank_intervals(int q, int k, const InnerConfig& cfg);

/// Open rank-k gaps of all families are pairwise disjoint across families.
bool gaps_disjoint(const InnerConfig& cfg, int k);

InnerMap build_inner_functions(const InnerConfig& cfg);

double eval_phi(const InnerMap& map, int q, double x);
double psi(const InnerMap& map, int q, std::span<const double> x);

struct SeparationReport {
  int rank = 0;
  std::vector<bool> disjoint;        // per family
  std::vector<long> cubes;           // cubes enumerated per family
  std::vector<double> min_gap;       // smallest gap between consecutive images
  int min_multiplicity = 0;
  int first_bad_family = -1;
  long bad_cube_a = -1;
  long bad_cube_b = -1;

  bool all_disjoint() const;
  bool covering_ok(int d) const { return min_multiplicity >= d + 1; }
  bool passed(int d) const { return all_disjoint() && covering_ok(d); }
};

/// Throws ErrorKind::Capacity when a family has more than `cap` rank-k cubes.
SeparationReport verify_separation(const InnerMap& map, int k, long cap = 1'000'000);

/// Ranks 1..K whose cube count stays under the enumeration cap.
std::vector<int> checkable_ranks(const InnerConfig& cfg);

/// max |p(x)-p(y)| / |x-y|^alpha over breakpoint pairs, 0 < alpha <= 1.
double holder_constant(const MonotonePL& pl, double alpha);

void save_inner_map(const InnerMap& map, const std::filesystem::path& path);
InnerMap load_inner_map(const std::filesystem::path& path);

}  // namespace kst
