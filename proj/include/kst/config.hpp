#pragma once

// Flat key=value run configuration. '#' starts a comment. Keys not given
// take defaults that depend on d, so `d=4` alone yields a complete 4D setup.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kst/inner_rep.hpp"
#include "kst/smoother.hpp"

namespace kst {

struct RunConfig {
  int d = 2;
  int n = 100;
  InnerConfig inner;
  SmoothSpec smooth;
  int fit_per_axis = 101;
  int eval_per_axis = 501;
  int poisson_M = 255;
  double prune_tol = 1e-8;
  double pivot_gain_ratio = 1e-10;
  std::vector<std::string> corpus;
  std::vector<int> n_values;
  std::string output_dir = "out";
  std::string cache_dir = "cache";

  static RunConfig defaults(int d);
  /// Later entries win. Throws ErrorKind::Config on unknown keys or bad values.
  static RunConfig from_pairs(const std::map<std::string, std::string>& pairs);
  static std::map<std::string, std::string> parse_text(const std::string& text);
  static std::map<std::string, std::string> parse_file(const std::string& path);

  /// Canonical form: every key, sorted, doubles at 17 significant digits.
  std::string to_text() const;
  std::uint64_t hash() const;
  void validate() const;

  bool operator==(const RunConfig&) const;
};

/// "k=v" -> (k, v); throws ErrorKind::Config when malformed.
std::pair<std::string, std::string> split_assignment(const std::string& s);

}  // namespace kst
