#include "kst/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "kst/error.hpp"
#include "kst/util.hpp"

namespace kst {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    T out;
    if constexpr (std::is_same_v<T, double>)
      out = std::stod(v, &used);
    else if constexpr (std::is_same_v<T, std::uint64_t>)
      out = std::stoull(v, &used);
    else if constexpr (std::is_same_v<T, long>)
      out = std::stol(v, &used);
    else
      out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    fail(ErrorKind::Config, "bad value for " + key + ": '" + v + "'");
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, std::string>)
      out += v[i];
    else
      out += std::to_string(v[i]);
  }
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T, class Ptr>
Field number(Ptr ptr) {
  return {[ptr](RunConfig& c, const std::string& k, const std::string& v) { c.*ptr = parse_number<T>(k, v); },
          [ptr](const RunConfig& c) {
            if constexpr (std::is_same_v<T, double>)
              return fmt(c.*ptr);
            else
              return std::to_string(c.*ptr);
          }};
}

template <class T, class Member>
Field inner_number(Member InnerConfig::*ptr) {
  return {[ptr](RunConfig& c, const std::string& k, const std::string& v) { c.inner.*ptr = parse_number<T>(k, v); },
          [ptr](const RunConfig& c) {
            if constexpr (std::is_same_v<T, double>)
              return fmt(c.inner.*ptr);
            else
              return std::to_string(c.inner.*ptr);
          }};
}

template <class T, class Member>
Field smooth_number(Member SmoothSpec::*ptr) {
  return {[ptr](RunConfig& c, const std::string& k, const std::string& v) { c.smooth.*ptr = parse_number<T>(k, v); },
          [ptr](const RunConfig& c) {
            if constexpr (std::is_same_v<T, double>)
              return fmt(c.smooth.*ptr);
            else
              return std::to_string(c.smooth.*ptr);
          }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["d"] = number<int>(&RunConfig::d);
    t["n"] = number<int>(&RunConfig::n);
    t["fit_per_axis"] = number<int>(&RunConfig::fit_per_axis);
    t["eval_per_axis"] = number<int>(&RunConfig::eval_per_axis);
    t["poisson_M"] = number<int>(&RunConfig::poisson_M);
    t["prune_tol"] = number<double>(&RunConfig::prune_tol);
    t["pivot_gain_ratio"] = number<double>(&RunConfig::pivot_gain_ratio);
    t["gamma"] = inner_number<int>(&InnerConfig::gamma);
    t["K"] = inner_number<int>(&InnerConfig::K);
    t["jitter_scale"] = inner_number<double>(&InnerConfig::jitter_scale);
    t["max_retries"] = inner_number<int>(&InnerConfig::max_retries);
    t["seed"] = inner_number<std::uint64_t>(&InnerConfig::seed);
    t["flatten_share"] = inner_number<double>(&InnerConfig::flatten_share);
    t["riser_share"] = inner_number<double>(&InnerConfig::riser_share);
    t["rise_share"] = inner_number<double>(&InnerConfig::rise_share);
    t["enumeration_cap"] = inner_number<long>(&InnerConfig::enumeration_cap);
    t["m0"] = smooth_number<int>(&SmoothSpec::m0);
    t["degree"] = smooth_number<int>(&SmoothSpec::degree);
    t["N2"] = smooth_number<int>(&SmoothSpec::N2);
    t["lambda"] = smooth_number<double>(&SmoothSpec::lambda);
    t["corpus"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.corpus = split_list(v); },
                   [](const RunConfig& c) { return join(c.corpus); }};
    t["n_values"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                       c.n_values.clear();
                       for (const auto& item : split_list(v)) c.n_values.push_back(parse_number<int>(k, item));
                     },
                     [](const RunConfig& c) { return join(c.n_values); }};
    t["output_dir"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; },
                       [](const RunConfig& c) { return c.output_dir; }};
    t["cache_dir"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.cache_dir = v; },
                      [](const RunConfig& c) { return c.cache_dir; }};
    return t;
  }();
  return table;
}

}  // namespace

RunConfig RunConfig::defaults(int d) {
  RunConfig c;
  c.d = d;
  c.inner = InnerConfig::for_dimension(d);
  if (d == 2 || d == 4 || d == 6) c.smooth = SmoothSpec::for_dimension(d);
  switch (d) {
    case 4:
      c.fit_per_axis = 11;
      c.eval_per_axis = 21;
      break;
    case 6:
      c.fit_per_axis = 6;
      c.eval_per_axis = 11;
      break;
    default:
      break;
  }
  c.corpus = {};
  return c;
}

RunConfig RunConfig::from_pairs(const std::map<std::string, std::string>& pairs) {
  int d = 2;
  if (auto it = pairs.find("d"); it != pairs.end()) d = parse_number<int>("d", it->second);
  require(d >= 1, ErrorKind::Config, "invalid dimension: d must be >= 1");
  RunConfig c = defaults(d);
  // flatten_share drives the default riser_share
  if (auto it = pairs.find("flatten_share"); it != pairs.end() && !pairs.count("riser_share")) {
    const double v = parse_number<double>("flatten_share", it->second);
    c.inner.riser_share = v * v;
  }
  for (const auto& [k, v] : pairs) {
    const auto f = fields().find(k);
    if (f == fields().end()) fail(ErrorKind::Config, "unknown config key: " + k);
    f->second.set(c, k, v);
  }
  c.inner.d = c.d;
  c.validate();
  return c;
}

std::map<std::string, std::string> RunConfig::parse_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      auto [k, v] = split_assignment(line);
      out[k] = v;
    } catch (const Error&) {
      fail(ErrorKind::Config, "config line " + std::to_string(number) + ": expected key=value");
    }
  }
  return out;
}

std::map<std::string, std::string> RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + "=" + f.get(*this) + "\n";
  return out;
}

std::uint64_t RunConfig::hash() const { return Hasher{}.add(to_text()).value(); }

void RunConfig::validate() const {
  require(d >= 1, ErrorKind::Config, "invalid dimension: d must be >= 1");
  require(inner.d == d, ErrorKind::Config, "inner dimension mismatch");
  require(n >= 1, ErrorKind::Config, "n must be >= 1");
  require(fit_per_axis >= 2 && eval_per_axis >= 2, ErrorKind::Config, "grids need at least 2 points per axis");
  require(poisson_M >= 3, ErrorKind::Config, "poisson_M must be >= 3");
  require(prune_tol >= 0.0 && prune_tol < 1.0, ErrorKind::Config, "prune_tol must lie in [0,1)");
  require(pivot_gain_ratio >= 0.0 && pivot_gain_ratio < 1.0, ErrorKind::Config, "pivot_gain_ratio must lie in [0,1)");
  for (int v : n_values) require(v >= 1, ErrorKind::Config, "n_values entries must be >= 1");
  inner.validate();
  smooth.validate();
}

bool RunConfig::operator==(const RunConfig& o) const { return to_text() == o.to_text(); }

std::pair<std::string, std::string> split_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) fail(ErrorKind::Config, "expected key=value, got '" + s + "'");
  auto k = trim(s.substr(0, eq));
  auto v = trim(s.substr(eq + 1));
  if (k.empty()) fail(ErrorKind::Config, "empty key in '" + s + "'");
  return {k, v};
}

}  // namespace kst
