// Command-line driver: builds inner maps and LKB bases into a cache
// directory, runs fits, and writes the table analogues as CSV.

#include <fcntl.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "kst/approx.hpp"
#include "kst/config.hpp"
#include "kst/corpus.hpp"
#include "kst/error.hpp"
#include "kst/kb_basis.hpp"
#include "kst/poisson.hpp"
#include "kst/simd.hpp"

namespace fs = std::filesystem;
using namespace kst;

namespace {

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Exclusive ownership of the cache directory while writing.
class CacheLock {
 public:
  explicit CacheLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      fail(ErrorKind::Config, "cache directory is locked by another run (remove " + path_.string() + " if stale)");
  }
  ~CacheLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  CacheLock(const CacheLock&) = delete;
  CacheLock& operator=(const CacheLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

struct Context {
  RunConfig cfg;
  fs::path cache;
  fs::path out;
  std::optional<InnerMap> inner;
};

fs::path inner_path(const Context& ctx) {
  return ctx.cache / ("inner_d" + std::to_string(ctx.cfg.d) + "_" + hex(ctx.cfg.inner.hash()) + ".txt");
}

std::uint64_t lkb_provenance(const Context& ctx, int n) {
  LKBSet probe;
  probe.d = ctx.cfg.d;
  probe.n = n;
  probe.spec = ctx.cfg.smooth;
  probe.inner_hash = ctx.inner->hash;
  return probe.provenance();
}

fs::path lkb_path(const Context& ctx, int n) {
  return ctx.cache / ("lkb_d" + std::to_string(ctx.cfg.d) + "_n" + std::to_string(n) + "_" +
                      hex(lkb_provenance(ctx, n)) + ".bin");
}

void print_inner_report(const InnerMap& map, const InnerConfig& cfg) {
  std::printf("inner map d=%d gamma=%d K=%d alpha=%.17g hash=%s\n", map.d, map.gamma, map.K, map.alpha,
              hex(map.hash).c_str());
  std::printf("q,breakpoints,holder_constant\n");
  for (int q = 0; q < map.families(); ++q)
    std::printf("%d,%zu,%.6f\n", q, map.phi[static_cast<std::size_t>(q)].size(),
                holder_constant(map.phi[static_cast<std::size_t>(q)], map.alpha));
  for (int k : checkable_ranks(cfg)) {
    const auto rep = verify_separation(map, k, cfg.enumeration_cap);
    double gap = rep.min_gap.front();
    for (double g : rep.min_gap) gap = std::min(gap, g);
    std::printf("rank %d: disjoint=%s min_gap=%.6e covering_multiplicity=%d (need %d)\n", k,
                rep.all_disjoint() ? "yes" : "no", gap, rep.min_multiplicity, map.d + 1);
  }
}

const InnerMap& require_inner(Context& ctx, bool build_if_missing) {
  if (ctx.inner) return *ctx.inner;
  const auto path = inner_path(ctx);
  if (!fs::exists(path)) {
    if (!build_if_missing)
      fail(ErrorKind::MissingCache, "no inner map for this configuration at " + path.string() +
                                        "; run `kst build-inner` with the same config first");
    CacheLock lock(ctx.cache);
    save_inner_map(build_inner_functions(ctx.cfg.inner), path);
  }
  ctx.inner = load_inner_map(path);
  return *ctx.inner;
}

LKBSet require_lkb(Context& ctx, int n, bool build_if_missing) {
  const auto& map = require_inner(ctx, build_if_missing);
  const auto path = lkb_path(ctx, n);
  if (!fs::exists(path)) {
    if (!build_if_missing)
      fail(ErrorKind::MissingCache, "no LKB basis for d=" + std::to_string(ctx.cfg.d) + " n=" + std::to_string(n) +
                                        " at " + path.string() + "; run `kst --set n=" +
                                        std::to_string(n) + " build-lkb` with the same config first");
    Stopwatch sw;
    CacheLock lock(ctx.cache);
    save_lkb(lkb_build(map, HatBasis(n, ctx.cfg.d), ctx.cfg.smooth), path);
    std::fprintf(stderr, "built LKB basis d=%d n=%d in %.1fs\n", ctx.cfg.d, n, sw.seconds());
  }
  return load_lkb(path, lkb_provenance(ctx, n));
}

struct FitRow {
  std::string id;
  int n = 0;
  std::size_t samples = 0;
  std::size_t pivots = 0;
  FitResult full;
  FitResult pivotal;
};

const char* kReportHeader = "function_id,n,num_samples,num_pivots,rmse_P_full,rmse_PP_full,rmse_PP_pivotal\n";

std::string report_line(const FitRow& r) {
  return r.id + "," + std::to_string(r.n) + "," + std::to_string(r.samples) + "," + std::to_string(r.pivots) + "," +
         sci(r.full.rmse_P) + "," + sci(r.full.rmse_PP) + "," + sci(r.pivotal.rmse_PP) + "\n";
}

TestFunction function_for(const Context& ctx, const std::string& id) {
  auto f = corpus_lookup(id);
  if (f.dim != ctx.cfg.d)
    fail(ErrorKind::Config, "corpus function " + id + " is " + std::to_string(f.dim) + "D but d=" +
                                std::to_string(ctx.cfg.d));
  return f;
}

FitRow run_fit(const Context& ctx, const LKBSet& set, const DesignMatrix& design, const PivotSet& pivots,
               const TestFunction& f) {
  const auto fs_fit = sample_on_grid(f, ctx.cfg.fit_per_axis);
  const auto fs_eval = sample_on_grid(f, ctx.cfg.eval_per_axis);
  FitRow row;
  row.id = f.id;
  row.n = set.n;
  row.samples = fs_fit.size();
  row.pivots = pivots.rows.size();
  row.full = dls_fit(design, fs_fit, set.hash());
  evaluate_fit(set, row.full, ctx.cfg.eval_per_axis, fs_eval);
  row.pivotal = pivotal_fit(design, pivots, fs_fit, set.hash());
  evaluate_fit(set, row.pivotal, ctx.cfg.eval_per_axis, fs_eval);
  return row;
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

std::string stem(const Context& ctx, int n) { return "d" + std::to_string(ctx.cfg.d) + "_n" + std::to_string(n); }

// ------------------------------------------------------------ commands

int cmd_build_inner(Context& ctx) {
  CacheLock lock(ctx.cache);
  const auto map = build_inner_functions(ctx.cfg.inner);
  const auto path = inner_path(ctx);
  save_inner_map(map, path);
  print_inner_report(map, ctx.cfg.inner);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int cmd_build_lkb(Context& ctx) {
  require(ctx.cfg.d % 2 == 0, ErrorKind::Config, "LKB smoothing needs d in {2, 4, 6}");
  const auto& map = require_inner(ctx, false);
  const auto set = require_lkb(ctx, ctx.cfg.n, true);
  const auto samples = kb_samples(map, HatBasis(set.n, set.d), set.spec.N2);
  const auto basis = set.basis();
  const auto axis = grid_axis(set.spec.N2);
  std::string csv = "j,rmse_residual\n";
  double worst = 0.0;
  for (int j = 0; j < set.count(); ++j) {
    const auto fitted = tensor_on_grid(basis, set.members[static_cast<std::size_t>(j)], set.d, axis);
    std::vector<double> z(fitted.size(), 0.0);
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(samples, j); it; ++it)
      z[static_cast<std::size_t>(it.col())] = it.value();
    const double r = rmse(fitted, z);
    worst = std::max(worst, r);
    csv += std::to_string(j) + "," + sci(r) + "\n";
  }
  const auto res_path = ctx.out / ("lkb_residuals_" + stem(ctx, set.n) + ".csv");
  write_file(res_path, csv);
  std::printf("LKB basis d=%d n=%d members=%d hash=%s max_residual=%s\n", set.d, set.n, set.count(),
              hex(set.hash()).c_str(), sci(worst).c_str());
  std::printf("wrote %s and %s\n", lkb_path(ctx, set.n).string().c_str(), res_path.string().c_str());
  return 0;
}

int cmd_fit(Context& ctx, std::vector<std::string> ids) {
  if (ids.empty()) ids = ctx.cfg.corpus;
  for (const auto& id : ids) function_for(ctx, id);
  std::string csv = kReportHeader;
  if (!ids.empty()) {
    const auto set = require_lkb(ctx, ctx.cfg.n, false);
    const auto design = make_design(set, ctx.cfg.fit_per_axis, ctx.cfg.prune_tol);
    const auto pivots = pivotal_points(design, ctx.cfg.pivot_gain_ratio);
    for (const auto& id : ids) csv += report_line(run_fit(ctx, set, design, pivots, function_for(ctx, id)));
  }
  const auto path = ctx.out / ("fit_" + stem(ctx, ctx.cfg.n) + ".csv");
  write_file(path, csv);
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int cmd_pivots(Context& ctx) {
  const auto set = require_lkb(ctx, ctx.cfg.n, false);
  const auto design = make_design(set, ctx.cfg.fit_per_axis, ctx.cfg.prune_tol);
  const auto pivots = pivotal_points(design, ctx.cfg.pivot_gain_ratio);
  const auto pts = grid_points(ctx.cfg.d, ctx.cfg.fit_per_axis);
  std::string csv = "order,row";
  for (int p = 0; p < ctx.cfg.d; ++p) csv += ",x" + std::to_string(p + 1);
  csv += ",gain\n";
  for (std::size_t i = 0; i < pivots.rows.size(); ++i) {
    const auto r = static_cast<std::size_t>(pivots.rows[i]);
    csv += std::to_string(i) + "," + std::to_string(r);
    for (int p = 0; p < ctx.cfg.d; ++p) {
      char buf[32];
      std::snprintf(buf, sizeof buf, ",%.17g", pts[r * static_cast<std::size_t>(ctx.cfg.d) + static_cast<std::size_t>(p)]);
      csv += buf;
    }
    csv += "," + sci(pivots.gains[i]) + "\n";
  }
  const auto path = ctx.out / ("pivots_" + stem(ctx, ctx.cfg.n) + ".csv");
  write_file(path, csv);
  std::printf("%zu pivots from %ld samples and %zu kept columns; wrote %s\n", pivots.rows.size(),
              static_cast<long>(design.entries.rows()), design.kept.size(), path.string().c_str());
  return 0;
}

int cmd_rate(Context& ctx, std::vector<std::string> ids) {
  if (ids.empty()) ids = ctx.cfg.corpus;
  require(ctx.cfg.n_values.size() >= 2, ErrorKind::Config, "rate needs at least two n values (n_values=a,b,...)");
  for (const auto& id : ids) function_for(ctx, id);
  std::map<std::string, std::vector<FitRow>> rows;
  for (int n : ctx.cfg.n_values) {
    const auto set = require_lkb(ctx, n, false);
    const auto design = make_design(set, ctx.cfg.fit_per_axis, ctx.cfg.prune_tol);
    const auto pivots = pivotal_points(design, ctx.cfg.pivot_gain_ratio);
    for (const auto& id : ids) rows[id].push_back(run_fit(ctx, set, design, pivots, function_for(ctx, id)));
  }
  std::string csv = kReportHeader, summary = "function_id,slope_full,slope_pivotal,beta_pivotal,not_a_rate\n";
  for (const auto& id : ids) {
    std::vector<double> n, full, piv;
    for (const auto& r : rows[id]) {
      csv += report_line(r);
      n.push_back(r.n);
      full.push_back(r.full.rmse_PP);
      piv.push_back(r.pivotal.rmse_PP);
    }
    const auto sf = rate_estimate(n, full), sp = rate_estimate(n, piv);
    std::string beta = "", flag = "";
    if (n.size() >= 3) {
      const auto est = holder_exponent_estimate(n, piv);
      beta = est.not_a_rate ? "" : sci(est.beta);
      flag = est.not_a_rate ? "1" : "0";
    }
    summary += rows[id].front().id + "," + sci(sf.slope) + "," + sci(sp.slope) + "," + beta + "," + flag + "\n";
  }
  write_file(ctx.out / ("rate_d" + std::to_string(ctx.cfg.d) + ".csv"), csv);
  write_file(ctx.out / ("rate_d" + std::to_string(ctx.cfg.d) + "_slopes.csv"), summary);
  std::fputs(csv.c_str(), stdout);
  std::fputs(summary.c_str(), stdout);
  return 0;
}

struct PoissonRow {
  FitRow f;
  double u_full = 0.0;
  double u_pivotal = 0.0;
};

PoissonRow run_poisson(Context& ctx, const LKBSet& set, const PoissonBasis& pb, const DesignMatrix& design,
                       const PivotSet& pivots, const std::string& uid, bool export_field) {
  const auto [u, f] = corpus_poisson(uid);
  PoissonRow row;
  row.f = run_fit(ctx, set, design, pivots, f);
  const auto u_ref = sample_on_grid(u, ctx.cfg.eval_per_axis);
  const auto un = superpose(pb, row.f.full);
  row.u_full = rmse(un.resample(ctx.cfg.eval_per_axis), u_ref);
  row.u_pivotal = rmse(superpose(pb, row.f.pivotal).resample(ctx.cfg.eval_per_axis), u_ref);
  if (export_field) export_field_csv(un, ctx.out / ("field_" + uid + "_n" + std::to_string(set.n) + ".csv"));
  return row;
}

PoissonBasis require_poisson_basis(Context& ctx, const LKBSet& set, bool build_if_missing) {
  const auto path = ctx.cache / ("poisson_" + hex(set.hash()) + "_M" + std::to_string(ctx.cfg.poisson_M) + ".bin");
  if (!fs::exists(path)) {
    if (!build_if_missing)
      fail(ErrorKind::MissingCache, "no Poisson basis solutions at " + path.string() +
                                        "; rerun with --build-basis to compute them");
    CacheLock lock(ctx.cache);
    save_poisson_basis(basis_solutions(set, ctx.cfg.poisson_M), path);
  }
  return load_poisson_basis(path, set.hash(), ctx.cfg.poisson_M);
}

const char* kPoissonHeader =
    "function_id,n,num_samples,num_pivots,rmse_f_full,rmse_f_pivotal,rmse_u_full,rmse_u_pivotal\n";

std::string poisson_line(const PoissonRow& r) {
  return r.f.id + "," + std::to_string(r.f.n) + "," + std::to_string(r.f.samples) + "," +
         std::to_string(r.f.pivots) + "," + sci(r.f.full.rmse_PP) + "," + sci(r.f.pivotal.rmse_PP) + "," +
         sci(r.u_full) + "," + sci(r.u_pivotal) + "\n";
}

int cmd_poisson(Context& ctx, const std::string& uid, bool build_basis) {
  if (ctx.cfg.d != 2) fail(ErrorKind::Config, "unsupported dimension for poisson: d must be 2");
  corpus_poisson(uid);
  const auto set = require_lkb(ctx, ctx.cfg.n, false);
  const auto pb = require_poisson_basis(ctx, set, build_basis);
  const auto design = make_design(set, ctx.cfg.fit_per_axis, ctx.cfg.prune_tol);
  const auto pivots = pivotal_points(design, ctx.cfg.pivot_gain_ratio);
  const std::string csv = std::string(kPoissonHeader) + poisson_line(run_poisson(ctx, set, pb, design, pivots, uid, true));
  write_file(ctx.out / ("poisson_" + uid + "_n" + std::to_string(ctx.cfg.n) + ".csv"), csv);
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int cmd_bench(Context& ctx, int table) {
  std::vector<int> ns = ctx.cfg.n_values;
  if (ns.empty()) ns = {ctx.cfg.n};
  std::string csv = table == 4 ? kPoissonHeader : kReportHeader;
  for (int n : ns) {
    const auto set = require_lkb(ctx, n, true);
    const auto design = make_design(set, ctx.cfg.fit_per_axis, ctx.cfg.prune_tol);
    const auto pivots = pivotal_points(design, ctx.cfg.pivot_gain_ratio);
    if (table == 4) {
      const auto pb = require_poisson_basis(ctx, set, true);
      for (int k = 1; k <= 6; ++k)
        csv += poisson_line(run_poisson(ctx, set, pb, design, pivots, "u" + std::to_string(k), false));
    } else {
      auto ids = ctx.cfg.corpus;
      if (ids.empty()) ids = corpus_ids(ctx.cfg.d);
      for (const auto& id : ids) csv += report_line(run_fit(ctx, set, design, pivots, function_for(ctx, id)));
    }
    std::fprintf(stderr, "table %d: n=%d done\n", table, n);
  }
  const auto base = ctx.out / ("table" + std::to_string(table));
  write_file(fs::path(base.string() + ".csv"), csv);
  write_file(fs::path(base.string() + ".label"),
             "config_hash=" + hex(ctx.cfg.hash()) +
                 "\ntolerance_class=order-of-magnitude analogue; values depend on the inner-function construction "
                 "and are not comparable digit-for-digit across constructions\n" +
                 "simd=" + std::string(simd::isa_name(simd::active().isa)) + "\n");
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Domain:
    case ErrorKind::Index:
    case ErrorKind::Shape:
    case ErrorKind::Capacity:
    case ErrorKind::Incompatible:
      return 2;
    case ErrorKind::MissingCache:
      return 4;
    default:
      return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kolmogorov superposition approximation with LKB-splines"};
  app.require_subcommand(1);
  std::string config_file;
  std::vector<std::string> overrides;
  bool print_config = false;
  app.add_option("-c,--config", config_file, "flat key=value config file");
  app.add_option("-s,--set", overrides, "override a config entry (key=value), repeatable");
  app.add_flag("--print-config", print_config, "print the resolved canonical config to stderr");

  app.add_subcommand("build-inner", "build and verify the inner functions, write the inner cache");
  app.add_subcommand("build-lkb", "denoise KB-splines into the LKB cache for n");
  auto* fit = app.add_subcommand("fit", "full-grid and pivotal DLS fits; report CSV");
  std::vector<std::string> fit_ids;
  fit->add_option("ids", fit_ids, "corpus ids (default: config corpus)");
  app.add_subcommand("pivots", "select pivotal locations; pivot CSV");
  auto* rate = app.add_subcommand("rate", "fits over n_values and log-log slopes");
  std::vector<std::string> rate_ids;
  rate->add_option("ids", rate_ids, "corpus ids (default: config corpus)");
  auto* poisson = app.add_subcommand("poisson", "Poisson solution by superposition of basis solutions (d=2)");
  std::string uid;
  bool build_basis = false;
  poisson->add_option("id", uid, "solution id u1..u6")->required();
  poisson->add_flag("--build-basis", build_basis, "compute the basis solutions when not cached");
  auto* bench = app.add_subcommand("bench-table", "benchmark table over n_values: 1 = 4D, 2 = 6D, 3 = 2D right-hand sides, 4 = 2D Poisson");
  int table = 0;
  bench->add_option("table", table, "1: 4D, 2: 6D, 3: 2D right-hand sides, 4: 2D Poisson solutions")
      ->required()
      ->check(CLI::Range(1, 4));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    std::map<std::string, std::string> pairs;
    if (!config_file.empty()) pairs = RunConfig::parse_file(config_file);
    for (const auto& o : overrides) {
      auto [k, v] = split_assignment(o);
      pairs[k] = v;
    }
    if (bench->parsed()) pairs["d"] = std::to_string(table == 1 ? 4 : table == 2 ? 6 : 2);
    Context ctx{RunConfig::from_pairs(pairs), {}, {}, std::nullopt};
    ctx.cache = ctx.cfg.cache_dir;
    ctx.out = ctx.cfg.output_dir;
    if (print_config) std::fputs(ctx.cfg.to_text().c_str(), stderr);

    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "build-inner") return cmd_build_inner(ctx);
    if (name == "build-lkb") return cmd_build_lkb(ctx);
    if (name == "fit") return cmd_fit(ctx, fit_ids);
    if (name == "pivots") return cmd_pivots(ctx);
    if (name == "rate") return cmd_rate(ctx, rate_ids);
    if (name == "poisson") return cmd_poisson(ctx, uid, build_basis);
    if (name == "bench-table") return cmd_bench(ctx, table);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
