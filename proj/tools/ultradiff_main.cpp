// Command-line front end: builds the tree described by a JSON configuration
// (with flag overrides), runs one analysis, and writes deterministic CSV/JSON
// artifacts plus a manifest into the output directory.
//
// Exit codes: 0 success, 2 invalid configuration or unsupported scale,
// 3 a requested check or acceptance criterion failed, 1 unexpected error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <ultradiff/ball_table.hpp>
#include <ultradiff/checks.hpp>
#include <ultradiff/config.hpp>
#include <ultradiff/csv.hpp>
#include <ultradiff/errors.hpp>
#include <ultradiff/process.hpp>
#include <ultradiff/spectral.hpp>
#include <ultradiff/tree.hpp>
#include <ultradiff/version.hpp>
#include <ultradiff/vp_operator.hpp>
#include <ultradiff/wavelets.hpp>
#include <ultradiff/zeta.hpp>

namespace {

using nlohmann::json;
using namespace ultradiff;

// Matrix-shaped CSV artifacts stop here; beyond this the files stop being
// useful and start being a disk hazard.
constexpr std::size_t kMaxMatrixCsvRows = 1u << 20;

/// Collects artifacts for one run, writes each atomically, and finishes with
/// a manifest naming every file with its size and content hash.
class Session {
 public:
  Session(std::string command, const RunConfig& cfg) : command_(std::move(command)), cfg_(&cfg), dir_(cfg.out_dir) {
    std::filesystem::create_directories(dir_);
  }

  void emit(const std::string& name, std::string_view content) {
    write_file_atomic(dir_ / name, content);
    outputs_.push_back({name, content.size(), fnv1a_hex(content)});
  }

  void finish() {
    json m;
    m["version"] = kVersion;
    m["command"] = command_;
    m["config"] = cfg_->resolved;
    m["config_hash"] = config_hash(*cfg_);
    m["outputs"] = json::array();
    for (const auto& rec : outputs_)
      m["outputs"].push_back({{"file", rec.file}, {"bytes", rec.bytes}, {"fnv1a", rec.hash}});
    write_file_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
    std::printf("wrote %zu artifact(s) + manifest.json to %s\n", outputs_.size(), dir_.string().c_str());
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  struct Record {
    std::string file;
    std::size_t bytes;
    std::string hash;
  };
  std::string command_;
  const RunConfig* cfg_;
  std::filesystem::path dir_;
  std::vector<Record> outputs_;
};

json abscissa_json(const AbscissaEstimate& est) {
  json a;
  a["status"] = est.status == EstimateStatus::Resolved ? "resolved" : "indeterminate";
  if (est.status == EstimateStatus::Resolved) a["s0"] = est.s0;
  a["bracket_lo"] = est.bracket_lo;
  a["bracket_hi"] = est.bracket_hi;
  a["tolerance"] = est.tolerance;
  a["root_test_at_lo"] = est.root_at_lo;
  a["root_test_at_hi"] = est.root_at_hi;
  return a;
}

/// s0 for limit diagnostics: exactly 1 for the canonical (measure-aligned)
/// metric, otherwise the estimated boundary exponent when it resolves.
std::optional<double> limit_exponent(const TruncatedTree& tree) {
  if (tree.metric().kind == MetricKind::Canonical) return 1.0;
  const AbscissaEstimate est = estimate_abscissa(tree);
  if (est.status == EstimateStatus::Resolved) return est.s0;
  return std::nullopt;
}

void require_matrix_csv(std::size_t rows, const char* what) {
  if (rows > kMaxMatrixCsvRows)
    throw ScaleError(std::string(what) + " would need " + std::to_string(rows) +
                     " CSV rows, above the limit of " + std::to_string(kMaxMatrixCsvRows) +
                     "; reduce the depth");
}

// --- subcommand handlers --------------------------------------------------

int run_zeta(const RunConfig& cfg) {
  const TruncatedTree tree = config_tree(cfg);
  const ZetaPartial z = zeta_partial(tree, cfg.s, cfg.zeta.levels);
  const AbscissaEstimate est =
      estimate_abscissa(tree, cfg.zeta.abscissa_tolerance, cfg.zeta.abscissa_lo, cfg.zeta.abscissa_hi);

  CsvWriter csv{"level", "term", "cumulative"};
  for (std::size_t l = 0; l < z.level_terms.size(); ++l)
    csv.row({format_int(static_cast<long long>(l)), format_double(z.level_terms[l]), format_double(z.cumulative[l])});

  json j;
  j["s"] = z.s;
  j["levels"] = z.levels;
  j["value"] = z.value;
  j["abscissa"] = abscissa_json(est);

  Session session("zeta", cfg);
  session.emit("zeta.csv", csv.content());
  session.emit("zeta.json", j.dump(2) + "\n");
  session.finish();
  if (est.status == EstimateStatus::Resolved)
    std::printf("series value %s over %d levels; boundary exponent %s +/- %s\n", format_double(z.value).c_str(),
                z.levels, format_double(est.s0).c_str(), format_double(est.tolerance).c_str());
  else
    std::printf("series value %s over %d levels; boundary exponent not bracketed\n",
                format_double(z.value).c_str(), z.levels);
  return 0;
}

int run_measure(const RunConfig& cfg) {
  const TruncatedTree tree = config_tree(cfg);
  const ConnesMeasureTable table = connes_measure(tree, cfg.measure_max_rows);

  CsvWriter csv{"address", "level", "diameter", "measure"};
  for (const auto& row : table.rows)
    csv.row({format_address_cell(row.v), format_int(row.v.level()), format_rational(row.diameter),
             format_rational(row.measure)});

  json j;
  j["rows"] = table.rows.size();
  j["additivity_exact"] = table.additivity_exact;
  j["leaf_total"] = format_rational(table.leaf_total);
  if (tree.depth() >= 2) {
    if (const std::optional<double> s0 = limit_exponent(tree)) {
      Vertex v = tree.leaf_at(0);
      v.path.resize(std::min<std::size_t>(2, v.path.size()));
      const LimitCheckReport rep = connes_measure_limit_check(tree, v, {0.5, 0.1, 0.02}, s0);
      json lc;
      lc["address"] = format_address_cell(rep.v);
      lc["s0"] = rep.s0;
      lc["rows"] = json::array();
      for (const auto& row : rep.rows)
        lc["rows"].push_back({{"eps", row.eps},
                              {"series_ratio", row.ratio},
                              {"recursion_value", row.recursion_value},
                              {"abs_dist", row.abs_dist}});
      lc["dist_decreasing"] = rep.dist_decreasing;
      j["limit_check"] = lc;
    } else {
      j["limit_check"] = nullptr;
    }
  }

  Session session("measure", cfg);
  session.emit("measure.csv", csv.content());
  session.emit("measure.json", j.dump(2) + "\n");
  session.finish();
  std::printf("%zu balls, boundary total %s\n", table.rows.size(), format_rational(table.leaf_total).c_str());
  return 0;
}

int run_wavelets(const RunConfig& cfg) {
  const TruncatedTree tree = config_tree(cfg);
  const BallTable balls(tree);
  const WaveletBasis basis(balls);
  const std::size_t n = balls.leaf_count();

  CsvWriter csv{"support_address", "level", "j", "leaf_address", "re", "im"};
  for (std::size_t e = 0; e < basis.size(); ++e) {
    const WaveletIndex& w = basis.at(e);
    const std::string support =
        w.is_constant ? "(constant)" : format_address_cell(balls.address(w.level, w.ball));
    const std::size_t lo = w.is_constant ? 0 : balls.ball(w.level, w.ball).leaf_lo;
    const std::size_t hi = w.is_constant ? n : balls.ball(w.level, w.ball).leaf_hi;
    for (std::size_t leaf = lo; leaf < hi; ++leaf) {
      const std::complex<double> v = basis.evaluate(e, leaf);
      csv.row({support, format_int(w.is_constant ? -1 : w.level), format_int(w.j),
               format_address_cell(balls.address(balls.depth(), leaf)), format_double(v.real()),
               format_double(v.imag())});
    }
  }

  const Eigen::MatrixXcd gram = basis.gram(cfg.dense_cap);
  double gram_dev = 0.0;
  for (Eigen::Index i = 0; i < gram.rows(); ++i)
    for (Eigen::Index k = 0; k < gram.cols(); ++k)
      gram_dev = std::max(gram_dev, std::abs(gram(i, k) - (i == k ? 1.0 : 0.0)));

  json j;
  j["elements"] = basis.size();
  j["boundary_points"] = n;
  j["gram_max_deviation"] = gram_dev;

  Session session("wavelets", cfg);
  session.emit("wavelets.csv", csv.content());
  session.emit("wavelets.json", j.dump(2) + "\n");
  session.finish();
  std::printf("%zu basis elements on %zu boundary points, gram deviation %s\n", basis.size(), n,
              format_double(gram_dev).c_str());
  return 0;
}

int run_spectrum(const RunConfig& cfg) {
  const TruncatedTree tree = config_tree(cfg);
  const BallTable balls(tree);
  const WaveletBasis basis(balls);
  const VPOperator op(balls, cfg.s, parse_kernel_form(cfg.kernel_form));
  const std::vector<SpectrumRow> rows = spectrum_rows(basis, op, cfg.spectrum_dense_oracle, cfg.dense_cap);
  const BoundednessReport rep = boundedness_report(basis, op);

  CsvWriter csv{"support_address", "level", "multiplicity", "lambda_closed_form", "lambda_dense_oracle",
                "abs_diff"};
  for (const auto& r : rows) {
    const std::string support = r.is_constant ? "(constant)" : format_address_cell(r.support);
    const bool with_oracle = cfg.spectrum_dense_oracle && std::isfinite(r.lambda_oracle);
    csv.row({support, format_int(r.level), format_int(r.multiplicity), format_double(r.lambda),
             with_oracle ? format_double(r.lambda_oracle) : std::string{},
             with_oracle ? format_double(r.abs_diff) : std::string{}});
  }

  json j;
  j["s"] = rep.s;
  j["kernel_form"] = cfg.kernel_form;
  j["dense_oracle"] = cfg.spectrum_dense_oracle;
  j["lambda_sup"] = rep.lambda_sup;
  j["spectral_gap"] = rep.spectral_gap;
  j["route_max_rel_diff"] = rep.route_max_rel_diff;
  j["unscaled_variant_max_rel_diff"] = rep.variant_max_rel_diff;
  j["trend"] = detail::series_name(rep.trend);
  j["levels"] = json::array();
  for (const auto& st : rep.levels)
    j["levels"].push_back({{"level", st.level},
                           {"wavelet_count", st.wavelet_count},
                           {"lambda_min", st.lambda_min},
                           {"lambda_max", st.lambda_max}});
  j["increment_ratios"] = rep.increment_ratios;

  Session session("spectrum", cfg);
  session.emit("spectrum.csv", csv.content());
  session.emit("spectrum.json", j.dump(2) + "\n");
  session.finish();
  std::printf("%zu spectrum rows; largest eigenvalue %s, gap %s, trend %s\n", rows.size(),
              format_double(rep.lambda_sup).c_str(), format_double(rep.spectral_gap).c_str(),
              detail::series_name(rep.trend));
  return 0;
}

int run_heat(const RunConfig& cfg) {
  const TruncatedTree tree = config_tree(cfg);
  const BallTable balls(tree);
  const WaveletBasis basis(balls);
  const VPOperator op(balls, cfg.s, parse_kernel_form(cfg.kernel_form));
  const SpectralDecomposition dec = spectral_decomposition(basis, op, cfg.dense_cap);
  const std::size_t n = balls.leaf_count();
  require_matrix_csv(n * n, "the heat-kernel table");

  Session session("heat", cfg);
  json j;
  j["s"] = cfg.s;
  j["times"] = cfg.times;
  j["checks"] = json::array();
  for (std::size_t i = 0; i < cfg.times.size(); ++i) {
    const double t = cfg.times[i];
    const HeatKernel hk = heat_kernel(dec, t);
    const Eigen::MatrixXd p = hk.kernel * dec.mu.asDiagonal();
    CsvWriter csv{"x_address", "y_address", "kernel", "transition"};
    for (std::size_t x = 0; x < n; ++x) {
      const std::string xa = format_address_cell(balls.address(balls.depth(), x));
      for (std::size_t y = 0; y < n; ++y)
        csv.row({xa, format_address_cell(balls.address(balls.depth(), y)),
                 format_double(hk.kernel(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y))),
                 format_double(p(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)))});
    }
    char name[32];
    std::snprintf(name, sizeof name, "heat_%03zu.csv", i);
    session.emit(name, csv.content());

    const MarkovChecks mc = markov_checks(dec, op, t, cfg.dense_cap);
    j["checks"].push_back({{"t", t},
                           {"row_sum_max_err", mc.row_sum_max_err},
                           {"min_entry", mc.min_entry},
                           {"detailed_balance_err", mc.detailed_balance_err},
                           {"pade_oracle_max_abs_diff", mc.oracle_max_abs_diff},
                           {"chapman_kolmogorov_residual", mc.semigroup_residual},
                           {"stationarity_residual", mc.stationarity_residual},
                           {"max_imag", hk.max_imag}});
  }
  session.emit("heat.json", j.dump(2) + "\n");
  session.finish();
  std::printf("heat kernel on %zu boundary points at %zu time(s)\n", n, cfg.times.size());
  return 0;
}

int run_green(const RunConfig& cfg) {
  const TruncatedTree tree = config_tree(cfg);
  const BallTable balls(tree);
  const WaveletBasis basis(balls);
  const VPOperator op(balls, cfg.s, parse_kernel_form(cfg.kernel_form));
  const GreenFunction gf = green_function(basis, op, cfg.dense_cap);
  const std::size_t n = balls.leaf_count();
  require_matrix_csv(n * n, "the inverse-kernel table");

  CsvWriter csv{"x_address", "y_address", "value"};
  for (std::size_t x = 0; x < n; ++x) {
    const std::string xa = format_address_cell(balls.address(balls.depth(), x));
    for (std::size_t y = 0; y < n; ++y)
      csv.row({xa, format_address_cell(balls.address(balls.depth(), y)),
               format_double(gf.kernel(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)))});
  }

  json j;
  j["s"] = cfg.s;
  j["classification"] = detail::series_name(gf.classification);
  j["level_trace_terms"] = gf.level_trace_terms;
  j["trace_ratios"] = gf.trace_ratios;
  j["identity_residual"] = gf.identity_residual;
  j["max_imag"] = gf.max_imag;

  Session session("green", cfg);
  session.emit("green.csv", csv.content());
  session.emit("green.json", j.dump(2) + "\n");
  session.finish();
  std::printf("inverse kernel on %zu boundary points; trace terms %s, identity residual %s\n", n,
              detail::series_name(gf.classification), format_double(gf.identity_residual).c_str());
  return 0;
}

int run_simulate(const RunConfig& cfg) {
  const TruncatedTree tree = config_tree(cfg);
  const BallTable balls(tree);
  const WaveletBasis basis(balls);
  const VPOperator op(balls, cfg.s, parse_kernel_form(cfg.kernel_form));
  const JumpProcess jp(op);
  const std::size_t n = balls.leaf_count();
  const auto& sim = cfg.simulate;
  if (sim.start >= n)
    throw ValidationError("simulate.start " + std::to_string(sim.start) + " is out of range, the tree has " +
                          std::to_string(n) + " boundary points");
  if (sim.paths == 0) throw ValidationError("simulate.paths must be positive");

  const auto ends = jp.sample_end_states(sim.start, sim.horizon, sim.seed, sim.paths);
  std::vector<std::uint64_t> counts(n, 0);
  for (std::size_t e : ends) ++counts[e];

  json j;
  j["start"] = sim.start;
  j["start_address"] = format_address_cell(balls.address(balls.depth(), sim.start));
  j["horizon"] = sim.horizon;
  j["paths"] = sim.paths;
  j["seed"] = sim.seed;
  j["truncation_depth"] = balls.depth();
  j["boundary_points"] = n;
  j["counts"] = json::array();
  for (std::size_t k = 0; k < n; ++k)
    if (counts[k] > 0) j["counts"].push_back({k, counts[k]});

  double tv = -1.0;
  if (n <= cfg.dense_cap) {
    const SpectralDecomposition dec = spectral_decomposition(basis, op, cfg.dense_cap);
    const Eigen::MatrixXd p = transition_matrix(dec, sim.horizon);
    std::vector<double> analytic(n), empirical(n);
    for (std::size_t k = 0; k < n; ++k) {
      analytic[k] = p(static_cast<Eigen::Index>(sim.start), static_cast<Eigen::Index>(k));
      empirical[k] = static_cast<double>(counts[k]) / static_cast<double>(sim.paths);
    }
    tv = tv_distance(empirical, analytic);
    j["analytic_row"] = analytic;
    j["tv_distance"] = tv;
  } else {
    j["analytic_row"] = nullptr;
    j["tv_distance"] = nullptr;
  }

  Session session("simulate", cfg);
  session.emit("simulate.json", j.dump(2) + "\n");
  session.finish();
  if (tv >= 0.0)
    std::printf("%zu paths; empirical end-state law within total-variation %s of the analytic row\n", sim.paths,
                format_double(tv).c_str());
  else
    std::printf("%zu paths; analytic comparison skipped (%zu states exceed the dense cap)\n", sim.paths, n);
  return 0;
}

int run_check(const RunConfig& cfg, bool acceptance, std::optional<int> criterion) {
  std::vector<CheckResult> results;
  const char* kind = acceptance ? "acceptance.json" : "check.json";
  if (acceptance) {
    results = criterion ? std::vector<CheckResult>{run_acceptance_criterion(*criterion)} : run_acceptance();
  } else {
    results = run_check_suites(cfg);
  }

  bool all_passed = true;
  json j;
  j[acceptance ? "criteria" : "suites"] = json::array();
  for (const auto& r : results) {
    std::printf("[%s] %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.details.c_str());
    all_passed = all_passed && r.passed;
    j[acceptance ? "criteria" : "suites"].push_back(
        {{"name", r.name}, {"passed", r.passed}, {"details", r.details}, {"seconds", r.seconds}});
  }
  j["all_passed"] = all_passed;

  Session session("check", cfg);
  session.emit(kind, j.dump(2) + "\n");
  session.finish();
  return all_passed ? 0 : 3;
}

// --- report + entry point ---------------------------------------------------

void write_report(const std::filesystem::path& dir, const json& report) {
  // Best effort: a failing report write must not mask the run's own outcome.
  try {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "report.json", report.dump(2) + "\n");
  } catch (...) {
  }
}

std::filesystem::path fallback_out_dir(const CliOverrides& overrides) {
  if (overrides.out) return *overrides.out;
  const char* env = std::getenv(kOutDirEnvVar);
  return env && *env ? env : "out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral toolkit for truncated ultrametric Cantor sets"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path;
  CliOverrides overrides;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", overrides.out, "output directory (default: $" + std::string(kOutDirEnvVar) + " or ./out)");
  app.add_option("--seed", overrides.seed, "seed for simulation and random trees");
  app.add_option("--depth", overrides.depth, "truncation depth");
  app.add_option("--s", overrides.s, "kernel exponent s");
  app.add_option("--family", overrides.family,
                 "tree family: padic:P | level_regular:A,B,... | random_bounded:LO,HI | explicit:FILE");
  app.add_option("--metric", overrides.metric, "metric: canonical | baire");

  const char* descriptions[][2] = {
      {"zeta", "truncated geometric series and its boundary exponent"},
      {"measure", "exact ball diameters and measures"},
      {"wavelets", "orthonormal basis evaluated on the boundary"},
      {"spectrum", "closed-form eigenvalues with an optional dense oracle"},
      {"heat", "heat kernel and transition matrices at the configured times"},
      {"green", "inverse kernel on mean-zero functions and its trace trend"},
      {"simulate", "jump-process end states against the analytic law"},
      {"check", "invariant suites (or the acceptance battery)"},
  };
  for (const auto& d : descriptions) app.add_subcommand(d[0], d[1])->fallthrough();

  bool acceptance = false;
  std::optional<int> criterion;
  CLI::App* check_cmd = app.get_subcommand("check");
  check_cmd->add_flag("--acceptance", acceptance, "run the fixed acceptance battery instead of the suites");
  check_cmd->add_option("--criterion", criterion, "run a single acceptance criterion (1-11)")
      ->check(CLI::Range(1, 11));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
  json report;
  report["command"] = command;
  report["version"] = kVersion;

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    finalize_config(cfg, overrides);
  } catch (const std::exception& e) {
    report["status"] = "validation_error";
    report["exit_code"] = 2;
    report["message"] = e.what();
    write_report(fallback_out_dir(overrides), report);
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  report["config_hash"] = config_hash(cfg);
  report["out_dir"] = cfg.out_dir;

  int code = 0;
  try {
    if (command == "zeta")
      code = run_zeta(cfg);
    else if (command == "measure")
      code = run_measure(cfg);
    else if (command == "wavelets")
      code = run_wavelets(cfg);
    else if (command == "spectrum")
      code = run_spectrum(cfg);
    else if (command == "heat")
      code = run_heat(cfg);
    else if (command == "green")
      code = run_green(cfg);
    else if (command == "simulate")
      code = run_simulate(cfg);
    else
      code = run_check(cfg, acceptance || criterion.has_value(), criterion);
    report["status"] = code == 0 ? "ok" : "check_failure";
  } catch (const ValidationError& e) {
    code = 2;
    report["status"] = "validation_error";
    report["message"] = e.what();
    std::fprintf(stderr, "error: %s\n", e.what());
  } catch (const ScaleError& e) {
    code = 2;
    report["status"] = "validation_error";
    report["message"] = e.what();
    std::fprintf(stderr, "error: %s\n", e.what());
  } catch (const std::exception& e) {
    code = 1;
    report["status"] = "error";
    report["message"] = e.what();
    std::fprintf(stderr, "error: %s\n", e.what());
  }

  report["exit_code"] = code;
  report["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_report(cfg.out_dir, report);
  return code;
}
