#pragma once

// Run configuration: one JSON document drives every subcommand.  Parsing is
// strict — any key outside the schema is an error — so typos cannot silently
// fall back to defaults.  Command-line flags override individual fields after
// the file is read.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ultradiff/csv.hpp"
#include "ultradiff/errors.hpp"
#include "ultradiff/rational.hpp"
#include "ultradiff/tree.hpp"
#include "ultradiff/tree_io.hpp"

namespace ultradiff {

inline constexpr const char* kOutDirEnvVar = "ULTRADIFF_OUT_DIR";

struct ZetaConfig {
  int levels = -1;  // -1 means all levels up to the depth
  double abscissa_lo = 0.0;
  double abscissa_hi = 8.0;
  double abscissa_tolerance = 1e-4;
};

struct SimulateConfig {
  std::size_t start = 0;
  double horizon = 1.0;
  std::size_t paths = 10000;
  std::uint64_t seed = 20260815;
};

struct RunConfig {
  TreeSpec tree{PAdicFamily{2}, 3, {}};  // family, depth, metric
  std::string explicit_file;           // source file when the family is explicit
  double s = 3.0;
  std::vector<double> s_grid{1.5, 2.0, 3.0};
  std::string kernel_form = "general";  // or "diameter_aligned"
  std::vector<double> times{0.1, 1.0};
  ZetaConfig zeta;
  SimulateConfig simulate;
  std::size_t measure_max_rows = 200000;
  bool spectrum_dense_oracle = true;
  std::size_t dense_cap = 4096;
  double tolerance = 1e-9;
  std::vector<std::string> checks{"tree", "measure", "zeta", "wavelets", "operator", "heat", "green", "process"};
  std::string out_dir;  // resolved in finalize()

  nlohmann::json resolved;  // canonical form of everything above
};

namespace detail {

inline void require_keys(const nlohmann::json& obj, const char* where, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ValidationError(std::string("unknown key \"") + key + "\" in " + where);
  }
}

template <typename T>
T get_or(const nlohmann::json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad value for \"") + key + "\": " + e.what());
  }
}

inline MetricSpec parse_metric(const nlohmann::json& m) {
  require_keys(m, "tree.metric", {"kind", "per_level", "per_vertex"});
  MetricSpec spec;
  const std::string kind = get_or<std::string>(m, "kind", "canonical");
  if (kind == "canonical")
    spec.kind = MetricKind::Canonical;
  else if (kind == "baire")
    spec.kind = MetricKind::Baire;
  else if (kind == "explicit_diameters")
    spec.kind = MetricKind::ExplicitDiameters;
  else
    throw ValidationError("metric kind must be canonical, baire or explicit_diameters, got \"" + kind + "\"");
  if (m.contains("per_level")) {
    for (const auto& v : m.at("per_level")) spec.per_level.push_back(parse_rational(v.get<std::string>()));
  }
  if (m.contains("per_vertex")) {
    for (const auto& [addr, v] : m.at("per_vertex").items()) {
      const std::string key = addr.empty() ? std::string{} : format_address(parse_address(addr));
      spec.per_vertex[key] = parse_rational(v.get<std::string>());
    }
  }
  if ((!spec.per_level.empty() || !spec.per_vertex.empty()) && spec.kind != MetricKind::ExplicitDiameters)
    throw ValidationError("per_level / per_vertex diameters require kind explicit_diameters");
  return spec;
}

inline void parse_tree(const nlohmann::json& t, RunConfig& cfg) {
  require_keys(t, "tree",
               {"family", "p", "pattern", "file", "min_branching", "max_branching", "seed", "depth", "metric"});
  const std::string family = get_or<std::string>(t, "family", "padic");
  const auto reject = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (t.contains(k))
        throw ValidationError(std::string("key \"") + k + "\" does not apply to family \"" + family + "\"");
  };
  if (family == "padic") {
    reject({"pattern", "file", "min_branching", "max_branching", "seed"});
    cfg.tree.family = PAdicFamily{get_or<std::uint32_t>(t, "p", 2)};
  } else if (family == "level_regular") {
    reject({"p", "file", "min_branching", "max_branching", "seed"});
    if (!t.contains("pattern")) throw ValidationError("family level_regular needs a pattern");
    cfg.tree.family = LevelRegularFamily{t.at("pattern").get<std::vector<std::uint32_t>>()};
  } else if (family == "random_bounded") {
    reject({"p", "pattern", "file"});
    RandomBoundedFamily f;
    f.min_branching = get_or<std::uint32_t>(t, "min_branching", 2);
    f.max_branching = get_or<std::uint32_t>(t, "max_branching", 3);
    f.seed = get_or<std::uint64_t>(t, "seed", 1);
    cfg.tree.family = f;
  } else if (family == "explicit") {
    reject({"p", "pattern", "min_branching", "max_branching", "seed", "depth"});
    if (!t.contains("file")) throw ValidationError("family explicit needs a file with the tree description");
    cfg.explicit_file = t.at("file").get<std::string>();
  } else {
    throw ValidationError("family must be padic, level_regular, random_bounded or explicit, got \"" + family + "\"");
  }
  if (cfg.explicit_file.empty()) cfg.tree.depth = get_or<int>(t, "depth", 3);
  if (t.contains("metric")) cfg.tree.metric = parse_metric(t.at("metric"));
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  detail::require_keys(j, "the top level",
                       {"tree", "s", "s_grid", "kernel_form", "times", "zeta", "simulate", "measure", "spectrum",
                        "out_dir", "checks", "tolerance", "dense_cap"});
  RunConfig cfg;
  if (j.contains("tree")) detail::parse_tree(j.at("tree"), cfg);
  cfg.s = detail::get_or<double>(j, "s", cfg.s);
  cfg.s_grid = detail::get_or<std::vector<double>>(j, "s_grid", cfg.s_grid);
  cfg.kernel_form = detail::get_or<std::string>(j, "kernel_form", cfg.kernel_form);
  if (cfg.kernel_form != "general" && cfg.kernel_form != "diameter_aligned")
    throw ValidationError("kernel_form must be general or diameter_aligned, got \"" + cfg.kernel_form + "\"");
  cfg.times = detail::get_or<std::vector<double>>(j, "times", cfg.times);
  if (j.contains("zeta")) {
    const auto& z = j.at("zeta");
    detail::require_keys(z, "zeta", {"levels", "abscissa_lo", "abscissa_hi", "abscissa_tolerance"});
    cfg.zeta.levels = detail::get_or<int>(z, "levels", cfg.zeta.levels);
    cfg.zeta.abscissa_lo = detail::get_or<double>(z, "abscissa_lo", cfg.zeta.abscissa_lo);
    cfg.zeta.abscissa_hi = detail::get_or<double>(z, "abscissa_hi", cfg.zeta.abscissa_hi);
    cfg.zeta.abscissa_tolerance = detail::get_or<double>(z, "abscissa_tolerance", cfg.zeta.abscissa_tolerance);
  }
  if (j.contains("simulate")) {
    const auto& s = j.at("simulate");
    detail::require_keys(s, "simulate", {"start", "horizon", "paths", "seed"});
    cfg.simulate.start = detail::get_or<std::size_t>(s, "start", cfg.simulate.start);
    cfg.simulate.horizon = detail::get_or<double>(s, "horizon", cfg.simulate.horizon);
    cfg.simulate.paths = detail::get_or<std::size_t>(s, "paths", cfg.simulate.paths);
    cfg.simulate.seed = detail::get_or<std::uint64_t>(s, "seed", cfg.simulate.seed);
  }
  if (j.contains("measure")) {
    detail::require_keys(j.at("measure"), "measure", {"max_rows"});
    cfg.measure_max_rows = detail::get_or<std::size_t>(j.at("measure"), "max_rows", cfg.measure_max_rows);
  }
  if (j.contains("spectrum")) {
    detail::require_keys(j.at("spectrum"), "spectrum", {"dense_oracle"});
    cfg.spectrum_dense_oracle = detail::get_or<bool>(j.at("spectrum"), "dense_oracle", cfg.spectrum_dense_oracle);
  }
  cfg.out_dir = detail::get_or<std::string>(j, "out_dir", "");
  cfg.checks = detail::get_or<std::vector<std::string>>(j, "checks", cfg.checks);
  cfg.tolerance = detail::get_or<double>(j, "tolerance", cfg.tolerance);
  cfg.dense_cap = detail::get_or<std::size_t>(j, "dense_cap", cfg.dense_cap);
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config file " + path.string() + " must hold a JSON object");
  return parse_config(j);
}

struct CliOverrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> depth;
  std::optional<double> s;
  std::optional<std::string> family;
  std::optional<std::string> metric;
};

namespace detail {

inline void apply_family_override(RunConfig& cfg, const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  const auto split_ints = [&]() {
    std::vector<std::uint32_t> out;
    std::size_t pos = 0;
    while (pos <= arg.size()) {
      const auto comma = arg.find(',', pos);
      const std::string piece = arg.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      try {
        out.push_back(static_cast<std::uint32_t>(std::stoul(piece)));
      } catch (const std::exception&) {
        throw ValidationError("cannot parse \"" + piece + "\" in family argument \"" + spec + "\"");
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return out;
  };
  cfg.explicit_file.clear();
  if (name == "padic") {
    const auto v = split_ints();
    if (v.size() != 1) throw ValidationError("family padic takes one number, e.g. padic:3");
    cfg.tree.family = PAdicFamily{v[0]};
  } else if (name == "level_regular") {
    cfg.tree.family = LevelRegularFamily{split_ints()};
  } else if (name == "random_bounded") {
    const auto v = split_ints();
    if (v.size() != 2) throw ValidationError("family random_bounded takes two numbers, e.g. random_bounded:2,4");
    RandomBoundedFamily f;
    f.min_branching = v[0];
    f.max_branching = v[1];
    if (const auto* prev = std::get_if<RandomBoundedFamily>(&cfg.tree.family)) f.seed = prev->seed;
    cfg.tree.family = f;
  } else if (name == "explicit") {
    if (arg.empty()) throw ValidationError("family explicit needs a file, e.g. explicit:tree.json");
    cfg.explicit_file = arg;
  } else {
    throw ValidationError("unknown family \"" + name + "\" (padic, level_regular, random_bounded, explicit)");
  }
}

}  // namespace detail

// Applies flag overrides and freezes the canonical JSON form used for
// hashing and the manifest.
inline void finalize_config(RunConfig& cfg, const CliOverrides& o) {
  if (o.family) detail::apply_family_override(cfg, *o.family);
  if (o.metric) {
    if (*o.metric == "canonical")
      cfg.tree.metric = MetricSpec{};
    else if (*o.metric == "baire")
      cfg.tree.metric = MetricSpec{MetricKind::Baire, {}, {}};
    else
      throw ValidationError("--metric accepts canonical or baire");
  }
  if (o.depth) {
    if (!cfg.explicit_file.empty()) throw ValidationError("depth is fixed by the explicit tree file");
    cfg.tree.depth = *o.depth;
  }
  if (o.s) cfg.s = *o.s;
  if (o.seed) {
    cfg.simulate.seed = *o.seed;
    if (auto* f = std::get_if<RandomBoundedFamily>(&cfg.tree.family)) f->seed = *o.seed;
  }
  if (o.out) cfg.out_dir = *o.out;
  if (cfg.out_dir.empty()) {
    const char* env = std::getenv(kOutDirEnvVar);
    cfg.out_dir = env && *env ? env : "out";
  }

  nlohmann::json t;
  if (!cfg.explicit_file.empty()) {
    t["family"] = "explicit";
    t["file"] = cfg.explicit_file;
  } else if (const auto* p = std::get_if<PAdicFamily>(&cfg.tree.family)) {
    t["family"] = "padic";
    t["p"] = p->p;
  } else if (const auto* lr = std::get_if<LevelRegularFamily>(&cfg.tree.family)) {
    t["family"] = "level_regular";
    t["pattern"] = lr->pattern;
  } else if (const auto* rb = std::get_if<RandomBoundedFamily>(&cfg.tree.family)) {
    t["family"] = "random_bounded";
    t["min_branching"] = rb->min_branching;
    t["max_branching"] = rb->max_branching;
    t["seed"] = rb->seed;
  }
  if (cfg.explicit_file.empty()) t["depth"] = cfg.tree.depth;
  nlohmann::json metric;
  metric["kind"] = cfg.tree.metric.kind == MetricKind::Canonical  ? "canonical"
                   : cfg.tree.metric.kind == MetricKind::Baire    ? "baire"
                                                                  : "explicit_diameters";
  if (!cfg.tree.metric.per_level.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : cfg.tree.metric.per_level) arr.push_back(format_rational(r));
    metric["per_level"] = arr;
  }
  if (!cfg.tree.metric.per_vertex.empty()) {
    nlohmann::json obj = nlohmann::json::object();
    for (const auto& [addr, r] : cfg.tree.metric.per_vertex) obj[addr] = format_rational(r);
    metric["per_vertex"] = obj;
  }
  t["metric"] = metric;

  nlohmann::json r;
  r["tree"] = t;
  r["s"] = cfg.s;
  r["s_grid"] = cfg.s_grid;
  r["kernel_form"] = cfg.kernel_form;
  r["times"] = cfg.times;
  r["zeta"] = {{"levels", cfg.zeta.levels},
               {"abscissa_lo", cfg.zeta.abscissa_lo},
               {"abscissa_hi", cfg.zeta.abscissa_hi},
               {"abscissa_tolerance", cfg.zeta.abscissa_tolerance}};
  r["simulate"] = {{"start", cfg.simulate.start},
                   {"horizon", cfg.simulate.horizon},
                   {"paths", cfg.simulate.paths},
                   {"seed", cfg.simulate.seed}};
  r["measure"] = {{"max_rows", cfg.measure_max_rows}};
  r["spectrum"] = {{"dense_oracle", cfg.spectrum_dense_oracle}};
  r["checks"] = cfg.checks;
  r["tolerance"] = cfg.tolerance;
  r["dense_cap"] = cfg.dense_cap;
  cfg.resolved = std::move(r);
}

// The tree named by the configuration; explicit families load their file.
inline TruncatedTree config_tree(const RunConfig& cfg) {
  if (!cfg.explicit_file.empty()) {
    TreeSpec spec;
    ExplicitFamily fam = load_explicit_tree(cfg.explicit_file);
    spec.depth = static_cast<int>(fam.child_counts.size());
    spec.family = std::move(fam);
    spec.metric = cfg.tree.metric;
    return build_tree(spec);
  }
  return build_tree(cfg.tree);
}

inline std::string config_hash(const RunConfig& cfg) { return fnv1a_hex(cfg.resolved.dump()); }

}  // namespace ultradiff
