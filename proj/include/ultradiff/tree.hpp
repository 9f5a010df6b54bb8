#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "ultradiff/address.hpp"
#include "ultradiff/errors.hpp"
#include "ultradiff/prng.hpp"
#include "ultradiff/rational.hpp"

namespace ultradiff {

// ---------------------------------------------------------------------------
// Tree families and build parameters
// ---------------------------------------------------------------------------

enum class MetricKind {
  Canonical,          // diam(root)=1, diam(child)=diam(parent)/childCount; equals the equity measure
  Baire,              // diam = 2^-level
  ExplicitDiameters,  // user-supplied, per level or per vertex; must be equitising
};

struct MetricSpec {
  MetricKind kind = MetricKind::Canonical;
  std::vector<Rational> per_level;                // levels 0..depth when non-empty
  std::map<std::string, Rational> per_vertex;     // address -> diameter, must cover every vertex
};

struct PAdicFamily {
  std::uint32_t p = 2;
};

/// Branching repeats the pattern by level: level l has pattern[l % size] children.
struct LevelRegularFamily {
  std::vector<std::uint32_t> pattern;
};

/// Fully explicit structure: child_counts[l][i] is the child count of the i-th
/// vertex (lexicographic) at level l. Every leaf sits at the final level.
struct ExplicitFamily {
  std::vector<std::vector<std::uint32_t>> child_counts;
};

/// Branching drawn uniformly from {min_branching..max_branching} per internal
/// vertex, one splitmix64 draw per vertex in breadth-first order.
struct RandomBoundedFamily {
  std::uint32_t min_branching = 2;
  std::uint32_t max_branching = 2;
  std::uint64_t seed = 0;
};

using TreeFamily = std::variant<PAdicFamily, LevelRegularFamily, ExplicitFamily, RandomBoundedFamily>;

struct TreeSpec {
  TreeFamily family;
  int depth = 1;
  MetricSpec metric;
};

struct Ball {
  Vertex vertex;
  Rational diameter;
  Rational measure;
  std::uint32_t child_count = 0;  // 0 at the leaf level
};

// ---------------------------------------------------------------------------
// TruncatedTree
// ---------------------------------------------------------------------------

/// A Cantor set truncated at depth L. Vertices are balls, level-L vertices are
/// the boundary points carrying functions. Two storage modes: level-uniform
/// families keep per-level tables only (so depth-20 p-adic trees stay cheap);
/// irregular families store every vertex. All diameters and measures are exact
/// rationals; measures follow the equity recursion, which is exactly the
/// Connes measure of an equitising metric.
class TruncatedTree {
 public:
  static constexpr std::uint64_t kDefaultMaterializeCap = 2'000'000;

  int depth() const { return depth_; }
  const MetricSpec& metric() const { return metric_; }
  bool level_uniform() const { return uniform_; }
  /// Exact everywhere-equality of measure and diameter; decides whether the
  /// diameter-aligned kernel form is admissible.
  bool aligned() const { return aligned_; }

  std::uint32_t branching_at(int level) const {
    require_level(level, depth_ - 1);
    if (!uniform_) throw ValidationError("branching_at requires a level-uniform tree");
    return level_branching_[static_cast<std::size_t>(level)];
  }

  BigInt vertex_count(int level) const {
    require_level(level, depth_);
    if (uniform_) return level_count_[static_cast<std::size_t>(level)];
    return BigInt(nodes_[static_cast<std::size_t>(level)].size());
  }

  BigInt total_vertex_count() const {
    BigInt total = 0;
    for (int l = 0; l <= depth_; ++l) total += vertex_count(l);
    return total;
  }

  BigInt leaf_count() const { return vertex_count(depth_); }

  /// Leaf count as a size, or ScaleError when it exceeds `cap`.
  std::size_t leaf_count_capped(std::uint64_t cap) const {
    const BigInt n = leaf_count();
    if (n > cap)
      throw ScaleError("tree has " + n.str() + " boundary points, exceeding the cap of " + std::to_string(cap));
    return n.convert_to<std::size_t>();
  }

  std::uint32_t child_count(const Vertex& v) const {
    validate_vertex(v);
    if (v.level() == depth_) return 0;
    if (uniform_) return level_branching_[static_cast<std::size_t>(v.level())];
    return nodes_[static_cast<std::size_t>(v.level())][locate(v)].child_count;
  }

  Rational diameter(const Vertex& v) const {
    validate_vertex(v);
    if (uniform_) return level_diam_[static_cast<std::size_t>(v.level())];
    return node_diam_[static_cast<std::size_t>(v.level())][locate(v)];
  }

  Rational measure(const Vertex& v) const {
    validate_vertex(v);
    if (uniform_) return level_meas_[static_cast<std::size_t>(v.level())];
    return node_meas_[static_cast<std::size_t>(v.level())][locate(v)];
  }

  Ball ball(const Vertex& v) const { return Ball{v, diameter(v), measure(v), child_count(v)}; }

  /// Ultrametric distance between boundary points: 0 when equal, else the
  /// diameter of the smallest ball containing both.
  Rational distance(const Vertex& x, const Vertex& y) const {
    require_leaf(x);
    require_leaf(y);
    if (x == y) return Rational(0);
    return diameter(join(x, y));
  }

  void validate_vertex(const Vertex& v) const {
    if (v.level() > depth_)
      throw ValidationError("address \"" + format_address(v) + "\" is deeper than the tree depth " +
                            std::to_string(depth_));
    if (uniform_) {
      for (std::size_t i = 0; i < v.path.size(); ++i)
        if (v.path[i] >= level_branching_[i])
          throw ValidationError("address \"" + format_address(v) + "\" has child index " +
                                std::to_string(v.path[i]) + " out of range at level " + std::to_string(i));
    } else {
      locate(v);  // throws with a precise message
    }
  }

  void require_leaf(const Vertex& v) const {
    if (v.level() != depth_)
      throw ValidationError("address \"" + format_address(v) + "\" is not a boundary point of a depth-" +
                            std::to_string(depth_) + " tree");
    validate_vertex(v);
  }

  // --- leaf indexing (lexicographic by address) ---

  std::uint64_t leaf_index(const Vertex& v) const {
    require_leaf(v);
    if (!uniform_) return locate(v);
    std::uint64_t idx = 0;
    for (int l = 0; l < depth_; ++l) idx = idx * level_branching_[static_cast<std::size_t>(l)] + v.path[static_cast<std::size_t>(l)];
    return idx;
  }

  Vertex leaf_at(std::uint64_t index) const {
    if (BigInt(index) >= leaf_count()) throw ValidationError("leaf index out of range");
    Vertex v;
    v.path.resize(static_cast<std::size_t>(depth_));
    if (uniform_) {
      std::uint64_t rem = index;
      for (int l = depth_ - 1; l >= 0; --l) {
        const std::uint32_t b = level_branching_[static_cast<std::size_t>(l)];
        v.path[static_cast<std::size_t>(l)] = static_cast<std::uint32_t>(rem % b);
        rem /= b;
      }
    } else {
      std::uint64_t idx = index;
      for (int l = depth_; l > 0; --l) {
        const Node& n = nodes_[static_cast<std::size_t>(l)][idx];
        v.path[static_cast<std::size_t>(l - 1)] = n.digit;
        idx = n.parent;
      }
    }
    return v;
  }

  /// Descendants of `v` at level k >= level(v), as an exact count.
  BigInt descendant_count(const Vertex& v, int k) const {
    validate_vertex(v);
    require_level(k, depth_);
    if (k < v.level()) throw ValidationError("descendant level above the vertex");
    if (uniform_) {
      BigInt n = 1;
      for (int l = v.level(); l < k; ++l) n *= level_branching_[static_cast<std::size_t>(l)];
      return n;
    }
    const auto [lo, hi] = descendant_range(v, k);
    return BigInt(hi - lo);
  }

  /// Contiguous node-index range of v's descendants at level k (explicit mode).
  std::pair<std::uint64_t, std::uint64_t> descendant_range(const Vertex& v, int k) const {
    if (uniform_) throw ValidationError("descendant_range requires explicit storage");
    std::uint64_t lo = locate(v), hi = lo + 1;
    for (int l = v.level(); l < k; ++l) {
      const auto& level = nodes_[static_cast<std::size_t>(l)];
      lo = level[lo].first_child;
      hi = (hi == level.size()) ? nodes_[static_cast<std::size_t>(l + 1)].size() : level[hi].first_child;
    }
    return {lo, hi};
  }

  // --- explicit-storage accessors (throw in uniform mode) ---

  std::size_t node_count(int level) const {
    require_explicit();
    require_level(level, depth_);
    return nodes_[static_cast<std::size_t>(level)].size();
  }
  const Rational& node_diameter(int level, std::uint64_t i) const {
    require_explicit();
    return node_diam_[static_cast<std::size_t>(level)][i];
  }
  const Rational& node_measure(int level, std::uint64_t i) const {
    require_explicit();
    return node_meas_[static_cast<std::size_t>(level)][i];
  }
  std::uint32_t node_child_count(int level, std::uint64_t i) const {
    require_explicit();
    return nodes_[static_cast<std::size_t>(level)][i].child_count;
  }

  Vertex node_address(int level, std::uint64_t i) const {
    require_explicit();
    require_level(level, depth_);
    Vertex v;
    v.path.resize(static_cast<std::size_t>(level));
    std::uint64_t idx = i;
    for (int l = level; l > 0; --l) {
      const Node& n = nodes_[static_cast<std::size_t>(l)][idx];
      v.path[static_cast<std::size_t>(l - 1)] = n.digit;
      idx = n.parent;
    }
    return v;
  }

  /// All vertices at a level; guarded so a depth-20 p-adic tree cannot be
  /// enumerated by accident.
  std::vector<Vertex> vertices_at_level(int level, std::uint64_t cap = kDefaultMaterializeCap) const {
    require_level(level, depth_);
    const BigInt count = vertex_count(level);
    if (count > cap)
      throw ScaleError("level " + std::to_string(level) + " holds " + count.str() +
                       " vertices, exceeding the cap of " + std::to_string(cap));
    std::vector<Vertex> out;
    out.reserve(count.convert_to<std::size_t>());
    if (uniform_) {
      Vertex v;
      v.path.assign(static_cast<std::size_t>(level), 0);
      while (true) {
        out.push_back(v);
        int l = level - 1;
        for (; l >= 0; --l) {
          if (++v.path[static_cast<std::size_t>(l)] < level_branching_[static_cast<std::size_t>(l)]) break;
          v.path[static_cast<std::size_t>(l)] = 0;
        }
        if (l < 0) break;
      }
    } else {
      for (std::uint64_t i = 0; i < nodes_[static_cast<std::size_t>(level)].size(); ++i)
        out.push_back(node_address(level, i));
    }
    return out;
  }

  /// Leftmost vertex at a level; in a level-uniform tree it represents the
  /// whole level (all siblings share diameter, measure, and branching).
  Vertex representative_vertex(int level) const {
    require_level(level, depth_);
    Vertex v;
    v.path.assign(static_cast<std::size_t>(level), 0);
    return v;
  }

  friend TruncatedTree build_tree(const TreeSpec& spec, std::uint64_t materialize_cap);
  friend TruncatedTree materialize(const TruncatedTree& tree, std::uint64_t cap);

 private:
  struct Node {
    std::uint64_t first_child = 0;
    std::uint64_t parent = 0;
    std::uint32_t digit = 0;
    std::uint32_t child_count = 0;
  };

  void require_level(int level, int max_level) const {
    if (level < 0 || level > max_level)
      throw ValidationError("level " + std::to_string(level) + " out of range [0, " + std::to_string(max_level) + "]");
  }

  void require_explicit() const {
    if (uniform_) throw ValidationError("operation requires explicit per-vertex storage");
  }

  std::uint64_t locate(const Vertex& v) const {
    std::uint64_t idx = 0;
    for (std::size_t l = 0; l < v.path.size(); ++l) {
      const Node& n = nodes_[l][idx];
      if (v.path[l] >= n.child_count)
        throw ValidationError("address \"" + format_address(v) + "\" has child index " +
                              std::to_string(v.path[l]) + " out of range at level " + std::to_string(l));
      idx = n.first_child + v.path[l];
    }
    return idx;
  }

  int depth_ = 0;
  MetricSpec metric_;
  bool uniform_ = false;
  bool aligned_ = false;

  // uniform mode
  std::vector<std::uint32_t> level_branching_;  // size depth
  std::vector<Rational> level_diam_;            // size depth+1
  std::vector<Rational> level_meas_;
  std::vector<BigInt> level_count_;

  // explicit mode
  std::vector<std::vector<Node>> nodes_;        // size depth+1
  std::vector<std::vector<Rational>> node_diam_;
  std::vector<std::vector<Rational>> node_meas_;
};

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

namespace detail {

inline void validate_metric_per_level(const std::vector<Rational>& d, int depth) {
  if (static_cast<int>(d.size()) != depth + 1)
    throw ValidationError("explicit per-level diameters need depth+1 values, got " + std::to_string(d.size()));
  for (int l = 0; l <= depth; ++l) {
    if (d[static_cast<std::size_t>(l)] <= 0) throw ValidationError("diameters must be positive");
    if (l > 0 && d[static_cast<std::size_t>(l)] >= d[static_cast<std::size_t>(l - 1)])
      throw ValidationError("explicit diameters must strictly decrease with level; violated at level " +
                            std::to_string(l));
  }
}

inline std::vector<std::uint32_t> uniform_branching(const TreeSpec& spec) {
  std::vector<std::uint32_t> b;
  if (const auto* padic = std::get_if<PAdicFamily>(&spec.family)) {
    if (padic->p < 2) throw ValidationError("p-adic branching requires p >= 2, got " + std::to_string(padic->p));
    b.assign(static_cast<std::size_t>(spec.depth), padic->p);
  } else if (const auto* lr = std::get_if<LevelRegularFamily>(&spec.family)) {
    if (lr->pattern.empty()) throw ValidationError("level-regular pattern must be non-empty");
    for (auto x : lr->pattern)
      if (x < 2) throw ValidationError("level-regular pattern entries must be >= 2, got " + std::to_string(x));
    for (int l = 0; l < spec.depth; ++l) b.push_back(lr->pattern[static_cast<std::size_t>(l) % lr->pattern.size()]);
  }
  return b;
}

}  // namespace detail

/// Builds the truncated tree for a spec. Level-uniform families with a
/// per-level metric stay in per-level storage; anything per-vertex (explicit
/// or random structure, per-vertex diameters) materializes every vertex,
/// guarded by `materialize_cap`.
inline TruncatedTree build_tree(const TreeSpec& spec,
                                std::uint64_t materialize_cap = TruncatedTree::kDefaultMaterializeCap) {
  if (spec.depth < 1) throw ValidationError("tree depth must be >= 1, got " + std::to_string(spec.depth));
  if (spec.depth > 64) throw ValidationError("tree depth capped at 64, got " + std::to_string(spec.depth));
  if (spec.metric.kind == MetricKind::ExplicitDiameters && spec.metric.per_level.empty() &&
      spec.metric.per_vertex.empty())
    throw ValidationError("explicit-diameters metric needs per-level or per-vertex values");
  if (spec.metric.kind != MetricKind::ExplicitDiameters &&
      (!spec.metric.per_level.empty() || !spec.metric.per_vertex.empty()))
    throw ValidationError("diameter values are only accepted with the explicit-diameters metric");

  TruncatedTree t;
  t.depth_ = spec.depth;
  t.metric_ = spec.metric;

  const bool uniform_family =
      std::holds_alternative<PAdicFamily>(spec.family) || std::holds_alternative<LevelRegularFamily>(spec.family);
  const bool per_vertex_metric = !spec.metric.per_vertex.empty();
  t.uniform_ = uniform_family && !per_vertex_metric;

  if (t.uniform_) {
    t.level_branching_ = detail::uniform_branching(spec);
    t.level_count_.assign(static_cast<std::size_t>(spec.depth) + 1, BigInt(1));
    t.level_meas_.assign(static_cast<std::size_t>(spec.depth) + 1, Rational(1));
    for (int l = 0; l < spec.depth; ++l) {
      t.level_count_[static_cast<std::size_t>(l + 1)] =
          t.level_count_[static_cast<std::size_t>(l)] * t.level_branching_[static_cast<std::size_t>(l)];
      t.level_meas_[static_cast<std::size_t>(l + 1)] =
          t.level_meas_[static_cast<std::size_t>(l)] / t.level_branching_[static_cast<std::size_t>(l)];
    }
    switch (spec.metric.kind) {
      case MetricKind::Canonical:
        t.level_diam_ = t.level_meas_;
        break;
      case MetricKind::Baire:
        t.level_diam_.assign(static_cast<std::size_t>(spec.depth) + 1, Rational(1));
        for (int l = 1; l <= spec.depth; ++l)
          t.level_diam_[static_cast<std::size_t>(l)] = t.level_diam_[static_cast<std::size_t>(l - 1)] / 2;
        break;
      case MetricKind::ExplicitDiameters:
        detail::validate_metric_per_level(spec.metric.per_level, spec.depth);
        t.level_diam_ = spec.metric.per_level;
        break;
    }
    t.aligned_ = true;
    for (int l = 0; l <= spec.depth; ++l)
      if (t.level_diam_[static_cast<std::size_t>(l)] != t.level_meas_[static_cast<std::size_t>(l)]) {
        t.aligned_ = false;
        break;
      }
    return t;
  }

  // Explicit storage: derive child counts per level, then fill nodes.
  std::vector<std::vector<std::uint32_t>> counts;
  if (const auto* ex = std::get_if<ExplicitFamily>(&spec.family)) {
    counts = ex->child_counts;
    if (static_cast<int>(counts.size()) != spec.depth)
      throw ValidationError("explicit tree provides " + std::to_string(counts.size()) +
                            " levels of child counts for depth " + std::to_string(spec.depth));
  } else if (const auto* rb = std::get_if<RandomBoundedFamily>(&spec.family)) {
    if (rb->min_branching < 2)
      throw ValidationError("random tree needs min branching >= 2, got " + std::to_string(rb->min_branching));
    if (rb->max_branching < rb->min_branching)
      throw ValidationError("random tree needs max branching >= min branching");
    SplitMix64 rng(rb->seed);
    const std::uint64_t span = rb->max_branching - rb->min_branching + 1ULL;
    std::uint64_t level_size = 1;
    for (int l = 0; l < spec.depth; ++l) {
      std::vector<std::uint32_t> row(level_size);
      std::uint64_t next_size = 0;
      for (auto& c : row) {
        c = rb->min_branching + static_cast<std::uint32_t>(span == 1 ? 0 : rng.next_below(span));
        next_size += c;
      }
      counts.push_back(std::move(row));
      level_size = next_size;
      if (level_size > materialize_cap)
        throw ScaleError("random tree exceeds the materialize cap of " + std::to_string(materialize_cap) +
                         " at level " + std::to_string(l + 1));
    }
  } else {
    // Level-uniform family forced into explicit storage by a per-vertex metric.
    const auto branching = detail::uniform_branching(spec);
    std::uint64_t level_size = 1;
    for (int l = 0; l < spec.depth; ++l) {
      counts.emplace_back(level_size, branching[static_cast<std::size_t>(l)]);
      level_size *= branching[static_cast<std::size_t>(l)];
      if (level_size > materialize_cap)
        throw ScaleError("tree exceeds the materialize cap of " + std::to_string(materialize_cap));
    }
  }

  std::uint64_t expected = 1, total = 1;
  for (int l = 0; l < spec.depth; ++l) {
    const auto& row = counts[static_cast<std::size_t>(l)];
    if (row.size() != expected)
      throw ValidationError("level " + std::to_string(l) + " lists " + std::to_string(row.size()) +
                            " child counts but has " + std::to_string(expected) + " vertices");
    std::uint64_t next = 0;
    for (auto c : row) {
      if (c < 2)
        throw ValidationError("every internal vertex needs >= 2 children; found " + std::to_string(c) +
                              " at level " + std::to_string(l));
      next += c;
    }
    expected = next;
    total += next;
    if (total > materialize_cap)
      throw ScaleError("tree exceeds the materialize cap of " + std::to_string(materialize_cap));
  }

  t.nodes_.resize(static_cast<std::size_t>(spec.depth) + 1);
  t.node_diam_.resize(static_cast<std::size_t>(spec.depth) + 1);
  t.node_meas_.resize(static_cast<std::size_t>(spec.depth) + 1);
  t.nodes_[0].push_back({0, 0, 0, counts[0][0]});

  Rational root_diam(1);
  if (spec.metric.kind == MetricKind::ExplicitDiameters) {
    if (!spec.metric.per_level.empty()) {
      detail::validate_metric_per_level(spec.metric.per_level, spec.depth);
      root_diam = spec.metric.per_level[0];
    } else {
      const auto it = spec.metric.per_vertex.find("");
      if (it != spec.metric.per_vertex.end()) root_diam = it->second;
    }
  }
  t.node_diam_[0].push_back(root_diam);
  t.node_meas_[0].push_back(Rational(1));

  for (int l = 0; l < spec.depth; ++l) {
    const auto& row = counts[static_cast<std::size_t>(l)];
    auto& cur = t.nodes_[static_cast<std::size_t>(l)];
    auto& nxt = t.nodes_[static_cast<std::size_t>(l + 1)];
    auto& nxt_diam = t.node_diam_[static_cast<std::size_t>(l + 1)];
    auto& nxt_meas = t.node_meas_[static_cast<std::size_t>(l + 1)];
    std::uint64_t next_size = 0;
    for (auto c : row) next_size += c;
    nxt.reserve(next_size);
    nxt_diam.reserve(next_size);
    nxt_meas.reserve(next_size);
    std::uint64_t offset = 0;
    for (std::uint64_t i = 0; i < cur.size(); ++i) {
      cur[i].child_count = row[i];
      cur[i].first_child = offset;
      const Rational parent_meas = t.node_meas_[static_cast<std::size_t>(l)][i];
      const Rational child_meas = parent_meas / row[i];
      for (std::uint32_t d = 0; d < row[i]; ++d) {
        nxt.push_back({0, i, d, 0});
        nxt_meas.push_back(child_meas);
        switch (spec.metric.kind) {
          case MetricKind::Canonical:
            nxt_diam.push_back(t.node_diam_[static_cast<std::size_t>(l)][i] / row[i]);
            break;
          case MetricKind::Baire:
            nxt_diam.push_back(Rational(1, BigInt(1) << (l + 1)));
            break;
          case MetricKind::ExplicitDiameters:
            nxt_diam.push_back(Rational(0));  // filled below
            break;
        }
      }
      offset += row[i];
    }
  }

  if (spec.metric.kind == MetricKind::ExplicitDiameters) {
    if (!spec.metric.per_level.empty()) {
      for (int l = 1; l <= spec.depth; ++l)
        t.node_diam_[static_cast<std::size_t>(l)].assign(t.nodes_[static_cast<std::size_t>(l)].size(),
                                                         spec.metric.per_level[static_cast<std::size_t>(l)]);
    } else {
      for (int l = 1; l <= spec.depth; ++l) {
        for (std::uint64_t i = 0; i < t.nodes_[static_cast<std::size_t>(l)].size(); ++i) {
          const std::string addr = format_address(t.node_address(l, i));
          const auto it = spec.metric.per_vertex.find(addr);
          if (it == spec.metric.per_vertex.end())
            throw ValidationError("explicit per-vertex diameters missing address \"" + addr + "\"");
          if (it->second <= 0) throw ValidationError("diameters must be positive at \"" + addr + "\"");
          t.node_diam_[static_cast<std::size_t>(l)][i] = it->second;
        }
      }
      // Equitising requires siblings to share one diameter, strictly below the parent's.
      for (int l = 1; l <= spec.depth; ++l) {
        const auto& level = t.nodes_[static_cast<std::size_t>(l)];
        for (std::uint64_t i = 0; i < level.size(); ++i) {
          const Rational& d = t.node_diam_[static_cast<std::size_t>(l)][i];
          const Rational& pd = t.node_diam_[static_cast<std::size_t>(l - 1)][level[i].parent];
          if (d >= pd)
            throw ValidationError("diameter at \"" + format_address(t.node_address(l, i)) +
                                  "\" does not strictly decrease below its parent");
          if (level[i].digit > 0 && d != t.node_diam_[static_cast<std::size_t>(l)][i - 1])
            throw ValidationError("siblings at \"" + format_address(t.node_address(l, i)) +
                                  "\" carry different diameters; the metric must be equitising");
        }
      }
    }
  }

  t.aligned_ = true;
  for (int l = 0; l <= spec.depth && t.aligned_; ++l)
    for (std::uint64_t i = 0; i < t.nodes_[static_cast<std::size_t>(l)].size(); ++i)
      if (t.node_diam_[static_cast<std::size_t>(l)][i] != t.node_meas_[static_cast<std::size_t>(l)][i]) {
        t.aligned_ = false;
        break;
      }
  return t;
}

/// Rebuilds any tree in explicit per-vertex storage (tests exercise the
/// equity recursion vertex by vertex this way).
inline TruncatedTree materialize(const TruncatedTree& tree, std::uint64_t cap = TruncatedTree::kDefaultMaterializeCap) {
  if (!tree.level_uniform()) return tree;
  if (tree.total_vertex_count() > cap)
    throw ScaleError("tree has " + tree.total_vertex_count().str() + " vertices, exceeding the cap of " +
                     std::to_string(cap));
  TreeSpec spec;
  ExplicitFamily fam;
  std::uint64_t level_size = 1;
  for (int l = 0; l < tree.depth(); ++l) {
    fam.child_counts.emplace_back(level_size, tree.branching_at(l));
    level_size *= tree.branching_at(l);
  }
  spec.family = std::move(fam);
  spec.depth = tree.depth();
  spec.metric.kind = MetricKind::ExplicitDiameters;
  for (int l = 0; l <= tree.depth(); ++l)
    spec.metric.per_level.push_back(tree.diameter(tree.representative_vertex(l)));
  TruncatedTree out = build_tree(spec, cap);
  out.metric_ = tree.metric();
  return out;
}

}  // namespace ultradiff
