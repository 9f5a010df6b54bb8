#pragma once

// Flat, level-by-level index of every ball in a truncated tree, with
// contiguous leaf ranges.  Leaves are numbered lexicographically by address,
// so the leaves inside any ball form a contiguous interval; this is what makes
// matrix-free transforms and operator application cheap.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "ultradiff/address.hpp"
#include "ultradiff/errors.hpp"
#include "ultradiff/tree.hpp"

namespace ultradiff {

struct BallRec {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t leaf_lo = 0;          // first leaf index inside this ball
  std::size_t leaf_hi = 0;          // one past the last leaf index
  std::size_t first_child = kNone;  // index into the next level's record list
  std::size_t parent = kNone;       // index into the previous level's list
  std::uint32_t digit = 0;          // position among the parent's children
  std::uint32_t n_children = 0;     // 0 for bottom-level balls
  double diam = 0.0;
  double meas = 0.0;
};

class BallTable {
 public:
  explicit BallTable(const TruncatedTree& tree, std::size_t cap = TruncatedTree::kDefaultMaterializeCap)
      : depth_(tree.depth()), aligned_(tree.aligned()) {
    if (tree.total_vertex_count() > BigInt(cap))
      throw ScaleError("ball table would hold " + tree.total_vertex_count().str() + " balls, cap is " +
                       std::to_string(cap));
    levels_.resize(static_cast<std::size_t>(depth_) + 1);
    if (tree.level_uniform())
      build_uniform(tree);
    else
      build_explicit(tree);
    leaf_count_ = levels_.back().size();
  }

  int depth() const { return depth_; }
  bool aligned() const { return aligned_; }  // diameter equals measure on every ball
  std::size_t leaf_count() const { return leaf_count_; }
  std::size_t ball_count() const {
    std::size_t n = 0;
    for (const auto& lv : levels_) n += lv.size();
    return n;
  }
  const std::vector<BallRec>& level(int l) const { return levels_.at(static_cast<std::size_t>(l)); }
  const BallRec& ball(int l, std::size_t idx) const { return levels_.at(static_cast<std::size_t>(l)).at(idx); }

  // Reconstructs the dot address of a ball by walking parent links.
  Vertex address(int level, std::size_t idx) const {
    Vertex v;
    v.path.resize(static_cast<std::size_t>(level));
    std::size_t cur = idx;
    for (int l = level; l > 0; --l) {
      const BallRec& r = ball(l, cur);
      v.path[static_cast<std::size_t>(l) - 1] = r.digit;
      cur = r.parent;
    }
    return v;
  }

  // Index of the ball with the given address within its level's record list.
  std::size_t locate(const Vertex& v) const {
    if (v.level() > depth_) throw ValidationError("address " + format_address(v) + " is deeper than the tree");
    std::size_t cur = 0;
    for (std::size_t l = 0; l < v.path.size(); ++l) {
      const BallRec& r = ball(static_cast<int>(l), cur);
      if (v.path[l] >= r.n_children)
        throw ValidationError("address " + format_address(v) + " leaves the tree at level " + std::to_string(l + 1));
      cur = r.first_child + v.path[l];
    }
    return cur;
  }

  // Ball index (within level lvl) of the ancestor of the given leaf.
  std::size_t ancestor(std::size_t leaf, int lvl) const {
    std::size_t cur = leaf;
    for (int l = depth_; l > lvl; --l) cur = ball(l, cur).parent;
    return cur;
  }

  // Child slot taken when descending from the level-lvl ancestor of the leaf.
  std::uint32_t digit(std::size_t leaf, int lvl) const {
    return ball(lvl + 1, ancestor(leaf, lvl + 1)).digit;
  }

  // Level of the deepest common ancestor of two leaves.
  int join_level(std::size_t leaf_i, std::size_t leaf_k) const {
    if (leaf_i == leaf_k) return depth_;
    std::size_t a = leaf_i, b = leaf_k;
    for (int l = depth_; l > 0; --l) {
      a = ball(l, a).parent;
      b = ball(l, b).parent;
      if (a == b) return l - 1;
    }
    return 0;
  }

  double leaf_measure(std::size_t leaf) const { return ball(depth_, leaf).meas; }

 private:
  void build_uniform(const TruncatedTree& tree) {
    // Leaves per ball at each level: product of the branching factors below.
    std::vector<std::size_t> leaves_below(static_cast<std::size_t>(depth_) + 1, 1);
    for (int l = depth_ - 1; l >= 0; --l)
      leaves_below[static_cast<std::size_t>(l)] =
          leaves_below[static_cast<std::size_t>(l) + 1] * tree.branching_at(l);
    std::size_t count = 1;
    for (int l = 0; l <= depth_; ++l) {
      const std::uint32_t b_here = l < depth_ ? tree.branching_at(l) : 0;
      const std::uint32_t b_above = l > 0 ? tree.branching_at(l - 1) : 0;
      const Vertex rep = tree.representative_vertex(l);
      const double diam = to_double(tree.diameter(rep));
      const double meas = to_double(tree.measure(rep));
      auto& lv = levels_[static_cast<std::size_t>(l)];
      lv.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        BallRec& r = lv[i];
        r.leaf_lo = i * leaves_below[static_cast<std::size_t>(l)];
        r.leaf_hi = (i + 1) * leaves_below[static_cast<std::size_t>(l)];
        r.n_children = b_here;
        r.first_child = l < depth_ ? i * static_cast<std::size_t>(b_here) : BallRec::kNone;
        r.parent = l > 0 ? i / b_above : BallRec::kNone;
        r.digit = l > 0 ? static_cast<std::uint32_t>(i % b_above) : 0;
        r.diam = diam;
        r.meas = meas;
      }
      if (l < depth_) count *= b_here;
    }
  }

  void build_explicit(const TruncatedTree& tree) {
    for (int l = 0; l <= depth_; ++l) levels_[static_cast<std::size_t>(l)].resize(tree.node_count(l));
    for (int l = 0; l <= depth_; ++l) {
      auto& lv = levels_[static_cast<std::size_t>(l)];
      std::size_t child_offset = 0;
      for (std::size_t i = 0; i < lv.size(); ++i) {
        BallRec& r = lv[i];
        r.n_children = tree.node_child_count(l, i);
        r.first_child = l < depth_ ? child_offset : BallRec::kNone;
        r.diam = to_double(tree.node_diameter(l, i));
        r.meas = to_double(tree.node_measure(l, i));
        if (l < depth_) {
          auto& below = levels_[static_cast<std::size_t>(l) + 1];
          for (std::uint32_t d = 0; d < r.n_children; ++d) {
            below[child_offset + d].parent = i;
            below[child_offset + d].digit = d;
          }
        }
        child_offset += r.n_children;
      }
    }
    // Leaf ranges, bottom-up.
    auto& leaves = levels_.back();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      leaves[i].leaf_lo = i;
      leaves[i].leaf_hi = i + 1;
    }
    for (int l = depth_ - 1; l >= 0; --l) {
      auto& lv = levels_[static_cast<std::size_t>(l)];
      const auto& below = levels_[static_cast<std::size_t>(l) + 1];
      for (auto& r : lv) {
        r.leaf_lo = below[r.first_child].leaf_lo;
        r.leaf_hi = below[r.first_child + r.n_children - 1].leaf_hi;
      }
    }
  }

  int depth_;
  bool aligned_;
  std::size_t leaf_count_ = 0;
  std::vector<std::vector<BallRec>> levels_;
};

}  // namespace ultradiff
