#pragma once

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "ultradiff/tree.hpp"

namespace ultradiff {

// Explicit tree files come in two JSON forms:
//   nested:    a node is the array of its children, a leaf is [] — e.g. [[[],[]],[[],[],[]]]
//   adjacency: {"": 2, "0": 2, "1": 3} mapping each internal address to its child count
// Every leaf must sit at the same level; that level is the tree depth.

namespace detail {

inline void walk_nested(const nlohmann::json& node, int level, const std::string& addr,
                        std::vector<std::vector<std::uint32_t>>& counts, int& leaf_level) {
  if (!node.is_array())
    throw ValidationError("nested tree node at \"" + addr + "\" must be an array");
  if (node.empty()) {
    if (leaf_level == -1) leaf_level = level;
    if (leaf_level != level)
      throw ValidationError("leaf at \"" + addr + "\" sits at level " + std::to_string(level) +
                            " but other leaves sit at level " + std::to_string(leaf_level) +
                            "; all boundary points must share one depth");
    return;
  }
  if (node.size() < 2)
    throw ValidationError("vertex at \"" + addr + "\" has a single child; branching must be >= 2");
  if (static_cast<int>(counts.size()) <= level) counts.resize(static_cast<std::size_t>(level) + 1);
  counts[static_cast<std::size_t>(level)].push_back(static_cast<std::uint32_t>(node.size()));
  for (std::size_t c = 0; c < node.size(); ++c)
    walk_nested(node[c], level + 1, addr.empty() ? std::to_string(c) : addr + "." + std::to_string(c), counts,
                leaf_level);
}

}  // namespace detail

inline ExplicitFamily parse_explicit_tree(const nlohmann::json& j) {
  ExplicitFamily fam;
  if (j.is_array()) {
    int leaf_level = -1;
    detail::walk_nested(j, 0, "", fam.child_counts, leaf_level);
    if (leaf_level < 1) throw ValidationError("explicit tree must have depth >= 1");
    if (static_cast<int>(fam.child_counts.size()) != leaf_level)
      throw ValidationError("explicit tree has leaves above depth " + std::to_string(leaf_level));
    return fam;
  }
  if (!j.is_object())
    throw ValidationError("explicit tree JSON must be a nested array or an address-keyed object");

  // Adjacency form: collect (address, count), then lay levels out lexicographically.
  std::vector<std::pair<Vertex, std::uint32_t>> entries;
  int max_level = -1;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number_unsigned())
      throw ValidationError("child count for \"" + key + "\" must be a non-negative integer");
    const Vertex v = parse_address(key);
    entries.emplace_back(v, value.get<std::uint32_t>());
    max_level = std::max(max_level, v.level());
  }
  const int depth = max_level + 1;
  if (depth < 1) throw ValidationError("explicit tree must have depth >= 1");

  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) {
              if (a.first.level() != b.first.level()) return a.first.level() < b.first.level();
              return a.first.path < b.first.path;
            });

  // Verify completeness by simulating the build: at each level the child
  // addresses implied by the previous level must match the keys exactly.
  std::vector<Vertex> frontier{Vertex{}};
  std::size_t cursor = 0;
  fam.child_counts.resize(static_cast<std::size_t>(depth));
  for (int l = 0; l < depth; ++l) {
    std::vector<Vertex> next;
    for (const Vertex& v : frontier) {
      if (cursor >= entries.size() || !(entries[cursor].first == v))
        throw ValidationError("adjacency tree is missing internal vertex \"" + format_address(v) + "\"");
      const std::uint32_t c = entries[cursor].second;
      ++cursor;
      if (c < 2)
        throw ValidationError("vertex \"" + format_address(v) + "\" has " + std::to_string(c) +
                              " children; branching must be >= 2");
      fam.child_counts[static_cast<std::size_t>(l)].push_back(c);
      for (std::uint32_t d = 0; d < c; ++d) {
        Vertex child = v;
        child.path.push_back(d);
        next.push_back(std::move(child));
      }
    }
    frontier = std::move(next);
  }
  if (cursor != entries.size())
    throw ValidationError("adjacency tree lists vertices at or beyond the leaf level; leaves carry no child count");
  return fam;
}

inline ExplicitFamily load_explicit_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open tree file \"" + path + "\"");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("tree file \"" + path + "\" is not valid JSON: " + e.what());
  }
  return parse_explicit_tree(j);
}

}  // namespace ultradiff
