#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ultradiff/errors.hpp"

namespace ultradiff {

/// A ball address: the child-index path from the root. The root is the empty
/// sequence; "0.1.0" is the level-3 ball reached by children 0, 1, 0.
/// A vertex at tree depth L is a boundary point (leaf cylinder).
struct Vertex {
  std::vector<std::uint32_t> path;

  int level() const { return static_cast<int>(path.size()); }
  bool operator==(const Vertex&) const = default;
};

inline std::string format_address(const Vertex& v) {
  std::string out;
  for (std::size_t i = 0; i < v.path.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(v.path[i]);
  }
  return out;
}

inline Vertex parse_address(const std::string& text) {
  Vertex v;
  if (text.empty()) return v;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t dot = text.find('.', pos);
    const std::string part = text.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
      throw ValidationError("malformed address \"" + text + "\": expected dot-separated child indices");
    v.path.push_back(static_cast<std::uint32_t>(std::stoul(part)));
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  return v;
}

/// True when `anc` is a prefix of `v` (every ball contains itself).
inline bool is_ancestor(const Vertex& anc, const Vertex& v) {
  if (anc.path.size() > v.path.size()) return false;
  for (std::size_t i = 0; i < anc.path.size(); ++i)
    if (anc.path[i] != v.path[i]) return false;
  return true;
}

/// Longest common prefix of two addresses: the smallest ball containing both.
inline Vertex join(const Vertex& x, const Vertex& y) {
  Vertex v;
  const std::size_t n = std::min(x.path.size(), y.path.size());
  for (std::size_t i = 0; i < n && x.path[i] == y.path[i]; ++i) v.path.push_back(x.path[i]);
  return v;
}

}  // namespace ultradiff
