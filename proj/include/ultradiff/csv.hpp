#pragma once

// Deterministic text output: doubles go through std::to_chars (shortest
// round-trip form, no locale), rows end in a bare LF, and files land via a
// temporary next to the target plus an atomic rename.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ultradiff/address.hpp"
#include "ultradiff/errors.hpp"

namespace ultradiff {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_int(long long v) { return std::to_string(v); }

// Dot address with a readable sentinel for the root ball.
inline std::string format_address_cell(const Vertex& v) { return v.path.empty() ? "(root)" : format_address(v); }

class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<std::string_view> header) { append_row(header); }

  void row(std::initializer_list<std::string_view> cells) { append_row(cells); }

  const std::string& content() const { return buf_; }

 private:
  template <typename Cells>
  void append_row(const Cells& cells) {
    bool first = true;
    for (const auto& c : cells) {
      if (!first) buf_ += ',';
      first = false;
      buf_ += c;
    }
    buf_ += '\n';
  }

  std::string buf_;
};

inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ValidationError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ValidationError("failed to move " + tmp.string() + " into place: " + ec.message());
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string fnv1a_hex(std::string_view s) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = fnv1a(s);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace ultradiff
