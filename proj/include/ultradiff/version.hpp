#pragma once

namespace ultradiff {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ultradiff
