#pragma once

namespace medial {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace medial
