#pragma once

namespace cdyson {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cdyson
