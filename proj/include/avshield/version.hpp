#pragma once

namespace avshield {

inline constexpr const char* kVersion = "0.1.0";

} // namespace avshield
