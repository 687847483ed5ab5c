#pragma once

namespace implev {
inline constexpr const char* kVersion = "0.1.0";
}
