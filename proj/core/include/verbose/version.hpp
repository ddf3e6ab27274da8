#pragma once

namespace verbose {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace verbose
