#pragma once

namespace flakerank {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace flakerank
