#pragma once

namespace photostat {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace photostat
