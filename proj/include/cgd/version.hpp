#pragma once

namespace cgd {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cgd
