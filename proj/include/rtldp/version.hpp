#pragma once

namespace rtldp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rtldp
