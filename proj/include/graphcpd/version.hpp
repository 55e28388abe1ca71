#pragma once

namespace graphcpd {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace graphcpd
