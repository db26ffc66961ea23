#pragma once

namespace rankforge {

inline constexpr const char* version = "0.1.0";

} // namespace rankforge
