#pragma once

namespace flexhca {

inline constexpr const char* kVersion = "0.1.0";

} // namespace flexhca
