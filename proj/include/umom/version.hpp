#pragma once

namespace umom {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace umom
