#pragma once

namespace minersim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace minersim
