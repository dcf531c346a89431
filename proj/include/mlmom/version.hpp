#pragma once

namespace mlmom {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace mlmom
