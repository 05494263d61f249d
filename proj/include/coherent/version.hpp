#pragma once

namespace coherent {

inline constexpr const char* kToolName = "coherent";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace coherent
