#pragma once

namespace cewma {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace cewma
