#pragma once

namespace citesim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace citesim
