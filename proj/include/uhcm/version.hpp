#pragma once

namespace uhcm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace uhcm
