#pragma once

namespace sispca {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sispca
