#pragma once

namespace bernflow {
inline constexpr const char* kVersion = "0.1.0";
}
