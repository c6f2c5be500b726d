#pragma once

namespace atlas {

inline constexpr const char* version = "0.1.0";

}  // namespace atlas
