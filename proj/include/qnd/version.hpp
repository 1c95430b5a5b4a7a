#pragma once

namespace qnd {

inline constexpr const char* version = "0.1.0";

}
