#pragma once

namespace qeosim {

inline constexpr const char* kVersionString = "qeosim 0.1.0";

}  // namespace qeosim
