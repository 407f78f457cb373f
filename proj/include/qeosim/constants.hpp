#pragma once

namespace qeosim {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Speed of light in vacuum (m/s), exact by definition.
inline constexpr double kSpeedOfLight = 299792458.0;

}  // namespace qeosim
