#pragma once

namespace mbp {

inline constexpr double kEulerGamma = 0.5772156649015329;
inline constexpr double kPi = 3.141592653589793;
inline constexpr double kPiSquaredOver12 = kPi * kPi / 12.0;

// exp(-gamma), the Lamperti threshold for the ν ≡ 1 case.
inline constexpr double kExpMinusGamma = 0.5614594835668851;

} // namespace mbp
