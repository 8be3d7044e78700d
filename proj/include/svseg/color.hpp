#pragma once

#include <array>

#include "svseg/image.hpp"

namespace svseg {

/// CIE L*a*b* under D65, sRGB input. L in [0,100], a/b roughly [-128,127].
std::array<double, 3> rgb_to_lab(const Rgb& px) noexcept;

/// Rec.601 luma in [0,255].
inline double luma(const Rgb& px) noexcept {
    return 0.299 * px.r + 0.587 * px.g + 0.114 * px.b;
}

} // namespace svseg
