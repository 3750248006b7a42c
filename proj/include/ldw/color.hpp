#pragma once

#include "ldw/image.hpp"

namespace ldw {

/// sRGB (D65) to CIE L*a*b*. Rows above `first_row` are left at zero so the
/// pipeline can skip everything above the horizon.
LabImage rgb_to_lab(const RgbImage& img, int first_row = 0);

/// Single-pixel conversion, used by the plane version and by tests.
void srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b, double& L, double& A, double& B);

/// Luminance in [0,1] with ITU-R 601 weights.
PlaneF to_gray(const RgbImage& img);

inline constexpr double kGrayWeightR = 0.299;
inline constexpr double kGrayWeightG = 0.587;
inline constexpr double kGrayWeightB = 0.114;

struct InvariantParams {
    int tile = 32;
    /// Lower bound on the local L standard deviation; keeps flat asphalt
    /// from turning sensor noise into full-range contrast.
    double std_floor = 4.0;
    /// Chroma (a,b magnitude) at which the normalized L is weighted 2x.
    double chroma_ref = 100.0;
    /// z-score mapped to the [0,1] output range as 0.5 + z / (2 * z_span).
    double z_span = 3.0;
};

/// Shadow-attenuating feature plane in [0,1]: L standardized against
/// bilinearly interpolated per-tile mean/std, weighted by chroma magnitude.
/// Rows above `first_row` are set to 0.5.
PlaneF illuminant_invariant(const LabImage& lab, const InvariantParams& params = {}, int first_row = 0);

}  // namespace ldw
