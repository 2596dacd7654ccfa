#pragma once

#include <complex>
#include <vector>

#include "tamperkit/raster.hpp"

namespace tamperkit {

struct ComplexBand {
    int level = 0;  // 1-based, 1 = finest
    int orientation = 0;
    int width = 0;
    int height = 0;
    std::vector<std::complex<double>> coeffs;

    std::complex<double> at(int x, int y) const { return coeffs[static_cast<std::size_t>(y) * width + x]; }
};

/// Complex steerable pyramid built in the Fourier domain with raised-cosine
/// radial transitions one octave wide and one-sided angular windows.
///
/// Level l bands live at 1/2^(l-1) resolution. Only levels >= first_level are
/// materialized; the high-pass residual and final low-pass are not returned.
std::vector<ComplexBand> complex_steerable_pyramid(const Raster& gray, int levels, int orientations,
                                                    int first_level = 1);

}  // namespace tamperkit
