#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "tamperkit/raster.hpp"

namespace tamperkit {

enum class HomogenizationMethod { None = 0, Canny = 1, Laplacian = 2, MeanChannel = 3 };

inline constexpr std::array<HomogenizationMethod, 4> kAllMethods = {
    HomogenizationMethod::None, HomogenizationMethod::Canny, HomogenizationMethod::Laplacian,
    HomogenizationMethod::MeanChannel};

// CLI spelling: none, canny, laplacian, meanch.
std::string_view method_name(HomogenizationMethod m);
std::optional<HomogenizationMethod> parse_method(std::string_view name);

struct CannyParams {
    double sigma = 1.4;
    double low_ratio = 0.66;
    double high_ratio = 1.33;
};

// Binary edge map. Thresholds derive from the median grayscale intensity and are
// compared against the unnormalized Sobel magnitude.
Raster canny_adaptive(const Raster& img, const CannyParams& params = {});

// Signed response of the 4-neighbour Laplacian mapped to [0,1] by v/8 + 0.5.
Raster laplacian(const Raster& img);

Raster mean_channel_align(const Raster& input, const Raster& reference);

/// Applies `m` to an (input, reference) pair. MeanChannel moves the input
/// toward the reference; every other method treats both sides alike.
std::pair<Raster, Raster> homogenize_pair(const Raster& input, const Raster& reference, HomogenizationMethod m);

/// A pair homogenized outside this library (for example by a learned edge
/// network), stored as `<pair_id>_a.png` (input) and `<pair_id>_b.png` (reference).
struct PrecomputedPair {
    Raster input;
    Raster reference;
};
std::optional<PrecomputedPair> load_precomputed_pair(const std::filesystem::path& dir, const std::string& pair_id);

}  // namespace tamperkit
