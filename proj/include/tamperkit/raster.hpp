#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tamperkit/error.hpp"

namespace tamperkit {

/// Row-major image with 1 or 3 interleaved channels.
///
/// Pipeline images hold intensities in [0,1]. Filter responses (convolution
/// output, gradients) reuse the type and may leave that range;
/// `is_unit_range()` tells the two apart.
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, int channels, double fill = 0.0);
    Raster(int width, int height, int channels, std::vector<double> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& at(int x, int y, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    double at(int x, int y, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    // Replicate-border access.
    double clamped(int x, int y, int c = 0) const;

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }

    bool same_shape(const Raster& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }
    bool is_unit_range() const noexcept;
    std::string shape_string() const;

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Odd-sized 2D coefficient grid, row-major, kernel(i, j) = coeffs[j * width + i].
struct Kernel2D {
    int width = 1;
    int height = 1;
    std::vector<double> coeffs{1.0};

    double operator()(int i, int j) const { return coeffs[static_cast<std::size_t>(j) * width + i]; }
    static Kernel2D outer(std::span<const double> column, std::span<const double> row);
};

// Kernels and resampling. All borders are replicate.

Raster to_grayscale(const Raster& img);
// Grayscale if 3 channels, copy otherwise.
Raster as_grayscale(const Raster& img);
// 1-channel image replicated into 3 channels.
Raster gray_to_rgb(const Raster& gray);

Raster convolve2d(const Raster& img, const Kernel2D& kernel);
// Separable convolution: `row` applied along x, then `column` along y.
Raster convolve_separable(const Raster& img, std::span<const double> row, std::span<const double> column);

std::vector<double> gaussian_kernel1d(double sigma);
Raster gaussian_blur(const Raster& img, double sigma);

Raster resize_bilinear(const Raster& img, int out_w, int out_h);
// Bilinear sample at continuous pixel-center coordinates; outside samples are clamped.
double sample_bilinear(const Raster& img, double x, double y, int c = 0);

std::vector<double> channel_means(const Raster& img);
Raster extract_channel(const Raster& img, int channel);
Raster clamp_unit(Raster img);

}  // namespace tamperkit
