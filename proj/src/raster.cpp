#include "tamperkit/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tamperkit {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid input";
        case ErrorKind::InvalidPair: return "invalid pair";
        case ErrorKind::DegeneratePose: return "degenerate pose";
        case ErrorKind::UnsupportedView: return "unsupported view";
        case ErrorKind::AmbiguousOrdering: return "ambiguous ordering";
        case ErrorKind::DegenerateConfiguration: return "degenerate configuration";
        case ErrorKind::DegenerateFace: return "degenerate face";
        case ErrorKind::OutOfBounds: return "out of bounds";
        case ErrorKind::DegenerateTraining: return "degenerate training";
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::Validation: return "validation error";
        case ErrorKind::IncompleteTexture: return "incomplete texture";
        case ErrorKind::MissingReference: return "missing reference";
        case ErrorKind::Io: return "I/O error";
        case ErrorKind::Internal: return "internal invariant violation";
    }
    return "error";
}

namespace {

void check_dims(int width, int height, int channels) {
    if (width < 1 || height < 1) {
        throw Error(ErrorKind::InvalidInput, "raster dimensions must be >= 1");
    }
    if (channels != 1 && channels != 3) {
        throw Error(ErrorKind::InvalidInput, "raster must have 1 or 3 channels");
    }
}

void require_gray(const Raster& img, const char* op) {
    if (img.channels() != 1) {
        throw Error(ErrorKind::InvalidInput, std::string(op) + " expects a 1-channel raster, got " + img.shape_string());
    }
}

}  // namespace

Raster::Raster(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    check_dims(width, height, channels);
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Raster::Raster(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    check_dims(width, height, channels);
    if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
        throw Error(ErrorKind::InvalidInput, "raster data length does not match width*height*channels");
    }
}

double Raster::clamped(int x, int y, int c) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return at(x, y, c);
}

bool Raster::is_unit_range() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

std::string Raster::shape_string() const {
    return std::to_string(width_) + "x" + std::to_string(height_) + "x" + std::to_string(channels_);
}

Kernel2D Kernel2D::outer(std::span<const double> column, std::span<const double> row) {
    Kernel2D k;
    k.width = static_cast<int>(row.size());
    k.height = static_cast<int>(column.size());
    k.coeffs.resize(row.size() * column.size());
    for (std::size_t j = 0; j < column.size(); ++j) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            k.coeffs[j * row.size() + i] = column[j] * row[i];
        }
    }
    return k;
}

Raster to_grayscale(const Raster& img) {
    if (img.channels() != 3) {
        throw Error(ErrorKind::InvalidInput, "to_grayscale expects 3 channels, got " + img.shape_string());
    }
    Raster out(img.width(), img.height(), 1);
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    }
    return out;
}

Raster as_grayscale(const Raster& img) {
    return img.channels() == 3 ? to_grayscale(img) : img;
}

Raster gray_to_rgb(const Raster& gray) {
    require_gray(gray, "gray_to_rgb");
    Raster out(gray.width(), gray.height(), 3);
    auto src = gray.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
    }
    return out;
}

Raster convolve2d(const Raster& img, const Kernel2D& kernel) {
    require_gray(img, "convolve2d");
    if (kernel.width % 2 == 0 || kernel.height % 2 == 0 || kernel.width < 1 || kernel.height < 1) {
        throw Error(ErrorKind::InvalidInput, "convolution kernel dimensions must be odd");
    }
    if (kernel.coeffs.size() != static_cast<std::size_t>(kernel.width) * kernel.height) {
        throw Error(ErrorKind::InvalidInput, "kernel coefficient count does not match its dimensions");
    }
    const int cx = kernel.width / 2;
    const int cy = kernel.height / 2;
    Raster out(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double acc = 0.0;
            for (int j = 0; j < kernel.height; ++j) {
                for (int i = 0; i < kernel.width; ++i) {
                    acc += kernel(i, j) * img.clamped(x - i + cx, y - j + cy);
                }
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

Raster convolve_separable(const Raster& img, std::span<const double> row, std::span<const double> column) {
    require_gray(img, "convolve_separable");
    if (row.size() % 2 == 0 || column.size() % 2 == 0) {
        throw Error(ErrorKind::InvalidInput, "convolution kernel dimensions must be odd");
    }
    const int w = img.width();
    const int h = img.height();
    const int rx = static_cast<int>(row.size()) / 2;
    const int ry = static_cast<int>(column.size()) / 2;

    // Padded row buffer keeps the inner loop branch-free.
    Raster tmp(w, h, 1);
    std::vector<double> line(static_cast<std::size_t>(w + 2 * rx));
    for (int y = 0; y < h; ++y) {
        for (int x = -rx; x < w + rx; ++x) line[x + rx] = img.clamped(x, y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < static_cast<int>(row.size()); ++i) acc += row[i] * line[x - i + 2 * rx];
            tmp.at(x, y) = acc;
        }
    }
    Raster out(w, h, 1);
    std::vector<double> col(static_cast<std::size_t>(h + 2 * ry));
    for (int x = 0; x < w; ++x) {
        for (int y = -ry; y < h + ry; ++y) col[y + ry] = tmp.clamped(x, y);
        for (int y = 0; y < h; ++y) {
            double acc = 0.0;
            for (int j = 0; j < static_cast<int>(column.size()); ++j) acc += column[j] * col[y - j + 2 * ry];
            out.at(x, y) = acc;
        }
    }
    return out;
}

std::vector<double> gaussian_kernel1d(double sigma) {
    if (!(sigma > 0.0)) {
        throw Error(ErrorKind::InvalidInput, "gaussian sigma must be > 0");
    }
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    }
    const double sum = std::accumulate(k.begin(), k.end(), 0.0);
    for (double& v : k) v /= sum;
    return k;
}

Raster gaussian_blur(const Raster& img, double sigma) {
    const auto k = gaussian_kernel1d(sigma);
    return convolve_separable(img, k, k);
}

double sample_bilinear(const Raster& img, double x, double y, int c) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
    const double bottom = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
    return top * (1.0 - fy) + bottom * fy;
}

Raster resize_bilinear(const Raster& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) {
        throw Error(ErrorKind::InvalidInput, "resize output dimensions must be >= 1");
    }
    if (out_w == img.width() && out_h == img.height()) return img;
    Raster out(out_w, out_h, img.channels());
    const double sx = static_cast<double>(img.width()) / out_w;
    const double sy = static_cast<double>(img.height()) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double src_y = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < out_w; ++x) {
            const double src_x = (x + 0.5) * sx - 0.5;
            for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = sample_bilinear(img, src_x, src_y, c);
        }
    }
    return out;
}

std::vector<double> channel_means(const Raster& img) {
    std::vector<double> sums(static_cast<std::size_t>(img.channels()), 0.0);
    auto d = img.data();
    for (std::size_t i = 0; i < d.size(); ++i) sums[i % img.channels()] += d[i];
    const double n = static_cast<double>(img.width()) * img.height();
    for (double& s : sums) s /= n;
    return sums;
}

Raster extract_channel(const Raster& img, int channel) {
    if (channel < 0 || channel >= img.channels()) {
        throw Error(ErrorKind::InvalidInput, "channel index out of range");
    }
    Raster out(img.width(), img.height(), 1);
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i * img.channels() + channel];
    return out;
}

Raster clamp_unit(Raster img) {
    for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
    return img;
}

}  // namespace tamperkit
