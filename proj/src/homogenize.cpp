#include "tamperkit/homogenize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tamperkit/image_io.hpp"

namespace tamperkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

double median(std::vector<double> values) {
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (values.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

}  // namespace

std::string_view method_name(HomogenizationMethod m) {
    switch (m) {
        case HomogenizationMethod::None: return "none";
        case HomogenizationMethod::Canny: return "canny";
        case HomogenizationMethod::Laplacian: return "laplacian";
        case HomogenizationMethod::MeanChannel: return "meanch";
    }
    return "?";
}

std::optional<HomogenizationMethod> parse_method(std::string_view name) {
    for (auto m : kAllMethods) {
        if (method_name(m) == name) return m;
    }
    return std::nullopt;
}

Raster canny_adaptive(const Raster& img, const CannyParams& params) {
    const Raster gray = as_grayscale(img);
    const int w = gray.width();
    const int h = gray.height();
    const Raster smooth = gaussian_blur(gray, params.sigma);

    Raster magnitude(w, h, 1);
    std::vector<std::uint8_t> direction(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            auto s = [&](int dx, int dy) { return smooth.clamped(x + dx, y + dy); };
            const double gx = (s(1, -1) + 2 * s(1, 0) + s(1, 1)) - (s(-1, -1) + 2 * s(-1, 0) + s(-1, 1));
            const double gy = (s(-1, 1) + 2 * s(0, 1) + s(1, 1)) - (s(-1, -1) + 2 * s(0, -1) + s(1, -1));
            magnitude.at(x, y) = std::hypot(gx, gy);
            // Quantize the gradient direction to 0, 45, 90 or 135 degrees.
            double angle = std::atan2(gy, gx) * 180.0 / kPi;
            if (angle < 0) angle += 180.0;
            std::uint8_t sector = 0;
            if (angle >= 22.5 && angle < 67.5) sector = 1;
            else if (angle >= 67.5 && angle < 112.5) sector = 2;
            else if (angle >= 112.5 && angle < 157.5) sector = 3;
            direction[static_cast<std::size_t>(y) * w + x] = sector;
        }
    }

    static constexpr int kOffsets[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
    Raster thin(w, h, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double m = magnitude.at(x, y);
            if (m <= 0.0) continue;
            const auto* off = kOffsets[direction[static_cast<std::size_t>(y) * w + x]];
            const double ahead = magnitude.clamped(x + off[0], y + off[1]);
            const double behind = magnitude.clamped(x - off[0], y - off[1]);
            // Strict on one side so two-pixel plateaus keep a single pixel.
            if (m > ahead && m >= behind) thin.at(x, y) = m;
        }
    }

    const double med = median(std::vector<double>(gray.data().begin(), gray.data().end()));
    const double low = std::clamp(params.low_ratio * med, 0.0, 1.0);
    const double high = std::clamp(params.high_ratio * med, 0.0, 1.0);

    Raster edges(w, h, 1, 0.0);
    std::vector<int> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (thin.at(x, y) > high && edges.at(x, y) == 0.0) {
                edges.at(x, y) = 1.0;
                stack.push_back(y * w + x);
                while (!stack.empty()) {
                    const int idx = stack.back();
                    stack.pop_back();
                    const int cx = idx % w;
                    const int cy = idx / w;
                    for (int dy = -1; dy <= 1; ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int nx = cx + dx;
                            const int ny = cy + dy;
                            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                            if (edges.at(nx, ny) == 0.0 && thin.at(nx, ny) > low) {
                                edges.at(nx, ny) = 1.0;
                                stack.push_back(ny * w + nx);
                            }
                        }
                    }
                }
            }
        }
    }
    return edges;
}

Raster laplacian(const Raster& img) {
    const Raster gray = as_grayscale(img);
    const Kernel2D kernel{3, 3, {0, 1, 0, 1, -4, 1, 0, 1, 0}};
    Raster response = convolve2d(gray, kernel);
    for (double& v : response.data()) v = v / 8.0 + 0.5;
    return response;
}

Raster mean_channel_align(const Raster& input, const Raster& reference) {
    if (!input.same_shape(reference)) {
        throw Error(ErrorKind::InvalidPair, "mean channel alignment needs equal shapes, got " + input.shape_string() +
                                                " and " + reference.shape_string());
    }
    const auto in_means = channel_means(input);
    const auto ref_means = channel_means(reference);
    Raster out = input;
    auto d = out.data();
    const int ch = input.channels();
    for (std::size_t i = 0; i < d.size(); ++i) {
        const int c = static_cast<int>(i % ch);
        d[i] = std::clamp(d[i] + (ref_means[c] - in_means[c]), 0.0, 1.0);
    }
    return out;
}

std::pair<Raster, Raster> homogenize_pair(const Raster& input, const Raster& reference, HomogenizationMethod m) {
    if (input.width() != reference.width() || input.height() != reference.height()) {
        throw Error(ErrorKind::InvalidPair,
                    "pair views differ in size: " + input.shape_string() + " vs " + reference.shape_string());
    }
    switch (m) {
        case HomogenizationMethod::None: return {input, reference};
        case HomogenizationMethod::Canny: return {canny_adaptive(input), canny_adaptive(reference)};
        case HomogenizationMethod::Laplacian: return {laplacian(input), laplacian(reference)};
        case HomogenizationMethod::MeanChannel: return {mean_channel_align(input, reference), reference};
    }
    throw Error(ErrorKind::InvalidInput, "unknown homogenization method");
}

std::optional<PrecomputedPair> load_precomputed_pair(const std::filesystem::path& dir, const std::string& pair_id) {
    const auto a = dir / (pair_id + "_a.png");
    const auto b = dir / (pair_id + "_b.png");
    if (!std::filesystem::exists(a) || !std::filesystem::exists(b)) return std::nullopt;
    return PrecomputedPair{read_png(a), read_png(b)};
}

}  // namespace tamperkit
