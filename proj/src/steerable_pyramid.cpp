#include "tamperkit/steerable_pyramid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace tamperkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

// FFTW's planner is not re-entrant; execution on distinct arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

using Complex = std::complex<double>;

// In-place 2D DFT on a row-major height x width array.
void dft2(std::vector<Complex>& data, int width, int height, int sign) {
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_2d(height, width, ptr, ptr, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
}

// Centred spectrum: index k holds frequency k - n/2.
struct Spectrum {
    int width = 0;
    int height = 0;
    std::vector<Complex> values;

    Complex& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

int wrap(int i, int n) { return ((i % n) + n) % n; }

Spectrum centred_fft(const Raster& gray) {
    const int w = gray.width();
    const int h = gray.height();
    std::vector<Complex> data(gray.data().begin(), gray.data().end());
    dft2(data, w, h, FFTW_FORWARD);
    Spectrum s{w, h, std::vector<Complex>(data.size())};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            s.at(x, y) = data[static_cast<std::size_t>(wrap(y - h / 2, h)) * w + wrap(x - w / 2, w)];
        }
    }
    return s;
}

std::vector<Complex> inverse_centred(const Spectrum& s) {
    const int w = s.width;
    const int h = s.height;
    std::vector<Complex> data(s.values.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            data[static_cast<std::size_t>(wrap(y - h / 2, h)) * w + wrap(x - w / 2, w)] =
                s.values[static_cast<std::size_t>(y) * w + x];
        }
    }
    dft2(data, w, h, FFTW_BACKWARD);
    const double norm = 1.0 / (static_cast<double>(w) * h);
    for (auto& v : data) v *= norm;
    return data;
}

// log2 of the normalised radius (Nyquist = 1) and the polar angle of each bin.
struct PolarGrid {
    std::vector<double> log_rad;
    std::vector<double> angle;
};

PolarGrid polar_grid(int width, int height) {
    PolarGrid g;
    g.log_rad.resize(static_cast<std::size_t>(width) * height);
    g.angle.resize(g.log_rad.size());
    for (int y = 0; y < height; ++y) {
        const double fy = (y - height / 2) / (height / 2.0);
        for (int x = 0; x < width; ++x) {
            const double fx = (x - width / 2) / (width / 2.0);
            const double r = std::hypot(fx, fy);
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            g.log_rad[i] = r > 0 ? std::log2(r) : -std::numeric_limits<double>::infinity();
            g.angle[i] = std::atan2(fy, fx);
        }
    }
    return g;
}

// Raised-cosine pair over one octave starting at `start` (log2 radius):
// high rises 0 -> 1, low falls 1 -> 0, high^2 + low^2 = 1.
double high_mask(double log_rad, double start) {
    const double t = std::clamp(log_rad - start, 0.0, 1.0);
    return std::sin(0.5 * kPi * t);
}
double low_mask(double log_rad, double start) {
    const double t = std::clamp(log_rad - start, 0.0, 1.0);
    return std::cos(0.5 * kPi * t);
}

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

}  // namespace

std::vector<ComplexBand> complex_steerable_pyramid(const Raster& gray, int levels, int orientations,
                                                    int first_level) {
    if (gray.channels() != 1) {
        throw Error(ErrorKind::InvalidInput, "steerable pyramid expects a 1-channel raster");
    }
    if (levels < 1 || orientations < 1) {
        throw Error(ErrorKind::InvalidInput, "steerable pyramid needs >= 1 level and orientation");
    }
    const int order = orientations - 1;
    const double norm = std::pow(2.0, 2 * order) * factorial(order) * factorial(order) /
                        (orientations * factorial(2 * order));
    const double angular_gain = 2.0 * std::sqrt(norm);

    Spectrum lo = centred_fft(gray);
    {
        const PolarGrid g = polar_grid(lo.width, lo.height);
        for (std::size_t i = 0; i < lo.values.size(); ++i) lo.values[i] *= low_mask(g.log_rad[i], -1.0);
    }

    std::vector<ComplexBand> bands;
    for (int level = 1; level <= levels; ++level) {
        const PolarGrid g = polar_grid(lo.width, lo.height);
        if (level >= first_level) {
            for (int b = 0; b < orientations; ++b) {
                Spectrum band{lo.width, lo.height, std::vector<Complex>(lo.values.size())};
                const double center = kPi * b / orientations;
                for (std::size_t i = 0; i < lo.values.size(); ++i) {
                    double diff = std::fmod(g.angle[i] - center + kPi, 2.0 * kPi);
                    if (diff < 0) diff += 2.0 * kPi;
                    diff -= kPi;
                    if (std::abs(diff) >= 0.5 * kPi) continue;
                    const double angular = angular_gain * std::pow(std::cos(diff), order);
                    band.values[i] = lo.values[i] * high_mask(g.log_rad[i], -2.0) * angular;
                }
                bands.push_back({level, b, lo.width, lo.height, inverse_centred(band)});
            }
        }
        if (level == levels) break;
        // Low-pass, then keep the central half of the spectrum (2x decimation).
        for (std::size_t i = 0; i < lo.values.size(); ++i) lo.values[i] *= low_mask(g.log_rad[i], -2.0);
        const int nw = (lo.width + 1) / 2;
        const int nh = (lo.height + 1) / 2;
        const int x0 = lo.width / 2 - nw / 2;
        const int y0 = lo.height / 2 - nh / 2;
        Spectrum next{nw, nh, std::vector<Complex>(static_cast<std::size_t>(nw) * nh)};
        for (int y = 0; y < nh; ++y) {
            for (int x = 0; x < nw; ++x) next.at(x, y) = lo.at(x + x0, y + y0);
        }
        lo = std::move(next);
    }
    return bands;
}

}  // namespace tamperkit
