#include "tamperkit/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tamperkit/steerable_pyramid.hpp"

namespace tamperkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_same_gray(const Raster& a, const Raster& b, const char* metric) {
    if (a.channels() != 1 || b.channels() != 1) {
        throw Error(ErrorKind::InvalidInput, std::string(metric) + " expects 1-channel rasters");
    }
    if (!a.same_shape(b)) {
        throw Error(ErrorKind::InvalidPair,
                    std::string(metric) + " needs equal shapes, got " + a.shape_string() + " and " + b.shape_string());
    }
}

// Separable filter keeping only positions where the whole window fits.
std::vector<double> valid_filter(std::span<const double> img, int w, int h, std::span<const double> k, int& out_w,
                                 int& out_h) {
    const int n = static_cast<int>(k.size());
    out_w = w - n + 1;
    out_h = h - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(out_w) * h);
    for (int y = 0; y < h; ++y) {
        const double* row = img.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += k[i] * row[x + i];
            tmp[static_cast<std::size_t>(y) * out_w + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(out_w) * out_h, 0.0);
    for (int j = 0; j < n; ++j) {
        const double kj = k[j];
        for (int y = 0; y < out_h; ++y) {
            const double* src = tmp.data() + static_cast<std::size_t>(y + j) * out_w;
            double* dst = out.data() + static_cast<std::size_t>(y) * out_w;
            for (int x = 0; x < out_w; ++x) dst[x] += kj * src[x];
        }
    }
    return out;
}

// sign(t) * |t|^e, so negative structure terms stay defined under fractional exponents.
double signed_pow(double t, double e) { return t < 0 ? -std::pow(-t, e) : std::pow(t, e); }

}  // namespace

std::string_view metric_name(Metric m) {
    switch (m) {
        case Metric::MAE: return "mae";
        case Metric::SSIM: return "ssim";
        case Metric::MSSSIM: return "msssim";
        case Metric::CWSSIM: return "cwssim";
        case Metric::HOG: return "hog";
    }
    return "?";
}

std::optional<Metric> parse_metric(std::string_view name) {
    for (auto m : kAllMetrics) {
        if (metric_name(m) == name) return m;
    }
    return std::nullopt;
}

bool metric_order_less(std::string_view a, std::string_view b) {
    const auto ma = parse_metric(a);
    const auto mb = parse_metric(b);
    if (ma && mb) return static_cast<int>(*ma) < static_cast<int>(*mb);
    if (ma != mb && (ma || mb)) return ma.has_value();
    return a < b;
}

MetricScore make_score(Metric m, double value) {
    return {std::string(metric_name(m)), value, m == Metric::MAE ? value : 1.0 - value};
}

const MetricScore* SimilarityVector::find(std::string_view metric) const {
    for (const auto& s : scores) {
        if (s.metric == metric) return &s;
    }
    return nullptr;
}

MetricScore mae(const Raster& a, const Raster& b) {
    if (!a.same_shape(b)) {
        throw Error(ErrorKind::InvalidPair, "MAE needs equal shapes, got " + a.shape_string() + " and " + b.shape_string());
    }
    auto da = a.data();
    auto db = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) acc += std::abs(da[i] - db[i]);
    return make_score(Metric::MAE, acc / static_cast<double>(da.size()));
}

SsimStats ssim_stats(const Raster& a, const Raster& b, const SsimParams& params) {
    require_same_gray(a, b, "SSIM");
    const auto window = gaussian_kernel1d(params.sigma);
    const int n = static_cast<int>(window.size());
    if (a.width() < n || a.height() < n) {
        throw Error(ErrorKind::InvalidInput, "SSIM needs images of at least " + std::to_string(n) + " px per side");
    }
    const int w = a.width();
    const int h = a.height();
    const std::size_t count = a.size();
    std::vector<double> aa(count), bb(count), ab(count);
    auto da = a.data();
    auto db = b.data();
    for (std::size_t i = 0; i < count; ++i) {
        aa[i] = da[i] * da[i];
        bb[i] = db[i] * db[i];
        ab[i] = da[i] * db[i];
    }
    int ow = 0, oh = 0;
    const auto mu_a = valid_filter(da, w, h, window, ow, oh);
    const auto mu_b = valid_filter(db, w, h, window, ow, oh);
    const auto e_aa = valid_filter(aa, w, h, window, ow, oh);
    const auto e_bb = valid_filter(bb, w, h, window, ow, oh);
    const auto e_ab = valid_filter(ab, w, h, window, ow, oh);

    const double c1 = std::pow(params.k1 * params.dynamic_range, 2);
    const double c2 = std::pow(params.k2 * params.dynamic_range, 2);
    double sum_ssim = 0.0;
    double sum_cs = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i];
        const double mb = mu_b[i];
        const double var_a = e_aa[i] - ma * ma;
        const double var_b = e_bb[i] - mb * mb;
        const double cov = e_ab[i] - ma * mb;
        const double lum = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        const double cs = (2.0 * cov + c2) / (var_a + var_b + c2);
        sum_ssim += lum * cs;
        sum_cs += cs;
    }
    const double windows = static_cast<double>(mu_a.size());
    return {sum_ssim / windows, sum_cs / windows};
}

MetricScore ssim(const Raster& a, const Raster& b) { return make_score(Metric::SSIM, ssim_stats(a, b).ssim); }

Raster downsample2(const Raster& img) {
    const int w = img.width() / 2;
    const int h = img.height() / 2;
    if (w < 1 || h < 1) throw Error(ErrorKind::InvalidInput, "image too small to downsample");
    Raster out(w, h, img.channels());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < img.channels(); ++c) {
                out.at(x, y, c) = 0.25 * (img.at(2 * x, 2 * y, c) + img.at(2 * x + 1, 2 * y, c) +
                                          img.at(2 * x, 2 * y + 1, c) + img.at(2 * x + 1, 2 * y + 1, c));
            }
        }
    }
    return out;
}

MsSsimComponents ms_ssim_components(const Raster& a, const Raster& b, std::span<const double> exponents) {
    require_same_gray(a, b, "MS-SSIM");
    if (exponents.empty()) throw Error(ErrorKind::InvalidInput, "MS-SSIM needs at least one scale");
    const int scales = static_cast<int>(exponents.size());
    const int min_side = 11 << (scales - 1);
    if (std::min(a.width(), a.height()) < min_side) {
        throw Error(ErrorKind::InvalidInput, "MS-SSIM with " + std::to_string(scales) + " scales needs >= " +
                                                 std::to_string(min_side) + " px per side");
    }
    MsSsimComponents out;
    const double total = std::accumulate(exponents.begin(), exponents.end(), 0.0);
    for (double e : exponents) out.exponents.push_back(e / total);
    Raster xa = a;
    Raster xb = b;
    out.value = 1.0;
    for (int s = 0; s < scales; ++s) {
        const SsimStats st = ssim_stats(xa, xb);
        const double term = s + 1 < scales ? st.cs : st.ssim;
        out.terms.push_back(term);
        out.value *= signed_pow(term, out.exponents[s]);
        if (s + 1 < scales) {
            xa = downsample2(xa);
            xb = downsample2(xb);
        }
    }
    return out;
}

MetricScore ms_ssim(const Raster& a, const Raster& b) {
    return make_score(Metric::MSSSIM, ms_ssim_components(a, b, kMsSsimExponents).value);
}

double cw_ssim_value(const Raster& a, const Raster& b, const CwSsimParams& params) {
    require_same_gray(a, b, "CW-SSIM");
    if (std::min(a.width(), a.height()) < 128) {
        throw Error(ErrorKind::InvalidInput, "CW-SSIM needs images of at least 128 px per side");
    }
    const auto bands_a = complex_steerable_pyramid(a, params.levels, params.orientations, params.first_level);
    const auto bands_b = complex_steerable_pyramid(b, params.levels, params.orientations, params.first_level);
    const int win = params.window;
    double sum = 0.0;
    std::size_t windows = 0;
    for (std::size_t i = 0; i < bands_a.size(); ++i) {
        const auto& ba = bands_a[i];
        const auto& bb = bands_b[i];
        const int w = ba.width;
        const int h = ba.height;
        if (w < win || h < win) continue;
        // Summed-area tables of the cross term and both energies.
        const int sw = w + 1;
        std::vector<std::complex<double>> cross((static_cast<std::size_t>(h) + 1) * sw);
        std::vector<double> energy((static_cast<std::size_t>(h) + 1) * sw);
        for (int y = 0; y < h; ++y) {
            std::complex<double> row_cross = 0.0;
            double row_energy = 0.0;
            for (int x = 0; x < w; ++x) {
                const auto ca = ba.at(x, y);
                const auto cb = bb.at(x, y);
                row_cross += ca * std::conj(cb);
                row_energy += std::norm(ca) + std::norm(cb);
                const std::size_t idx = static_cast<std::size_t>(y + 1) * sw + (x + 1);
                cross[idx] = cross[idx - sw] + row_cross;
                energy[idx] = energy[idx - sw] + row_energy;
            }
        }
        auto box = [&](const auto& table, int x, int y) {
            const std::size_t y0 = static_cast<std::size_t>(y) * sw;
            const std::size_t y1 = static_cast<std::size_t>(y + win) * sw;
            return table[y1 + x + win] - table[y0 + x + win] - table[y1 + x] + table[y0 + x];
        };
        for (int y = 0; y + win <= h; ++y) {
            for (int x = 0; x + win <= w; ++x) {
                const double num = 2.0 * std::abs(box(cross, x, y)) + params.k;
                const double den = box(energy, x, y) + params.k;
                sum += num / den;
                ++windows;
            }
        }
    }
    if (windows == 0) throw Error(ErrorKind::InvalidInput, "CW-SSIM found no coefficient windows");
    return sum / static_cast<double>(windows);
}

MetricScore cw_ssim(const Raster& a, const Raster& b) { return make_score(Metric::CWSSIM, cw_ssim_value(a, b)); }

std::size_t hog_descriptor_length(int width, int height, const HogParams& p) {
    const int cells_x = width / p.cell_size;
    const int cells_y = height / p.cell_size;
    const int blocks_x = std::max(0, cells_x - p.block_cells + 1);
    const int blocks_y = std::max(0, cells_y - p.block_cells + 1);
    return static_cast<std::size_t>(blocks_x) * blocks_y * p.block_cells * p.block_cells * p.bins;
}

std::vector<double> hog_descriptor(const Raster& gray, const HogParams& p) {
    if (gray.channels() != 1) throw Error(ErrorKind::InvalidInput, "HOG expects a 1-channel raster");
    if (gray.width() % p.cell_size != 0 || gray.height() % p.cell_size != 0) {
        throw Error(ErrorKind::InvalidInput, "HOG needs dimensions divisible by " + std::to_string(p.cell_size));
    }
    const int cells_x = gray.width() / p.cell_size;
    const int cells_y = gray.height() / p.cell_size;
    std::vector<double> hist(static_cast<std::size_t>(cells_x) * cells_y * p.bins, 0.0);
    const double bin_width = 180.0 / p.bins;
    for (int y = 0; y < gray.height(); ++y) {
        for (int x = 0; x < gray.width(); ++x) {
            const double gx = gray.clamped(x + 1, y) - gray.clamped(x - 1, y);
            const double gy = gray.clamped(x, y + 1) - gray.clamped(x, y - 1);
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double angle = std::atan2(gy, gx) * 180.0 / kPi;
            angle = std::fmod(angle + 180.0, 180.0);
            // Linear vote between the two nearest bin centres.
            const double pos = angle / bin_width - 0.5;
            const double base = std::floor(pos);
            const double frac = pos - base;
            const int b0 = ((static_cast<int>(base) % p.bins) + p.bins) % p.bins;
            const int b1 = (b0 + 1) % p.bins;
            double* cell = hist.data() +
                           (static_cast<std::size_t>(y / p.cell_size) * cells_x + x / p.cell_size) * p.bins;
            cell[b0] += mag * (1.0 - frac);
            cell[b1] += mag * frac;
        }
    }
    const int blocks_x = cells_x - p.block_cells + 1;
    const int blocks_y = cells_y - p.block_cells + 1;
    std::vector<double> desc;
    if (blocks_x < 1 || blocks_y < 1) return desc;
    desc.reserve(hog_descriptor_length(gray.width(), gray.height(), p));
    const double eps2 = 1e-10;
    std::vector<double> block(static_cast<std::size_t>(p.block_cells) * p.block_cells * p.bins);
    for (int by = 0; by < blocks_y; ++by) {
        for (int bx = 0; bx < blocks_x; ++bx) {
            std::size_t k = 0;
            for (int cy = 0; cy < p.block_cells; ++cy) {
                for (int cx = 0; cx < p.block_cells; ++cx) {
                    const double* cell =
                        hist.data() + (static_cast<std::size_t>(by + cy) * cells_x + (bx + cx)) * p.bins;
                    for (int b = 0; b < p.bins; ++b) block[k++] = cell[b];
                }
            }
            // L2-Hys: normalize, clip, renormalize.
            for (int pass = 0; pass < 2; ++pass) {
                double norm = 0.0;
                for (double v : block) norm += v * v;
                const double scale = 1.0 / std::sqrt(norm + eps2);
                for (double& v : block) {
                    v *= scale;
                    if (pass == 0) v = std::min(v, p.clip);
                }
            }
            desc.insert(desc.end(), block.begin(), block.end());
        }
    }
    return desc;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::InvalidPair, "descriptor lengths differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 && nb == 0.0) return 1.0;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

MetricScore hog_similarity(const Raster& a, const Raster& b) {
    require_same_gray(a, b, "HOG");
    const auto da = hog_descriptor(a);
    const auto db = hog_descriptor(b);
    return make_score(Metric::HOG, cosine_similarity(da, db));
}

SimilarityVector score_homogenized(std::string pair_id, std::string method, const Raster& a, const Raster& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw Error(ErrorKind::InvalidPair, "pair views differ in size: " + a.shape_string() + " vs " + b.shape_string());
    }
    const Raster ga = as_grayscale(a);
    const Raster gb = as_grayscale(b);
    SimilarityVector v{std::move(pair_id), std::move(method), {}};
    v.scores.push_back(mae(a, b));
    v.scores.push_back(ssim(ga, gb));
    v.scores.push_back(ms_ssim(ga, gb));
    v.scores.push_back(cw_ssim(ga, gb));
    v.scores.push_back(hog_similarity(ga, gb));
    return v;
}

SimilarityVector score_pair(std::string pair_id, const Raster& input, const Raster& reference, HomogenizationMethod m) {
    const auto [a, b] = homogenize_pair(input, reference, m);
    return score_homogenized(std::move(pair_id), std::string(method_name(m)), a, b);
}

}  // namespace tamperkit
