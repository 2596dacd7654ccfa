#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tamperkit/homogenize.hpp"
#include "tamperkit/raster.hpp"

namespace tamperkit {

enum class Metric { MAE = 0, SSIM = 1, MSSSIM = 2, CWSSIM = 3, HOG = 4 };

inline constexpr std::array<Metric, 5> kAllMetrics = {Metric::MAE, Metric::SSIM, Metric::MSSSIM, Metric::CWSSIM,
                                                      Metric::HOG};

std::string_view metric_name(Metric m);
std::optional<Metric> parse_metric(std::string_view name);
// Built-in metrics first in enum order, then any external metric alphabetically.
bool metric_order_less(std::string_view a, std::string_view b);

/// One metric evaluated on one pair. `dissimilarity` is oriented so that larger
/// means more different: MAE as is, 1 - value for the similarity indices.
/// Metric ids are strings so externally computed scores (for example LPIPS)
/// can share the vector with the built-ins.
struct MetricScore {
    std::string metric;
    double value = 0.0;
    double dissimilarity = 0.0;
};

MetricScore make_score(Metric m, double value);

struct SimilarityVector {
    std::string pair_id;
    std::string method;
    std::vector<MetricScore> scores;

    const MetricScore* find(std::string_view metric) const;
};

MetricScore mae(const Raster& a, const Raster& b);

// ------------------------------------------------------------------ SSIM

struct SsimParams {
    double sigma = 1.5;  // 11x11 Gaussian window
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// Means over the valid-window maps: luminance*contrast*structure and the
/// contrast*structure part alone.
struct SsimStats {
    double ssim = 0.0;
    double cs = 0.0;
};

SsimStats ssim_stats(const Raster& a, const Raster& b, const SsimParams& params = {});
MetricScore ssim(const Raster& a, const Raster& b);

inline constexpr std::array<double, 5> kMsSsimExponents = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

/// Per-scale terms: cs at every scale but the last, full SSIM at the last.
struct MsSsimComponents {
    std::vector<double> terms;
    std::vector<double> exponents;  // renormalized to sum 1
    double value = 0.0;
};

// 2x2 box filter followed by decimation; odd trailing rows/columns are dropped.
Raster downsample2(const Raster& img);

MsSsimComponents ms_ssim_components(const Raster& a, const Raster& b, std::span<const double> exponents);
MetricScore ms_ssim(const Raster& a, const Raster& b);

// --------------------------------------------------------------- CW-SSIM

struct CwSsimParams {
    int levels = 4;
    int orientations = 6;
    int first_level = 2;  // finest level used for pooling (1-based)
    int window = 7;
    double k = 1e-8;
};

double cw_ssim_value(const Raster& a, const Raster& b, const CwSsimParams& params = {});
MetricScore cw_ssim(const Raster& a, const Raster& b);

// ------------------------------------------------------------------- HOG

struct HogParams {
    int bins = 9;           // unsigned, 0-180 degrees
    int cell_size = 8;      // pixels per cell side
    int block_cells = 2;    // cells per block side, stride one cell
    double clip = 0.2;      // L2-Hys
};

std::size_t hog_descriptor_length(int width, int height, const HogParams& params = {});
std::vector<double> hog_descriptor(const Raster& gray, const HogParams& params = {});
double cosine_similarity(std::span<const double> a, std::span<const double> b);
MetricScore hog_similarity(const Raster& a, const Raster& b);

// ------------------------------------------------------------- pipeline

/// All metrics on an already homogenized pair. MAE sees every channel; the
/// structural metrics and HOG see the grayscale conversion.
SimilarityVector score_homogenized(std::string pair_id, std::string method, const Raster& a, const Raster& b);

SimilarityVector score_pair(std::string pair_id, const Raster& input, const Raster& reference, HomogenizationMethod m);

}  // namespace tamperkit
