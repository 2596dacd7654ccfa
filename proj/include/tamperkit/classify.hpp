#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tamperkit/geometry.hpp"
#include "tamperkit/similarity.hpp"

namespace tamperkit {

enum class Polarity { GreaterIsTampered, LessIsTampered };

std::string_view polarity_name(Polarity p);
Polarity parse_polarity(std::string_view name);

/// Depth-one decision tree over one dissimilarity metric. Thresholds may be
/// +-infinity when no split beats predicting a single class.
struct Stump {
    std::string metric;
    double threshold = 0.0;
    Polarity polarity = Polarity::GreaterIsTampered;
    std::string method;
    double train_accuracy = 0.0;
};

/// Column-major training data: one column of dissimilarities per metric.
struct FeatureTable {
    std::vector<std::string> metrics;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// Collects the dissimilarities of every metric present in the first vector,
/// ordered built-ins first. Throws if any vector lacks one of them.
FeatureTable feature_table(std::span<const SimilarityVector> vectors);

/// Candidate thresholds for one column: -inf, midpoints between consecutive
/// distinct sorted values, +inf.
std::vector<double> candidate_thresholds(std::span<const double> values);

/// Exhaustive accuracy-maximizing split. Ties go to the lower metric index,
/// then the lower threshold, then greater-is-tampered.
Stump train_stump(const FeatureTable& table, std::span<const bool> labels);
Stump train_stump(std::span<const SimilarityVector> vectors, std::span<const bool> labels);

// Strict comparison: a value equal to the threshold is never tampered.
bool predict_value(const Stump& stump, double dissimilarity);
bool predict(const Stump& stump, const SimilarityVector& v);

// Parcel verdict: tampered if any side is.
bool aggregate_parcel(std::span<const bool> side_verdicts);

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

struct TypeRecall {
    std::string type;        // label, tape, writing
    std::string difficulty;  // easy, hard
    std::size_t samples = 0;
    double recall = 0.0;
};

/// Undefined ratios (no predicted positives, no positives, only one class for
/// ROC-AUC) are reported as 0, 0 and 0.5 respectively.
struct EvalReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double roc_auc = 0.5;
    ConfusionCounts counts;
    std::vector<TypeRecall> per_type;
};

/// Mann-Whitney statistic of positive vs negative scores, ties counted 0.5.
double roc_auc(std::span<const double> scores, std::span<const bool> labels);

/// Confusion metrics of the binary predictions; ROC-AUC from the continuous
/// `scores` (higher = more likely tampered).
EvalReport evaluate_binary(std::span<const bool> predictions, std::span<const bool> labels,
                           std::span<const double> scores);

/// Recall per (type, difficulty) tag among positives; untampered samples carry
/// empty tags and are skipped. Rows come out sorted by (type, difficulty).
std::vector<TypeRecall> per_type_recall(std::span<const bool> predictions, std::span<const bool> labels,
                                        std::span<const std::string> types, std::span<const std::string> difficulties);

// -------------------------------------------------------- keypoint metrics

struct OksParams {
    // 0.1 for the self-occluded K5, 0.05 for the seven visible corners.
    std::array<double, 8> kappa{0.05, 0.05, 0.05, 0.05, 0.05, 0.1, 0.05, 0.05};
};

/// Object keypoint similarity over the ground truth's labeled keypoints, with
/// s^2 = object area in px^2.
double oks(const Keypoints8& pred, const Keypoints8& gt, double area, const OksParams& params = {});

struct ScoredKeypoints {
    std::string image_id;
    Keypoints8 keypoints;
    double score = 0.0;
};

struct GroundTruthKeypoints {
    std::string image_id;
    Keypoints8 keypoints;
    double area = 0.0;
};

inline constexpr std::array<double, 10> kOksThresholds = {0.50, 0.55, 0.60, 0.65, 0.70,
                                                          0.75, 0.80, 0.85, 0.90, 0.95};

struct KeypointApResult {
    std::array<double, 10> ap{};  // percent, per threshold in kOksThresholds
    double mean = 0.0;
};

/// Greedy matching in descending confidence; each detection takes the unmatched
/// ground truth of its image with the highest OKS at or above the threshold. AP
/// is the all-point interpolated area under the precision-recall curve.
double keypoint_ap_at(std::span<const ScoredKeypoints> detections, std::span<const GroundTruthKeypoints> truths,
                      double threshold, const OksParams& params = {});
KeypointApResult keypoint_ap(std::span<const ScoredKeypoints> detections, std::span<const GroundTruthKeypoints> truths,
                             const OksParams& params = {});

}  // namespace tamperkit
