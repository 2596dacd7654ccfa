#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tamperkit/classify.hpp"
#include "tamperkit/dataset.hpp"
#include "tamperkit/geometry.hpp"
#include "tamperkit/homogenize.hpp"
#include "tamperkit/similarity.hpp"

namespace tamperkit {

// TAMPERKIT_JOBS if set and valid, else the hardware concurrency.
int default_jobs();

// ------------------------------------------------------------------ scores

struct ScoreRow {
    std::string pair_id;
    std::string method;
    std::string metric;
    double value = 0.0;
    double dissimilarity = 0.0;
};

// Sort key: pair_id, then method in table order, then metric in table order.
bool score_row_less(const ScoreRow& a, const ScoreRow& b);

std::vector<ScoreRow> score_manifest(std::span<const PairRecord> pairs, const std::filesystem::path& manifest_dir,
                                     std::span<const HomogenizationMethod> methods, int jobs);

// Scores externally homogenized pairs (<dir>/<pair_id>_a.png and _b.png) under
// `method`; pairs without files are skipped.
std::vector<ScoreRow> score_precomputed_views(std::span<const PairRecord> pairs, const std::filesystem::path& dir,
                                              const std::string& method, int jobs);

// Adds rows of `extra` whose (pair, method, metric) key is not yet present; result sorted.
std::vector<ScoreRow> merge_scores(std::vector<ScoreRow> base, std::span<const ScoreRow> extra);

std::string scores_to_csv(std::span<const ScoreRow> rows);
void write_scores(const std::filesystem::path& path, std::span<const ScoreRow> rows);
std::vector<ScoreRow> read_scores(const std::filesystem::path& path);

// Similarity vectors for one method, in pair order; pairs lacking scores are an error.
std::vector<SimilarityVector> vectors_for(std::span<const ScoreRow> rows, std::span<const PairRecord> pairs,
                                          const std::string& method);
std::vector<std::string> methods_in(std::span<const ScoreRow> rows);

// ------------------------------------------------------------------ stumps

// One stump per method present in `rows`, trained on pairs whose split matches.
std::vector<Stump> train_stumps(std::span<const ScoreRow> rows, std::span<const PairRecord> pairs,
                                const std::string& split);

std::string stumps_to_json(std::span<const Stump> stumps);
void write_stumps(const std::filesystem::path& path, std::span<const Stump> stumps);
std::vector<Stump> read_stumps(const std::filesystem::path& path);

// -------------------------------------------------------------- evaluation

struct ParcelVerdict {
    std::string image;
    std::string parcel_id;
    bool label = false;
    bool predicted = false;
    bool has_easy_label = false;  // a visible face carries an easy label
};

struct MethodEvaluation {
    Stump stump;
    EvalReport pairs;
    EvalReport parcels;  // per image, OR over its visible sides
    std::vector<bool> predictions;  // aligned with the evaluated pairs
    std::vector<ParcelVerdict> verdicts;
};

std::vector<MethodEvaluation> evaluate_stumps(std::span<const Stump> stumps, std::span<const ScoreRow> rows,
                                              std::span<const PairRecord> pairs, const std::string& split);

std::string evaluation_json(std::span<const MethodEvaluation> evals, const std::string& split);
std::string evaluation_table_csv(std::span<const MethodEvaluation> evals);
std::string per_type_csv(std::span<const MethodEvaluation> evals);

// --------------------------------------------------------------- distortion

struct DistortionSummary {
    double A = 0, B = 0, C = 0, D = 1;
    std::filesystem::path dir;
    std::size_t records = 0;
    std::size_t kept = 0;
    std::size_t discarded = 0;
};

// Keypoints mapped into a distorted image; empty when any labeled corner
// cannot be mapped or leaves the image, or the faces fail validation.
std::optional<AnnotationRecord> distort_annotation(const AnnotationRecord& record, const DistortionParams& p,
                                                   int width, int height);

// Writes <out>/A_<A>/ with distorted input captures, unchanged references and rebuilt pairs.
DistortionSummary distort_dataset(const std::filesystem::path& dataset, const std::filesystem::path& out,
                                  const DistortionParams& p, int jobs);

std::string distortion_dir_name(double A);
std::string distortion_summary_csv(std::span<const DistortionSummary> rows);

// ----------------------------------------------------------- angle sweep

struct AngleRow {
    std::string pair_id;
    double viewing_angle = 0.0;
    std::string method;
    std::string metric;
    double dissimilarity = 0.0;
    bool label = false;
    bool predicted = false;
};

// One row per pair (restricted to `split` unless empty), judged by `stump`.
std::vector<AngleRow> sweep_angle(const Stump& stump, std::span<const ScoreRow> rows, std::span<const PairRecord> pairs,
                                  const std::string& split);
std::string angle_rows_csv(std::span<const AngleRow> rows);

}  // namespace tamperkit
