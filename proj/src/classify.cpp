#include "tamperkit/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace tamperkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Candidate {
    std::size_t correct = 0;
    std::size_t metric = 0;
    double threshold = 0.0;
    Polarity polarity = Polarity::GreaterIsTampered;
};

}  // namespace

std::string_view polarity_name(Polarity p) {
    return p == Polarity::GreaterIsTampered ? "greater-is-tampered" : "less-is-tampered";
}

Polarity parse_polarity(std::string_view name) {
    if (name == "greater-is-tampered") return Polarity::GreaterIsTampered;
    if (name == "less-is-tampered") return Polarity::LessIsTampered;
    throw Error(ErrorKind::Parse, "unknown stump polarity '" + std::string(name) + "'");
}

FeatureTable feature_table(std::span<const SimilarityVector> vectors) {
    FeatureTable table;
    if (vectors.empty()) return table;
    for (const auto& s : vectors.front().scores) table.metrics.push_back(s.metric);
    std::stable_sort(table.metrics.begin(), table.metrics.end(),
                     [](const std::string& a, const std::string& b) { return metric_order_less(a, b); });
    table.columns.assign(table.metrics.size(), std::vector<double>(vectors.size()));
    for (std::size_t r = 0; r < vectors.size(); ++r) {
        for (std::size_t m = 0; m < table.metrics.size(); ++m) {
            const MetricScore* s = vectors[r].find(table.metrics[m]);
            if (s == nullptr) {
                throw Error(ErrorKind::InvalidInput,
                            "pair '" + vectors[r].pair_id + "' lacks metric '" + table.metrics[m] + "'");
            }
            table.columns[m][r] = s->dissimilarity;
        }
    }
    return table;
}

std::vector<double> candidate_thresholds(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<double> out;
    out.reserve(sorted.size() + 1);
    out.push_back(-kInf);
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) out.push_back(sorted[i] + 0.5 * (sorted[i + 1] - sorted[i]));
    out.push_back(kInf);
    return out;
}

Stump train_stump(const FeatureTable& table, std::span<const bool> labels) {
    const std::size_t n = labels.size();
    if (table.metrics.empty()) throw Error(ErrorKind::InvalidInput, "stump training needs at least one metric");
    if (n < 2) throw Error(ErrorKind::InvalidInput, "stump training needs at least 2 samples");
    if (table.rows() != n) throw Error(ErrorKind::InvalidInput, "feature rows and labels differ in length");
    const std::size_t positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
    if (positives == 0 || positives == n) {
        throw Error(ErrorKind::DegenerateTraining, "training set contains a single class");
    }
    const std::size_t negatives = n - positives;

    Candidate best;
    bool have_best = false;
    auto offer = [&](const Candidate& c) {
        if (!have_best || c.correct > best.correct) {
            best = c;
            have_best = true;
        }
    };
    std::vector<std::size_t> order(n);
    for (std::size_t m = 0; m < table.metrics.size(); ++m) {
        const auto& col = table.columns[m];
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
        // Sweep thresholds left to right; pos_le / neg_le count samples at or below t.
        std::size_t pos_le = 0;
        std::size_t neg_le = 0;
        auto emit = [&](double t) {
            const std::size_t greater_correct = (positives - pos_le) + neg_le;
            const std::size_t less_correct = pos_le + (negatives - neg_le);
            offer({greater_correct, m, t, Polarity::GreaterIsTampered});
            offer({less_correct, m, t, Polarity::LessIsTampered});
        };
        emit(-kInf);
        std::size_t i = 0;
        while (i < n) {
            const double v = col[order[i]];
            while (i < n && col[order[i]] == v) {
                (labels[order[i]] ? pos_le : neg_le) += 1;
                ++i;
            }
            if (i < n) emit(v + 0.5 * (col[order[i]] - v));
        }
        emit(kInf);
    }
    Stump s;
    s.metric = table.metrics[best.metric];
    s.threshold = best.threshold;
    s.polarity = best.polarity;
    s.train_accuracy = static_cast<double>(best.correct) / static_cast<double>(n);
    return s;
}

Stump train_stump(std::span<const SimilarityVector> vectors, std::span<const bool> labels) {
    if (vectors.size() != labels.size()) throw Error(ErrorKind::InvalidInput, "vectors and labels differ in length");
    Stump s = train_stump(feature_table(vectors), labels);
    if (!vectors.empty()) s.method = vectors.front().method;
    return s;
}

bool predict_value(const Stump& stump, double dissimilarity) {
    return stump.polarity == Polarity::GreaterIsTampered ? dissimilarity > stump.threshold
                                                         : dissimilarity < stump.threshold;
}

bool predict(const Stump& stump, const SimilarityVector& v) {
    const MetricScore* s = v.find(stump.metric);
    if (s == nullptr) {
        throw Error(ErrorKind::InvalidInput, "pair '" + v.pair_id + "' has no score for metric '" + stump.metric + "'");
    }
    return predict_value(stump, s->dissimilarity);
}

bool aggregate_parcel(std::span<const bool> side_verdicts) {
    if (side_verdicts.empty()) throw Error(ErrorKind::InvalidInput, "parcel aggregation needs at least one side");
    return std::any_of(side_verdicts.begin(), side_verdicts.end(), [](bool v) { return v; });
}

double roc_auc(std::span<const double> scores, std::span<const bool> labels) {
    if (scores.size() != labels.size()) throw Error(ErrorKind::InvalidInput, "scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    std::size_t positives = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) {
                rank_sum += avg_rank;
                ++positives;
            }
        }
        i = j;
    }
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) return 0.5;
    const double p = static_cast<double>(positives);
    const double u = rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(negatives));
}

EvalReport evaluate_binary(std::span<const bool> predictions, std::span<const bool> labels,
                           std::span<const double> scores) {
    if (predictions.size() != labels.size() || scores.size() != labels.size()) {
        throw Error(ErrorKind::InvalidInput, "predictions, labels and scores must have equal length");
    }
    if (labels.empty()) throw Error(ErrorKind::InvalidInput, "evaluation needs at least one sample");
    EvalReport r;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (predictions[i] && labels[i]) ++r.counts.tp;
        else if (predictions[i]) ++r.counts.fp;
        else if (labels[i]) ++r.counts.fn;
        else ++r.counts.tn;
    }
    const auto& c = r.counts;
    r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    r.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    r.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    r.roc_auc = roc_auc(scores, labels);
    return r;
}

std::vector<TypeRecall> per_type_recall(std::span<const bool> predictions, std::span<const bool> labels,
                                        std::span<const std::string> types, std::span<const std::string> difficulties) {
    if (predictions.size() != labels.size() || types.size() != labels.size() || difficulties.size() != labels.size()) {
        throw Error(ErrorKind::InvalidInput, "per-type recall inputs differ in length");
    }
    std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> tally;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels[i] || types[i].empty()) continue;
        auto& [hits, total] = tally[{types[i], difficulties[i]}];
        ++total;
        if (predictions[i]) ++hits;
    }
    std::vector<TypeRecall> out;
    for (const auto& [key, counts] : tally) {
        out.push_back({key.first, key.second, counts.second,
                       static_cast<double>(counts.first) / static_cast<double>(counts.second)});
    }
    return out;
}

double oks(const Keypoints8& pred, const Keypoints8& gt, double area, const OksParams& params) {
    if (!(area > 0.0)) throw Error(ErrorKind::InvalidInput, "OKS needs a positive object area");
    double sum = 0.0;
    int labeled = 0;
    for (int i = 0; i < 8; ++i) {
        if (!gt.labeled(i)) continue;
        const double d2 = std::pow(distance(pred.points[i], gt.points[i]), 2);
        sum += std::exp(-d2 / (2.0 * area * params.kappa[i] * params.kappa[i]));
        ++labeled;
    }
    if (labeled == 0) throw Error(ErrorKind::InvalidInput, "OKS needs at least one labeled ground-truth keypoint");
    return sum / labeled;
}

double keypoint_ap_at(std::span<const ScoredKeypoints> detections, std::span<const GroundTruthKeypoints> truths,
                      double threshold, const OksParams& params) {
    if (truths.empty()) return 0.0;
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return detections[a].score > detections[b].score; });
    std::vector<bool> matched(truths.size(), false);
    std::vector<double> precision;
    std::vector<double> recall;
    std::size_t tp = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const auto& det = detections[order[rank]];
        double best = -1.0;
        std::size_t best_gt = truths.size();
        for (std::size_t g = 0; g < truths.size(); ++g) {
            if (matched[g] || truths[g].image_id != det.image_id) continue;
            const double o = oks(det.keypoints, truths[g].keypoints, truths[g].area, params);
            if (o >= threshold && o > best) {
                best = o;
                best_gt = g;
            }
        }
        if (best_gt < truths.size()) {
            matched[best_gt] = true;
            ++tp;
        }
        precision.push_back(static_cast<double>(tp) / static_cast<double>(rank + 1));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(truths.size()));
    }
    // Precision envelope from the right, then sum over recall increments.
    for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < precision.size(); ++i) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
    }
    return 100.0 * ap;
}

KeypointApResult keypoint_ap(std::span<const ScoredKeypoints> detections, std::span<const GroundTruthKeypoints> truths,
                             const OksParams& params) {
    KeypointApResult r;
    for (std::size_t i = 0; i < kOksThresholds.size(); ++i) {
        r.ap[i] = keypoint_ap_at(detections, truths, kOksThresholds[i], params);
    }
    r.mean = std::accumulate(r.ap.begin(), r.ap.end(), 0.0) / static_cast<double>(r.ap.size());
    return r;
}

}  // namespace tamperkit
