#include "tamperkit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <set>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "tamperkit/error.hpp"
#include "tamperkit/image_io.hpp"
#include "tamperkit/util.hpp"

namespace tamperkit {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

int default_jobs() {
    if (const char* env = std::getenv("TAMPERKIT_JOBS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// ------------------------------------------------------------------ scores

namespace {

int method_rank(std::string_view m) {
    if (const auto known = parse_method(m)) return static_cast<int>(*known);
    return static_cast<int>(kAllMethods.size());
}

bool method_less(std::string_view a, std::string_view b) {
    const int ra = method_rank(a), rb = method_rank(b);
    return ra != rb ? ra < rb : a < b;
}

std::string threshold_text(double t) {
    if (std::isinf(t)) return t > 0 ? "+inf" : "-inf";
    return format_number(t);
}

double parse_threshold(const std::string& s) {
    if (s == "+inf" || s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::Parse, "bad threshold '" + s + "'");
}

double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::Parse, where + ": '" + s + "' is not a number");
}

bool in_split(const PairRecord& p, const std::string& split) { return split.empty() || p.split == split; }

std::vector<ScoreRow> rows_of(const SimilarityVector& v) {
    std::vector<ScoreRow> out;
    for (const auto& s : v.scores) out.push_back({v.pair_id, v.method, s.metric, s.value, s.dissimilarity});
    return out;
}

}  // namespace

bool score_row_less(const ScoreRow& a, const ScoreRow& b) {
    if (a.pair_id != b.pair_id) return a.pair_id < b.pair_id;
    if (a.method != b.method) return method_less(a.method, b.method);
    return metric_order_less(a.metric, b.metric);
}

std::vector<ScoreRow> score_manifest(std::span<const PairRecord> pairs, const fs::path& manifest_dir,
                                     std::span<const HomogenizationMethod> methods, int jobs) {
    std::vector<std::vector<ScoreRow>> per_pair(pairs.size());
    parallel_for(pairs.size(), jobs, [&](std::size_t i) {
        const SidePair sp = load_side_pair(pairs[i], manifest_dir);
        for (auto m : methods) {
            auto rows = rows_of(score_pair(pairs[i].pair_id, sp.input_view, sp.reference_view, m));
            per_pair[i].insert(per_pair[i].end(), rows.begin(), rows.end());
        }
    });
    std::vector<ScoreRow> out;
    for (auto& r : per_pair) out.insert(out.end(), r.begin(), r.end());
    std::stable_sort(out.begin(), out.end(), score_row_less);
    return out;
}

std::vector<ScoreRow> score_precomputed_views(std::span<const PairRecord> pairs, const fs::path& dir,
                                              const std::string& method, int jobs) {
    std::vector<std::vector<ScoreRow>> per_pair(pairs.size());
    parallel_for(pairs.size(), jobs, [&](std::size_t i) {
        const auto pc = load_precomputed_pair(dir, pairs[i].pair_id);
        if (!pc) return;
        per_pair[i] = rows_of(score_homogenized(pairs[i].pair_id, method, pc->input, pc->reference));
    });
    std::vector<ScoreRow> out;
    for (auto& r : per_pair) out.insert(out.end(), r.begin(), r.end());
    std::stable_sort(out.begin(), out.end(), score_row_less);
    return out;
}

std::vector<ScoreRow> merge_scores(std::vector<ScoreRow> base, std::span<const ScoreRow> extra) {
    std::set<std::tuple<std::string, std::string, std::string>> keys;
    for (const auto& r : base) keys.emplace(r.pair_id, r.method, r.metric);
    for (const auto& r : extra) {
        if (keys.emplace(r.pair_id, r.method, r.metric).second) base.push_back(r);
    }
    std::stable_sort(base.begin(), base.end(), score_row_less);
    return base;
}

std::string scores_to_csv(std::span<const ScoreRow> rows) {
    std::string out = csv_row({"pair_id", "method", "metric", "value", "dissimilarity"});
    for (const auto& r : rows) {
        out += csv_row({r.pair_id, r.method, r.metric, format_number(r.value), format_number(r.dissimilarity)});
    }
    return out;
}

void write_scores(const fs::path& path, std::span<const ScoreRow> rows) { write_text_file(path, scores_to_csv(rows)); }

std::vector<ScoreRow> read_scores(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t c_pair = t.column("pair_id"), c_method = t.column("method"), c_metric = t.column("metric"),
                      c_value = t.column("value"), c_dis = t.column("dissimilarity");
    std::vector<ScoreRow> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        const std::string where = path.string() + " row " + std::to_string(i + 2);
        rows.push_back({r[c_pair], r[c_method], r[c_metric], parse_double(r[c_value], where),
                        parse_double(r[c_dis], where)});
    }
    return rows;
}

std::vector<SimilarityVector> vectors_for(std::span<const ScoreRow> rows, std::span<const PairRecord> pairs,
                                          const std::string& method) {
    std::map<std::string, SimilarityVector> by_pair;
    for (const auto& r : rows) {
        if (r.method != method) continue;
        auto& v = by_pair[r.pair_id];
        v.pair_id = r.pair_id;
        v.method = method;
        v.scores.push_back({r.metric, r.value, r.dissimilarity});
    }
    std::vector<SimilarityVector> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        const auto it = by_pair.find(p.pair_id);
        if (it == by_pair.end()) {
            throw Error(ErrorKind::InvalidInput, "no " + method + " scores for pair " + p.pair_id);
        }
        auto v = it->second;
        std::stable_sort(v.scores.begin(), v.scores.end(),
                         [](const MetricScore& a, const MetricScore& b) { return metric_order_less(a.metric, b.metric); });
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<std::string> methods_in(std::span<const ScoreRow> rows) {
    std::set<std::string> names;
    for (const auto& r : rows) names.insert(r.method);
    std::vector<std::string> out(names.begin(), names.end());
    std::stable_sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) { return method_less(a, b); });
    return out;
}

// ------------------------------------------------------------------ stumps

std::vector<Stump> train_stumps(std::span<const ScoreRow> rows, std::span<const PairRecord> pairs,
                                const std::string& split) {
    std::vector<PairRecord> train;
    for (const auto& p : pairs) {
        if (in_split(p, split)) train.push_back(p);
    }
    if (train.empty()) throw Error(ErrorKind::InvalidInput, "no pairs in split '" + split + "'");
    std::vector<bool> label_store;
    for (const auto& p : train) label_store.push_back(p.label);
    const std::unique_ptr<bool[]> labels(new bool[label_store.size()]);
    for (std::size_t i = 0; i < label_store.size(); ++i) labels[i] = label_store[i];

    std::vector<Stump> stumps;
    for (const auto& method : methods_in(rows)) {
        const auto vectors = vectors_for(rows, train, method);
        Stump s = train_stump(vectors, std::span<const bool>(labels.get(), label_store.size()));
        s.method = method;
        stumps.push_back(std::move(s));
    }
    return stumps;
}

std::string stumps_to_json(std::span<const Stump> stumps) {
    ordered_json doc = ordered_json::array();
    for (const auto& s : stumps) {
        ordered_json j;
        j["method"] = s.method;
        j["metric"] = s.metric;
        if (std::isinf(s.threshold)) j["threshold"] = threshold_text(s.threshold);
        else j["threshold"] = s.threshold;
        j["polarity"] = polarity_name(s.polarity);
        j["train_accuracy"] = s.train_accuracy;
        doc.push_back(std::move(j));
    }
    return doc.dump(1) + "\n";
}

void write_stumps(const fs::path& path, std::span<const Stump> stumps) { write_text_file(path, stumps_to_json(stumps)); }

std::vector<Stump> read_stumps(const fs::path& path) {
    const std::string text = read_text_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    if (doc.is_object()) doc = nlohmann::json::array({doc});
    if (!doc.is_array()) throw Error(ErrorKind::Parse, path.string() + ": expected an array of stumps");
    std::vector<Stump> stumps;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& j = doc[i];
        const std::string where = path.string() + " [" + std::to_string(i) + "]";
        try {
            Stump s;
            s.method = j.at("method").get<std::string>();
            s.metric = j.at("metric").get<std::string>();
            const auto& t = j.at("threshold");
            s.threshold = t.is_string() ? parse_threshold(t.get<std::string>()) : t.get<double>();
            s.polarity = parse_polarity(j.at("polarity").get<std::string>());
            if (j.contains("train_accuracy")) s.train_accuracy = j["train_accuracy"].get<double>();
            stumps.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Parse, where + ": " + e.what());
        } catch (const Error& e) {
            throw Error(ErrorKind::Parse, where + ": " + e.what());
        }
    }
    return stumps;
}

// -------------------------------------------------------------- evaluation

namespace {

double oriented(const Stump& s, double dissimilarity) {
    return s.polarity == Polarity::GreaterIsTampered ? dissimilarity : -dissimilarity;
}

std::unique_ptr<bool[]> bool_array(const std::vector<bool>& v) {
    std::unique_ptr<bool[]> out(new bool[std::max<std::size_t>(1, v.size())]);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
    return out;
}

}  // namespace

std::vector<MethodEvaluation> evaluate_stumps(std::span<const Stump> stumps, std::span<const ScoreRow> rows,
                                              std::span<const PairRecord> pairs, const std::string& split) {
    std::vector<PairRecord> test;
    for (const auto& p : pairs) {
        if (in_split(p, split)) test.push_back(p);
    }
    if (test.empty()) throw Error(ErrorKind::InvalidInput, "no pairs in split '" + split + "'");
    std::vector<bool> labels;
    std::vector<std::string> types, diffs;
    for (const auto& p : test) {
        labels.push_back(p.label);
        types.emplace_back(p.type ? tamper_type_name(*p.type) : "");
        diffs.emplace_back(p.difficulty ? difficulty_name(*p.difficulty) : "");
    }
    const auto label_arr = bool_array(labels);
    const std::span<const bool> label_span(label_arr.get(), labels.size());

    std::vector<MethodEvaluation> out;
    for (const auto& stump : stumps) {
        MethodEvaluation ev;
        ev.stump = stump;
        const auto vectors = vectors_for(rows, test, stump.method);
        std::vector<double> scores;
        for (const auto& v : vectors) {
            ev.predictions.push_back(predict(stump, v));
            scores.push_back(oriented(stump, v.find(stump.metric)->dissimilarity));
        }
        const auto pred_arr = bool_array(ev.predictions);
        const std::span<const bool> pred_span(pred_arr.get(), ev.predictions.size());
        ev.pairs = evaluate_binary(pred_span, label_span, scores);
        ev.pairs.per_type = per_type_recall(pred_span, label_span, types, diffs);

        // Parcel verdicts per capture: OR over the visible sides.
        std::map<std::string, std::size_t> slot;
        std::vector<double> parcel_scores;
        for (std::size_t i = 0; i < test.size(); ++i) {
            auto [it, fresh] = slot.emplace(test[i].image, ev.verdicts.size());
            if (fresh) {
                ev.verdicts.push_back({test[i].image, test[i].parcel_id, false, false, false});
                parcel_scores.push_back(-INFINITY);
            }
            auto& v = ev.verdicts[it->second];
            v.label = v.label || test[i].label;
            v.predicted = v.predicted || ev.predictions[i];
            v.has_easy_label = v.has_easy_label || (test[i].type == TamperType::Label && test[i].difficulty == Difficulty::Easy);
            parcel_scores[it->second] = std::max(parcel_scores[it->second], scores[i]);
        }
        std::vector<bool> pl, pp;
        for (const auto& v : ev.verdicts) {
            pl.push_back(v.label);
            pp.push_back(v.predicted);
        }
        const auto pl_arr = bool_array(pl), pp_arr = bool_array(pp);
        ev.parcels = evaluate_binary(std::span<const bool>(pp_arr.get(), pp.size()),
                                     std::span<const bool>(pl_arr.get(), pl.size()), parcel_scores);
        out.push_back(std::move(ev));
    }
    return out;
}

namespace {

ordered_json report_json(const EvalReport& r) {
    ordered_json j = {{"accuracy", r.accuracy},
                      {"precision", r.precision},
                      {"recall", r.recall},
                      {"f1", r.f1},
                      {"roc_auc", r.roc_auc},
                      {"counts", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn}, {"fn", r.counts.fn}}}};
    if (!r.per_type.empty()) {
        ordered_json rows = ordered_json::array();
        for (const auto& t : r.per_type) {
            rows.push_back({{"type", t.type}, {"difficulty", t.difficulty}, {"samples", t.samples}, {"recall", t.recall}});
        }
        j["per_type"] = rows;
    }
    return j;
}

}  // namespace

std::string evaluation_json(std::span<const MethodEvaluation> evals, const std::string& split) {
    ordered_json methods = ordered_json::array();
    for (const auto& ev : evals) {
        ordered_json stump = {{"metric", ev.stump.metric},
                              {"threshold", threshold_text(ev.stump.threshold)},
                              {"polarity", polarity_name(ev.stump.polarity)},
                              {"train_accuracy", ev.stump.train_accuracy}};
        methods.push_back({{"method", ev.stump.method},
                           {"stump", stump},
                           {"pairs", report_json(ev.pairs)},
                           {"parcels", report_json(ev.parcels)}});
    }
    ordered_json doc = {{"split", split}, {"methods", methods}};
    return doc.dump(1) + "\n";
}

std::string evaluation_table_csv(std::span<const MethodEvaluation> evals) {
    std::string out = csv_row({"method", "metric", "threshold", "polarity", "accuracy", "precision", "recall", "f1",
                               "roc_auc", "parcel_accuracy", "parcel_precision", "parcel_recall", "parcel_f1", "pairs",
                               "images"});
    for (const auto& ev : evals) {
        out += csv_row({ev.stump.method, ev.stump.metric, threshold_text(ev.stump.threshold),
                        std::string(polarity_name(ev.stump.polarity)), format_number(ev.pairs.accuracy),
                        format_number(ev.pairs.precision), format_number(ev.pairs.recall), format_number(ev.pairs.f1),
                        format_number(ev.pairs.roc_auc), format_number(ev.parcels.accuracy),
                        format_number(ev.parcels.precision), format_number(ev.parcels.recall),
                        format_number(ev.parcels.f1), std::to_string(ev.pairs.counts.total()),
                        std::to_string(ev.parcels.counts.total())});
    }
    return out;
}

std::string per_type_csv(std::span<const MethodEvaluation> evals) {
    std::string out = csv_row({"method", "type", "difficulty", "samples", "recall"});
    for (const auto& ev : evals) {
        for (const auto& t : ev.pairs.per_type) {
            out += csv_row({ev.stump.method, t.type, t.difficulty, std::to_string(t.samples), format_number(t.recall)});
        }
    }
    return out;
}

// --------------------------------------------------------------- distortion

std::optional<AnnotationRecord> distort_annotation(const AnnotationRecord& record, const DistortionParams& p, int width,
                                                   int height) {
    AnnotationRecord out = record;
    const Point2 center = image_center(width, height);
    const double radius = normalization_radius(width, height);
    for (int k = 0; k < 8; ++k) {
        if (!record.keypoints.labeled(k)) continue;
        const auto q = undistort_point(record.keypoints.points[k], p, center, radius);
        if (!q || !std::isfinite(q->x) || !std::isfinite(q->y)) return std::nullopt;
        if (q->x < -0.5 || q->y < -0.5 || q->x > width - 0.5 || q->y > height - 0.5) return std::nullopt;
        out.keypoints.points[k] = *q;
    }
    if (!validate_record(out).empty()) return std::nullopt;
    return out;
}

std::string distortion_dir_name(double A) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "A_%g", A == 0.0 ? 0.0 : A);
    return buf;
}

DistortionSummary distort_dataset(const fs::path& dataset, const fs::path& out, const DistortionParams& p, int jobs) {
    p.validate();
    const fs::path ann_path = dataset / "annotations.json";
    const auto records = load_annotations(ann_path);
    DistortionSummary summary;
    summary.A = p.A;
    summary.B = p.B;
    summary.C = p.C;
    summary.D = p.D;
    summary.dir = out / distortion_dir_name(p.A);
    const fs::path dir = summary.dir;
    std::error_code ec;
    fs::remove_all(dir, ec);
    try {
        fs::create_directories(dir);
        if (fs::exists(dataset / "references")) {
            fs::copy(dataset / "references", dir / "references", fs::copy_options::recursive);
        }
    } catch (const fs::filesystem_error& e) {
        throw Error(ErrorKind::Io, e.what());
    }

    std::vector<std::optional<AnnotationRecord>> kept(records.size());
    parallel_for(records.size(), jobs, [&](std::size_t i) {
        const auto& r = records[i];
        const fs::path src = dataset / r.image;
        const fs::path dst = dir / r.image;
        if (r.role != "input" || p.is_identity()) {
            fs::create_directories(dst.parent_path());
            fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
            kept[i] = r;
            return;
        }
        const Raster img = read_png(src);
        auto moved = distort_annotation(r, p, img.width(), img.height());
        if (!moved) return;
        write_png(dst, apply_barrel_distortion(img, p));
        kept[i] = std::move(*moved);
    });

    std::vector<AnnotationRecord> out_records, inputs;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].role == "input") ++summary.records;
        if (!kept[i]) continue;
        if (records[i].role == "input") {
            ++summary.kept;
            inputs.push_back(*kept[i]);
        }
        out_records.push_back(*kept[i]);
    }
    summary.discarded = summary.records - summary.kept;
    if (p.is_identity()) {
        fs::copy_file(ann_path, dir / "annotations.json", fs::copy_options::overwrite_existing);
    } else {
        save_annotations(dir / "annotations.json", out_records);
    }
    write_pairs(inputs, TextureStore(dir / "references"), {dir, dir / "pairs", jobs});
    return summary;
}

std::string distortion_summary_csv(std::span<const DistortionSummary> rows) {
    std::string out = csv_row({"A", "B", "C", "D", "dir", "records", "kept", "discarded"});
    for (const auto& r : rows) {
        out += csv_row({format_number(r.A), format_number(r.B), format_number(r.C), format_number(r.D),
                        r.dir.filename().string(), std::to_string(r.records), std::to_string(r.kept),
                        std::to_string(r.discarded)});
    }
    return out;
}

// ----------------------------------------------------------- angle sweep

std::vector<AngleRow> sweep_angle(const Stump& stump, std::span<const ScoreRow> rows, std::span<const PairRecord> pairs,
                                  const std::string& split) {
    std::vector<PairRecord> selected;
    for (const auto& p : pairs) {
        if (in_split(p, split)) selected.push_back(p);
    }
    const auto vectors = vectors_for(rows, selected, stump.method);
    std::vector<AngleRow> out;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const MetricScore* s = vectors[i].find(stump.metric);
        if (!s) throw Error(ErrorKind::InvalidInput, selected[i].pair_id + " lacks metric " + stump.metric);
        out.push_back({selected[i].pair_id, selected[i].viewing_angle, stump.method, stump.metric, s->dissimilarity,
                       selected[i].label, predict_value(stump, s->dissimilarity)});
    }
    std::stable_sort(out.begin(), out.end(), [](const AngleRow& a, const AngleRow& b) { return a.pair_id < b.pair_id; });
    return out;
}

std::string angle_rows_csv(std::span<const AngleRow> rows) {
    std::string out = csv_row({"pair_id", "viewing_angle", "method", "metric", "dissimilarity", "label", "predicted",
                               "correct"});
    for (const auto& r : rows) {
        out += csv_row({r.pair_id, format_number(r.viewing_angle), r.method, r.metric, format_number(r.dissimilarity),
                        r.label ? "1" : "0", r.predicted ? "1" : "0", r.label == r.predicted ? "1" : "0"});
    }
    return out;
}

}  // namespace tamperkit
