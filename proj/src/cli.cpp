#include "tamperkit/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tamperkit/dataset.hpp"
#include "tamperkit/error.hpp"
#include "tamperkit/image_io.hpp"
#include "tamperkit/pipeline.hpp"
#include "tamperkit/synth.hpp"
#include "tamperkit/util.hpp"

namespace tamperkit {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    int jobs = 0;

    // synth
    int parcels = 20;
    int images_per_parcel = 4;
    double tamper_fraction = 0.5;
    std::uint64_t seed = 7;
    int image_size = 800;
    std::string out;

    // rectify
    std::string image;
    std::string annotations;
    int size = kRectifiedSize;

    // score / train / eval / sweep
    std::string pairs;
    std::vector<std::string> methods;
    std::vector<std::string> precomputed;
    std::string homogenized_dir;
    std::string homogenized_method = "external";
    std::string scores;
    std::string stumps;
    std::string train_split = "train";
    std::string eval_split = "test";
    std::string sweep_split;
    std::string method;

    // distort
    std::string dataset;
    std::vector<double> a_values{kDistortionStudyA.begin(), kDistortionStudyA.end()};
    double b = 0.0, c = 0.0, d = 1.0;
};

void add_jobs(CLI::App* cmd, Options& o) {
    cmd->add_option("--jobs,-j", o.jobs, "Worker threads (default: TAMPERKIT_JOBS or all cores)")
        ->check(CLI::PositiveNumber)
        ->configurable(false);
}

int jobs_of(const Options& o) { return o.jobs > 0 ? o.jobs : default_jobs(); }

// Effective options of the active subcommand, loadable again through --config.
void echo_config(const CLI::App& app, const fs::path& dir, const std::string& command) {
    const CLI::App* sub = app.get_subcommand(command);
    write_text_file(dir / ("tamperkit_" + command + ".toml"), "[" + command + "]\n" + sub->config_to_str(true, false));
}

fs::path parent_or_dot(const fs::path& p) { return p.has_parent_path() ? p.parent_path() : fs::path("."); }

std::vector<HomogenizationMethod> parse_methods(const std::vector<std::string>& names) {
    std::vector<HomogenizationMethod> out;
    if (names.empty()) return {kAllMethods.begin(), kAllMethods.end()};
    for (const auto& n : names) {
        const auto m = parse_method(n);
        if (!m) throw UsageError("unknown method '" + n + "' (expected none, canny, laplacian or meanch)");
        if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
    }
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_synth(const CLI::App& app, const Options& o, std::ostream& out) {
    BenchmarkConfig cfg;
    cfg.n_parcels = o.parcels;
    cfg.images_per_parcel = o.images_per_parcel;
    cfg.tamper_fraction = o.tamper_fraction;
    cfg.seed = o.seed;
    cfg.image_size = o.image_size;
    cfg.jobs = jobs_of(o);
    const auto s = generate_benchmark(cfg, o.out);
    echo_config(app, o.out, "synth");
    out << "synth: " << s.parcels << " parcels (" << s.tampered_parcels << " tampered, " << s.tampered_faces
        << " tampered faces), " << s.images << " input images, " << s.pairs << " pairs -> " << o.out << "\n";
    return kExitOk;
}

int cmd_rectify(const CLI::App& app, const Options& o, std::ostream& out) {
    const fs::path ann_path = o.annotations;
    const auto records = load_annotations(ann_path);
    const fs::path root = parent_or_dot(ann_path);
    std::vector<const AnnotationRecord*> chosen;
    for (const auto& r : records) {
        if (o.image.empty()) {
            chosen.push_back(&r);
            continue;
        }
        const fs::path want = fs::weakly_canonical(fs::path(o.image));
        if (fs::weakly_canonical(root / r.image) == want || r.image == o.image) chosen.push_back(&r);
    }
    if (chosen.empty()) throw Error(ErrorKind::InvalidInput, "no annotation matches image " + o.image);
    std::size_t written = 0;
    for (const auto* r : chosen) {
        const fs::path src = o.image.empty() ? root / r->image : fs::path(o.image);
        const Raster img = read_png(src);
        for (const auto& [face, q] : r->faces) {
            const std::string name = fs::path(r->image).stem().string() + "_" + std::string(face_name(face)) + ".png";
            write_png(fs::path(o.out) / name, rectify_face(img, r->face_quad(face), o.size));
            ++written;
        }
    }
    echo_config(app, o.out, "rectify");
    out << "rectify: wrote " << written << " views to " << o.out << "\n";
    return kExitOk;
}

int cmd_score(const CLI::App& app, const Options& o, std::ostream& out) {
    const auto methods = parse_methods(o.methods);
    const fs::path manifest = o.pairs;
    const auto pairs = load_pair_manifest(manifest);
    auto rows = score_manifest(pairs, parent_or_dot(manifest), methods, jobs_of(o));
    if (!o.homogenized_dir.empty()) {
        rows = merge_scores(std::move(rows), score_precomputed_views(pairs, o.homogenized_dir, o.homogenized_method,
                                                                    jobs_of(o)));
    }
    for (const auto& extra : o.precomputed) rows = merge_scores(std::move(rows), read_scores(extra));
    write_scores(o.out, rows);
    echo_config(app, parent_or_dot(o.out), "score");
    out << "score: " << rows.size() << " rows for " << pairs.size() << " pairs -> " << o.out << "\n";
    return kExitOk;
}

int cmd_train(const CLI::App& app, const Options& o, std::ostream& out) {
    const auto rows = read_scores(o.scores);
    const auto pairs = load_pair_manifest(o.pairs);
    const auto stumps = train_stumps(rows, pairs, o.train_split);
    write_stumps(o.out, stumps);
    echo_config(app, parent_or_dot(o.out), "train");
    for (const auto& s : stumps) {
        out << "train: " << s.method << ": " << s.metric << " " << polarity_name(s.polarity) << " threshold "
            << format_number(s.threshold) << " accuracy " << format_number(s.train_accuracy) << "\n";
    }
    return kExitOk;
}

int cmd_eval(const CLI::App& app, const Options& o, std::ostream& out) {
    const auto stumps = read_stumps(o.stumps);
    const auto rows = read_scores(o.scores);
    const auto pairs = load_pair_manifest(o.pairs);
    const auto evals = evaluate_stumps(stumps, rows, pairs, o.eval_split);
    const fs::path dir = o.out;
    write_text_file(dir / "report.json", evaluation_json(evals, o.eval_split));
    write_text_file(dir / "table.csv", evaluation_table_csv(evals));
    write_text_file(dir / "per_type_recall.csv", per_type_csv(evals));
    echo_config(app, dir, "eval");
    for (const auto& e : evals) {
        out << "eval: " << e.stump.method << ": accuracy " << format_number(e.pairs.accuracy) << " roc_auc "
            << format_number(e.pairs.roc_auc) << " parcel recall " << format_number(e.parcels.recall) << "\n";
    }
    return kExitOk;
}

int cmd_distort(const CLI::App& app, const Options& o, std::ostream& out) {
    std::vector<DistortionSummary> rows;
    for (double a : o.a_values) {
        DistortionParams p{a, o.b, o.c, o.d};
        rows.push_back(distort_dataset(o.dataset, o.out, p, jobs_of(o)));
        const auto& r = rows.back();
        out << "distort: A=" << format_number(a) << " kept " << r.kept << "/" << r.records << " (discarded "
            << r.discarded << ") -> " << r.dir.string() << "\n";
    }
    write_text_file(fs::path(o.out) / "distortion_summary.csv", distortion_summary_csv(rows));
    echo_config(app, o.out, "distort");
    return kExitOk;
}

int cmd_sweep_angle(const CLI::App& app, const Options& o, std::ostream& out) {
    const auto stumps = read_stumps(o.stumps);
    if (stumps.empty()) throw Error(ErrorKind::InvalidInput, o.stumps + " holds no stumps");
    const Stump* chosen = nullptr;
    for (const auto& s : stumps) {
        if (!o.method.empty()) {
            if (s.method == o.method) chosen = &s;
        } else if (!chosen || s.train_accuracy > chosen->train_accuracy) {
            chosen = &s;
        }
    }
    if (!chosen) throw Error(ErrorKind::InvalidInput, "no stump for method " + o.method);
    const auto rows = read_scores(o.scores);
    const auto pairs = load_pair_manifest(o.pairs);
    const auto sweep = sweep_angle(*chosen, rows, pairs, o.sweep_split);
    write_text_file(o.out, angle_rows_csv(sweep));
    echo_config(app, parent_or_dot(o.out), "sweep-angle");
    out << "sweep-angle: " << sweep.size() << " rows (" << chosen->method << "/" << chosen->metric << ") -> " << o.out
        << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Parcel tampering detection toolkit", "tamperkit"};
    app.set_config("--config", "", "TOML file with option values; flags override it");
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    Options o;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark dataset");
    synth->add_option("--parcels", o.parcels, "Number of parcels")->check(CLI::PositiveNumber);
    synth->add_option("--images-per-parcel", o.images_per_parcel, "Input captures per parcel")->check(CLI::PositiveNumber);
    synth->add_option("--tamper-fraction", o.tamper_fraction, "Fraction of tampered parcels")->check(CLI::Range(0.0, 1.0));
    synth->add_option("--seed", o.seed, "Master seed");
    synth->add_option("--image-size", o.image_size, "Capture width and height in px")->check(CLI::Range(200, 8192));
    synth->add_option("--out", o.out, "Output directory")->required();
    add_jobs(synth, o);

    auto* rectify = app.add_subcommand("rectify", "Rectify the visible faces of annotated images");
    rectify->add_option("--annotations", o.annotations, "Annotation JSON")->required()->check(CLI::ExistingFile);
    rectify->add_option("--image", o.image, "Only this image (default: every record)");
    rectify->add_option("--out", o.out, "Output directory")->required();
    rectify->add_option("--size", o.size, "Output side length")->check(CLI::Range(8, 4096));

    auto* score = app.add_subcommand("score", "Score side pairs under homogenization methods");
    score->add_option("--pairs", o.pairs, "Pair manifest CSV")->required()->check(CLI::ExistingFile);
    score->add_option("--methods", o.methods, "Methods: none, canny, laplacian, meanch (default all)")->delimiter(',');
    score->add_option("--precomputed", o.precomputed, "External score CSV(s) to merge")->check(CLI::ExistingFile);
    score->add_option("--homogenized-dir", o.homogenized_dir, "Directory of <pair_id>_a.png/_b.png views")
        ->check(CLI::ExistingDirectory);
    score->add_option("--homogenized-method", o.homogenized_method, "Method name for --homogenized-dir rows");
    score->add_option("--out", o.out, "Output scores CSV")->required();
    add_jobs(score, o);

    auto* train = app.add_subcommand("train", "Fit one decision stump per method");
    train->add_option("--scores", o.scores, "Scores CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--pairs", o.pairs, "Pair manifest CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--split", o.train_split, "Training split (empty = all pairs)");
    train->add_option("--out", o.out, "Output stumps JSON")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate stumps on a split");
    eval->add_option("--stumps", o.stumps, "Stumps JSON")->required();
    eval->add_option("--scores", o.scores, "Scores CSV")->required()->check(CLI::ExistingFile);
    eval->add_option("--pairs", o.pairs, "Pair manifest CSV")->required()->check(CLI::ExistingFile);
    eval->add_option("--split", o.eval_split, "Evaluation split (empty = all pairs)");
    eval->add_option("--out", o.out, "Output directory")->required();

    auto* distort = app.add_subcommand("distort", "Write barrel-distorted dataset variants");
    distort->add_option("--dataset", o.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    distort->add_option("--A", o.a_values, "Comma-separated A values")->delimiter(',');
    distort->add_option("--B", o.b, "B coefficient");
    distort->add_option("--C", o.c, "C coefficient");
    distort->add_option("--D", o.d, "D coefficient")->check(CLI::PositiveNumber);
    distort->add_option("--out", o.out, "Output directory")->required();
    add_jobs(distort, o);

    auto* sweep = app.add_subcommand("sweep-angle", "Per-pair viewing angle against stump verdicts");
    sweep->add_option("--stumps", o.stumps, "Stumps JSON")->required();
    sweep->add_option("--scores", o.scores, "Scores CSV")->required()->check(CLI::ExistingFile);
    sweep->add_option("--pairs", o.pairs, "Pair manifest CSV")->required()->check(CLI::ExistingFile);
    sweep->add_option("--method", o.method, "Stump to use (default: best training accuracy)");
    sweep->add_option("--split", o.sweep_split, "Restrict to a split (default: all pairs)");
    sweep->add_option("--out", o.out, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (*synth) return cmd_synth(app, o, out);
        if (*rectify) return cmd_rectify(app, o, out);
        if (*score) return cmd_score(app, o, out);
        if (*train) return cmd_train(app, o, out);
        if (*eval) return cmd_eval(app, o, out);
        if (*distort) return cmd_distort(app, o, out);
        if (*sweep) return cmd_sweep_angle(app, o, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace tamperkit
