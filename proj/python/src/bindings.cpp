#include <map>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tamperkit/classify.hpp"
#include "tamperkit/cli.hpp"
#include "tamperkit/dataset.hpp"
#include "tamperkit/error.hpp"
#include "tamperkit/geometry.hpp"
#include "tamperkit/homogenize.hpp"
#include "tamperkit/image_io.hpp"
#include "tamperkit/similarity.hpp"
#include "tamperkit/synth.hpp"

namespace py = pybind11;
using namespace tamperkit;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (H, W) or (H, W, C) float array in [0, 1].
Raster to_raster(const Array& a) {
    if (a.ndim() != 2 && a.ndim() != 3) throw py::value_error("expected an (H, W) or (H, W, C) array");
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
    std::vector<double> data(a.data(), a.data() + a.size());
    return Raster(w, h, c, std::move(data));
}

Array to_array(const Raster& r) {
    std::vector<py::ssize_t> shape{r.height(), r.width()};
    if (r.channels() > 1) shape.push_back(r.channels());
    Array out(shape);
    std::copy(r.data().begin(), r.data().end(), out.mutable_data());
    return out;
}

HomogenizationMethod method_of(const std::string& name) {
    const auto m = parse_method(name);
    if (!m) throw py::value_error("unknown homogenization method: " + name);
    return *m;
}

Keypoints8 keypoints_of(const Array& a) {
    if (a.ndim() != 2 || a.shape(0) != 8 || (a.shape(1) != 2 && a.shape(1) != 3)) {
        throw py::value_error("keypoints must be an (8, 2) or (8, 3) array");
    }
    Keypoints8 k;
    const auto v = a.unchecked<2>();
    for (int i = 0; i < 8; ++i) {
        k.points[i] = {v(i, 0), v(i, 1)};
        if (a.shape(1) == 3) k.flags[i] = static_cast<int>(v(i, 2));
    }
    return k;
}

Array keypoints_array(const Keypoints8& k) {
    Array out({8, 3});
    auto v = out.mutable_unchecked<2>();
    for (int i = 0; i < 8; ++i) {
        v(i, 0) = k.points[i].x;
        v(i, 1) = k.points[i].y;
        v(i, 2) = k.flags[i];
    }
    return out;
}

py::dict record_dict(const AnnotationRecord& r) {
    py::dict d;
    d["image"] = r.image;
    d["parcel_id"] = r.parcel_id;
    d["role"] = r.role;
    d["split"] = r.split;
    d["keypoints"] = keypoints_array(r.keypoints);
    py::dict faces;
    for (const auto& [face, idx] : r.faces) faces[py::str(std::string(face_name(face)))] = idx;
    d["faces"] = faces;
    py::list tampering;
    for (const auto& t : r.tampering) {
        py::dict td;
        td["face"] = std::string(face_name(t.face));
        td["type"] = std::string(tamper_type_name(t.type));
        td["difficulty"] = std::string(difficulty_name(t.difficulty));
        tampering.append(td);
    }
    d["tampering"] = tampering;
    return d;
}

py::dict stump_dict(const Stump& s) {
    py::dict d;
    d["metric"] = s.metric;
    d["threshold"] = s.threshold;
    d["polarity"] = std::string(polarity_name(s.polarity));
    d["train_accuracy"] = s.train_accuracy;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Parcel tampering detection core";

    static py::exception<Error> error(m, "TamperkitError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
            py::setattr(exc, "kind", py::str(to_string(e.kind())));
            PyErr_SetObject(error.ptr(), exc.ptr());
        }
    });

    m.def("read_png", [](const std::filesystem::path& p) { return to_array(read_png(p)); }, py::arg("path"));
    m.def("write_png", [](const std::filesystem::path& p, const Array& a) { write_png(p, to_raster(a)); },
          py::arg("path"), py::arg("image"));
    m.def("to_grayscale", [](const Array& a) { return to_array(as_grayscale(to_raster(a))); }, py::arg("image"));

    m.def("mae", [](const Array& a, const Array& b) { return mae(to_raster(a), to_raster(b)).value; });
    m.def("ssim", [](const Array& a, const Array& b) { return ssim(to_raster(a), to_raster(b)).value; });
    m.def("ms_ssim", [](const Array& a, const Array& b) { return ms_ssim(to_raster(a), to_raster(b)).value; });
    m.def("cw_ssim", [](const Array& a, const Array& b) { return cw_ssim(to_raster(a), to_raster(b)).value; });
    m.def("hog_similarity", [](const Array& a, const Array& b) { return hog_similarity(to_raster(a), to_raster(b)).value; });

    m.def(
        "homogenize",
        [](const Array& input, const Array& reference, const std::string& method) {
            auto [a, b] = homogenize_pair(to_raster(input), to_raster(reference), method_of(method));
            return py::make_tuple(to_array(a), to_array(b));
        },
        py::arg("input"), py::arg("reference"), py::arg("method"));

    m.def(
        "score_pair",
        [](const Array& input, const Array& reference, const std::string& method) {
            const auto v = score_pair("", to_raster(input), to_raster(reference), method_of(method));
            py::dict out;
            for (const auto& s : v.scores) out[py::str(s.metric)] = py::make_tuple(s.value, s.dissimilarity);
            return out;
        },
        py::arg("input"), py::arg("reference"), py::arg("method") = "none",
        "Metric name -> (similarity, dissimilarity) after homogenization.");

    m.def(
        "rectify_face",
        [](const Array& image, const Array& corners, int size) {
            if (corners.ndim() != 2 || corners.shape(0) != 4 || corners.shape(1) != 2) {
                throw py::value_error("corners must be a (4, 2) array ordered TL, TR, BR, BL");
            }
            FaceQuad q;
            const auto v = corners.unchecked<2>();
            for (int i = 0; i < 4; ++i) q.corners[i] = {v(i, 0), v(i, 1)};
            return to_array(rectify_face(to_raster(image), q, size));
        },
        py::arg("image"), py::arg("corners"), py::arg("size") = kRectifiedSize);

    m.def(
        "load_annotations",
        [](const std::filesystem::path& p) {
            py::list out;
            for (const auto& r : load_annotations(p)) out.append(record_dict(r));
            return out;
        },
        py::arg("path"));

    m.def(
        "train_stump",
        [](const std::map<std::string, std::vector<double>>& features, const std::vector<bool>& labels) {
            FeatureTable t;
            for (const auto& [name, col] : features) {
                if (col.size() != labels.size()) throw py::value_error("feature " + name + " length differs from labels");
                t.metrics.push_back(name);
                t.columns.push_back(col);
            }
            std::unique_ptr<bool[]> l(new bool[labels.size()]);
            for (std::size_t i = 0; i < labels.size(); ++i) l[i] = labels[i];
            return stump_dict(train_stump(t, std::span<const bool>(l.get(), labels.size())));
        },
        py::arg("features"), py::arg("labels"), "features: metric -> dissimilarities.");

    m.def(
        "roc_auc",
        [](const std::vector<double>& scores, const std::vector<bool>& labels) {
            if (scores.size() != labels.size()) throw py::value_error("scores and labels differ in length");
            std::unique_ptr<bool[]> l(new bool[labels.size()]);
            for (std::size_t i = 0; i < labels.size(); ++i) l[i] = labels[i];
            return roc_auc(scores, std::span<const bool>(l.get(), labels.size()));
        },
        py::arg("scores"), py::arg("labels"));

    m.def(
        "oks",
        [](const Array& pred, const Array& gt, double area) { return oks(keypoints_of(pred), keypoints_of(gt), area); },
        py::arg("pred"), py::arg("gt"), py::arg("area"));

    m.def(
        "generate_benchmark",
        [](const std::filesystem::path& out, int n_parcels, int images_per_parcel, double tamper_fraction,
           std::uint64_t seed, int image_size, int jobs) {
            BenchmarkConfig cfg;
            cfg.n_parcels = n_parcels;
            cfg.images_per_parcel = images_per_parcel;
            cfg.tamper_fraction = tamper_fraction;
            cfg.seed = seed;
            cfg.image_size = image_size;
            cfg.jobs = jobs;
            BenchmarkSummary s;
            {
                py::gil_scoped_release release;
                s = generate_benchmark(cfg, out);
            }
            py::dict d;
            d["parcels"] = s.parcels;
            d["tampered_parcels"] = s.tampered_parcels;
            d["tampered_faces"] = s.tampered_faces;
            d["images"] = s.images;
            d["pairs"] = s.pairs;
            return d;
        },
        py::arg("out"), py::arg("n_parcels") = 20, py::arg("images_per_parcel") = 4, py::arg("tamper_fraction") = 0.5,
        py::arg("seed") = 7, py::arg("image_size") = 800, py::arg("jobs") = 1);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<std::string> store{"tamperkit"};
            store.insert(store.end(), args.begin(), args.end());
            std::vector<const char*> argv;
            for (const auto& s : store) argv.push_back(s.c_str());
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a tamperkit subcommand; returns (exit_code, stdout, stderr).");
}
