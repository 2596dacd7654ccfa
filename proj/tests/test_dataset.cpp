#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <string>

#include "tamperkit/dataset.hpp"
#include "tamperkit/error.hpp"
#include "tamperkit/geometry.hpp"
#include "tamperkit/image_io.hpp"
#include "tamperkit/similarity.hpp"
#include "tamperkit/synth.hpp"
#include "tamperkit/util.hpp"
#include "test_support.hpp"

using namespace tamperkit;
namespace fs = std::filesystem;

namespace {

struct View {
    RenderedScene scene;
    AnnotationRecord record;
};

FaceTextures textures_for(std::uint64_t seed) {
    Rng rng(seed);
    return make_parcel_textures(random_texture_spec(rng), seed);
}

View render_view(const FaceTextures& tex, std::uint64_t seed, FaceId side, FaceId cap, const std::string& image,
                 int size = 400) {
    SceneConfig cfg;
    cfg.seed = seed;
    cfg.image_size = size;
    cfg.side = side;
    cfg.cap = cap;
    cfg.gain_min = cfg.gain_max = 1.0;
    View v{render_scene(cfg, tex), {}};
    v.record = v.scene.annotation;
    v.record.image = image;
    v.record.parcel_id = "p0001";
    return v;
}

std::vector<std::string> rules_of(const std::vector<Diagnostic>& d) {
    std::vector<std::string> out;
    for (const auto& x : d) out.push_back(x.rule);
    return out;
}

bool has_rule(const std::vector<Diagnostic>& d, const std::string& rule) {
    const auto r = rules_of(d);
    return std::find(r.begin(), r.end(), rule) != r.end();
}

const FaceTextures& shared_textures() {
    static const FaceTextures tex = textures_for(11);
    return tex;
}

}  // namespace

TEST(Annotations, EmptyListParses) {
    EXPECT_TRUE(parse_annotations("[]").empty());
    EXPECT_TRUE(parse_annotations("  [ ]\n").empty());
}

TEST(Annotations, RenderedRecordsValidate) {
    for (std::uint64_t s = 0; s < 16; ++s) {
        const FaceId side = (s & 1) ? FaceId::SideB : FaceId::SideA;
        const FaceId cap = (s & 2) ? FaceId::Bottom : FaceId::Top;
        const auto v = render_view(shared_textures(), 100 + s, side, cap, "x.png", 200);
        EXPECT_TRUE(validate_record(v.record).empty()) << "seed " << s;
        EXPECT_EQ(v.record.faces.size(), 3u);
        EXPECT_FALSE(v.record.faces.count(FaceId::Back));
    }
}

TEST(Annotations, K2RightOfK3IsRejected) {
    auto v = render_view(shared_textures(), 3, FaceId::SideA, FaceId::Top, "x.png", 200);
    auto& pts = v.record.keypoints.points;
    pts[2].x = pts[3].x + 5.0;
    const auto diags = validate_record(v.record);
    ASSERT_FALSE(diags.empty());
    EXPECT_TRUE(has_rule(diags, "k2-leftmost"));

    const std::string json = annotations_to_json(std::vector<AnnotationRecord>{v.record});
    try {
        parse_annotations(json);
        FAIL() << "expected a validation error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Validation);
        EXPECT_NE(std::string(e.what()).find("k2-leftmost"), std::string::npos) << e.what();
    }
}

TEST(Annotations, BackFaceIsRejected) {
    auto v = render_view(shared_textures(), 4, FaceId::SideA, FaceId::Top, "x.png", 200);
    const auto front = v.record.faces.at(FaceId::Front);
    v.record.faces.erase(FaceId::Front);
    v.record.faces[FaceId::Back] = front;
    EXPECT_TRUE(has_rule(validate_record(v.record), "back-face-hidden"));
}

TEST(Annotations, SchemaErrorsCarryFieldPath) {
    const std::string bad_flag = R"([
 {"image": "a.png", "parcel_id": "p1",
  "keypoints": [[1,2,2],[3,4,2],[5,6,2],[7,8,"x"],[1,1,2],[1,1,1],[1,1,2],[1,1,2]],
  "faces": {"front": [0,1,3,2]}}
])";
    try {
        parse_annotations(bad_flag);
        FAIL() << "expected a parse error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_NE(std::string(e.what()).find("[0].keypoints[3][2]"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }

    const std::string missing_image = R"([{"parcel_id": "p1", "keypoints": [], "faces": {}}])";
    try {
        parse_annotations(missing_image);
        FAIL() << "expected a parse error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_NE(std::string(e.what()).find("image"), std::string::npos) << e.what();
    }

    EXPECT_THROW(parse_annotations("{\"image\": 1}"), Error);
    EXPECT_THROW(parse_annotations("[{"), Error);
}

TEST(Annotations, JsonRoundTrip) {
    auto v = render_view(shared_textures(), 6, FaceId::SideB, FaceId::Bottom, "images/p0001_00.png", 200);
    v.record.tampering = {{FaceId::Front, TamperType::Tape, Difficulty::Hard},
                          {FaceId::Bottom, TamperType::Writing, Difficulty::Easy}};
    v.record.split = "test";
    auto ref = v.record;
    ref.role = "reference";
    ref.tampering.clear();
    const std::vector<AnnotationRecord> records{v.record, ref};
    const std::string json = annotations_to_json(records);
    const auto back = parse_annotations(json);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(annotations_to_json(back), json);
    EXPECT_EQ(back[0].image, "images/p0001_00.png");
    EXPECT_EQ(back[0].split, "test");
    EXPECT_EQ(back[1].role, "reference");
    ASSERT_NE(back[0].tampering_for(FaceId::Bottom), nullptr);
    EXPECT_EQ(back[0].tampering_for(FaceId::Bottom)->type, TamperType::Writing);
    EXPECT_EQ(back[0].tampering_for(FaceId::SideB), nullptr);
    for (int k = 0; k < 8; ++k) {
        EXPECT_DOUBLE_EQ(back[0].keypoints.points[k].x, v.record.keypoints.points[k].x);
        EXPECT_EQ(back[0].keypoints.flags[k], v.record.keypoints.flags[k]);
    }
}

TEST(Annotations, LoadReportsPath) {
    const auto dir = tktest::scratch_dir("load_path");
    write_text_file(dir / "a.json", "[1]");
    try {
        load_annotations(dir / "a.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("a.json"), std::string::npos);
    }
    EXPECT_THROW(load_annotations(dir / "missing.json"), Error);
}

TEST(TextureMap, TwoViewsRecoverSourceFaces) {
    const auto& tex = shared_textures();
    const auto a = render_view(tex, 21, FaceId::SideA, FaceId::Top, "a.png");
    const auto b = render_view(tex, 22, FaceId::SideB, FaceId::Bottom, "b.png");
    const std::vector<AnnotationRecord> recs{a.record, b.record};
    const auto map = compose_texture_map(recs, [&](const AnnotationRecord& r) {
        return r.image == "a.png" ? a.scene.image : b.scene.image;
    });
    EXPECT_EQ(map.parcel_id, "p0001");
    ASSERT_EQ(map.faces.size(), 5u);
    for (const auto& [face, raster] : map.faces) {
        EXPECT_EQ(raster.width(), kRectifiedSize);
        EXPECT_EQ(raster.height(), kRectifiedSize);
        const double s = ssim(to_grayscale(raster), to_grayscale(tex[static_cast<int>(face)])).value;
        EXPECT_GT(s, 0.9) << face_name(face);
    }
    EXPECT_EQ(map.layout.width(), 1200);
    EXPECT_EQ(map.layout.height(), 1200);
    EXPECT_EQ(kLayoutSize, 1200);
}

TEST(TextureMap, LayoutCellsFollowCross) {
    std::map<FaceId, Raster> faces;
    const FaceId five[] = {FaceId::Front, FaceId::SideA, FaceId::SideB, FaceId::Top, FaceId::Bottom};
    for (int i = 0; i < 5; ++i) faces[five[i]] = Raster(kRectifiedSize, kRectifiedSize, 3, 0.1 + 0.2 * i);
    const Raster layout = texture_layout(faces);
    auto cell = [&](int cx, int cy) { return layout.at(cx * 400 + 200, cy * 400 + 200); };
    EXPECT_DOUBLE_EQ(cell(1, 1), 0.1);  // front
    EXPECT_DOUBLE_EQ(cell(0, 1), 0.3);  // side_a
    EXPECT_DOUBLE_EQ(cell(2, 1), 0.5);  // side_b
    EXPECT_DOUBLE_EQ(cell(1, 0), 0.7);  // top
    EXPECT_DOUBLE_EQ(cell(1, 2), 0.9);  // bottom
}

TEST(TextureMap, LargerQuadWinsDuplicateCoverage) {
    const auto& tex = shared_textures();
    auto near = render_view(tex, 31, FaceId::SideA, FaceId::Top, "near.png");
    auto far = near;
    far.record.image = "far.png";
    // Shrink every keypoint of the copy towards the image centre.
    for (auto& p : far.record.keypoints.points) {
        p.x = 200.0 + 0.5 * (p.x - 200.0);
        p.y = 200.0 + 0.5 * (p.y - 200.0);
    }
    auto other = render_view(tex, 32, FaceId::SideB, FaceId::Bottom, "other.png");
    const Raster bright(400, 400, 3, 0.9), dark(400, 400, 3, 0.2);
    const std::vector<AnnotationRecord> recs{far.record, near.record, other.record};
    const auto map = compose_texture_map(recs, [&](const AnnotationRecord& r) {
        if (r.image == "near.png") return bright;
        if (r.image == "far.png") return dark;
        return other.scene.image;
    });
    EXPECT_NEAR(map.face(FaceId::Front).at(200, 200), 0.9, 1e-9);
}

TEST(TextureMap, MissingFacesAreListed) {
    const auto v = render_view(shared_textures(), 41, FaceId::SideA, FaceId::Top, "a.png", 200);
    const std::vector<AnnotationRecord> recs{v.record};
    try {
        compose_texture_map(recs, [&](const AnnotationRecord&) { return v.scene.image; });
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::IncompleteTexture);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("side_b"), std::string::npos) << msg;
        EXPECT_NE(msg.find("bottom"), std::string::npos) << msg;
        EXPECT_EQ(msg.find("front"), std::string::npos) << msg;
    }
}

TEST(TextureMap, StoreRoundTrip) {
    const auto dir = tktest::scratch_dir("store");
    ParcelTextureMap map;
    map.parcel_id = "p7";
    const FaceId five[] = {FaceId::Front, FaceId::SideA, FaceId::SideB, FaceId::Top, FaceId::Bottom};
    for (int i = 0; i < 5; ++i) map.faces[five[i]] = tktest::random_raster(400, 400, 3, 50 + i);
    map.layout = texture_layout(map.faces);
    save_texture_map(dir, map);
    EXPECT_TRUE(fs::exists(dir / "p7" / "layout.png"));
    EXPECT_TRUE(fs::exists(dir / "p7" / "side_a.png"));
    const TextureStore store(dir);
    EXPECT_TRUE(store.contains("p7"));
    EXPECT_FALSE(store.contains("p8"));
    const auto back = load_texture_map(dir, "p7");
    for (const auto& [face, r] : back.faces) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            ASSERT_NEAR(r.data()[i], map.faces.at(face).data()[i], 0.5 / 255.0 + 1e-12);
        }
    }
}

namespace {

// A texture store holding parcel p0001 built from two reference renders.
struct PairFixture {
    fs::path dir;
    View a, b, input;

    explicit PairFixture(const std::string& name) : dir(tktest::scratch_dir(name)) {
        const auto& tex = shared_textures();
        a = render_view(tex, 51, FaceId::SideA, FaceId::Top, "ref0.png");
        b = render_view(tex, 52, FaceId::SideB, FaceId::Bottom, "ref1.png");
        const std::vector<AnnotationRecord> recs{a.record, b.record};
        const auto map = compose_texture_map(recs, [&](const AnnotationRecord& r) {
            return r.image == "ref0.png" ? a.scene.image : b.scene.image;
        });
        save_texture_map(dir / "references", map);
        input = render_view(tex, 53, FaceId::SideB, FaceId::Top, "images/in.png");
        input.record.split = "test";
        write_png(dir / "images" / "in.png", input.scene.image);
    }
};

}  // namespace

TEST(Pairs, ThreePairsPerImage) {
    PairFixture fx("pairs_three");
    const TextureStore store(fx.dir / "references");
    const std::vector<AnnotationRecord> inputs{fx.input.record};
    const auto pairs = build_pairs(inputs, store);
    ASSERT_EQ(pairs.size(), 3u);
    for (const auto& p : pairs) {
        EXPECT_FALSE(p.label);
        EXPECT_FALSE(p.type.has_value());
        EXPECT_EQ(p.parcel_id, "p0001");
        EXPECT_EQ(p.split, "test");
        EXPECT_EQ(p.pair_id, "in_" + std::string(face_name(p.face)));
        EXPECT_GE(p.viewing_angle, 0.0);
        EXPECT_LE(p.viewing_angle, 90.0);
    }
    EXPECT_TRUE(std::is_sorted(pairs.begin(), pairs.end(),
                               [](const PairRecord& x, const PairRecord& y) { return x.pair_id < y.pair_id; }));
}

TEST(Pairs, LabelsFollowTampering) {
    PairFixture fx("pairs_labels");
    auto rec = fx.input.record;
    rec.tampering = {{FaceId::Top, TamperType::Label, Difficulty::Easy}, {FaceId::Bottom, TamperType::Tape, Difficulty::Hard}};
    const TextureStore store(fx.dir / "references");
    const std::vector<AnnotationRecord> inputs{rec};
    const auto pairs = build_pairs(inputs, store);
    ASSERT_EQ(pairs.size(), 3u);
    int positives = 0;
    for (const auto& p : pairs) {
        if (p.face == FaceId::Top) {
            EXPECT_TRUE(p.label);
            EXPECT_EQ(p.type, TamperType::Label);
            EXPECT_EQ(p.difficulty, Difficulty::Easy);
        }
        positives += p.label;
    }
    // Bottom is not visible in this capture.
    EXPECT_EQ(positives, 1);
}

TEST(Pairs, UnknownParcelIsMissingReference) {
    PairFixture fx("pairs_missing");
    auto rec = fx.input.record;
    rec.parcel_id = "nope";
    const TextureStore store(fx.dir / "references");
    const std::vector<AnnotationRecord> inputs{rec};
    try {
        build_pairs(inputs, store);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingReference);
    }
}

TEST(Pairs, WrittenManifestIsDeterministicAndLoadable) {
    PairFixture fx("pairs_write");
    const TextureStore store(fx.dir / "references");
    const std::vector<AnnotationRecord> inputs{fx.input.record};
    const auto first = write_pairs(inputs, store, {fx.dir, fx.dir / "pairs", 1});
    const std::string csv1 = read_text_file(fx.dir / "pairs" / "pairs.csv");
    const std::string view1 = read_text_file(fx.dir / "pairs" / first[0].input_view);
    write_pairs(inputs, store, {fx.dir, fx.dir / "pairs", 3});
    EXPECT_EQ(read_text_file(fx.dir / "pairs" / "pairs.csv"), csv1);
    EXPECT_EQ(read_text_file(fx.dir / "pairs" / first[0].input_view), view1);

    const auto loaded = load_pair_manifest(fx.dir / "pairs" / "pairs.csv");
    ASSERT_EQ(loaded.size(), 3u);
    const auto header = parse_csv(csv1).header;
    for (const char* col : {"pair_id", "parcel_id", "face_id", "label", "type", "difficulty"}) {
        EXPECT_NE(std::find(header.begin(), header.end(), col), header.end()) << col;
    }
    for (const auto& p : loaded) {
        const auto sp = load_side_pair(p, fx.dir / "pairs");
        EXPECT_EQ(sp.input_view.width(), 400);
        EXPECT_TRUE(sp.input_view.same_shape(sp.reference_view));
        // The saved view is the rectified face of the capture.
        const auto expect = rectify_face(read_png(fx.dir / "images" / "in.png"), fx.input.record.face_quad(p.face));
        double worst = 0.0;
        for (std::size_t i = 0; i < expect.size(); ++i) {
            worst = std::max(worst, std::abs(expect.data()[i] - sp.input_view.data()[i]));
        }
        EXPECT_LE(worst, 0.5 / 255.0 + 1e-9);
    }
}
