#include "tamperkit/dataset.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tamperkit/error.hpp"
#include "tamperkit/image_io.hpp"
#include "tamperkit/util.hpp"

namespace tamperkit {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view tamper_type_name(TamperType t) {
    switch (t) {
        case TamperType::Label: return "label";
        case TamperType::Tape: return "tape";
        case TamperType::Writing: return "writing";
    }
    return "?";
}

std::optional<TamperType> parse_tamper_type(std::string_view name) {
    for (auto t : {TamperType::Label, TamperType::Tape, TamperType::Writing}) {
        if (tamper_type_name(t) == name) return t;
    }
    return std::nullopt;
}

std::string_view difficulty_name(Difficulty d) { return d == Difficulty::Easy ? "easy" : "hard"; }

std::optional<Difficulty> parse_difficulty(std::string_view name) {
    if (name == "easy") return Difficulty::Easy;
    if (name == "hard") return Difficulty::Hard;
    return std::nullopt;
}

const FaceTampering* AnnotationRecord::tampering_for(FaceId face) const {
    for (const auto& t : tampering) {
        if (t.face == face) return &t;
    }
    return nullptr;
}

FaceQuad AnnotationRecord::face_quad(FaceId face) const {
    const auto it = faces.find(face);
    if (it == faces.end()) {
        throw Error(ErrorKind::InvalidInput, image + " has no quad for face " + std::string(face_name(face)));
    }
    FaceQuad q;
    q.face_id = face;
    q.keypoint_indices = it->second;
    for (int i = 0; i < 4; ++i) q.corners[i] = keypoints.points[it->second[i]];
    return q;
}

std::string Diagnostic::to_string() const {
    std::string out = "record " + std::to_string(record);
    if (line) out += " (line " + std::to_string(line) + ")";
    out += ": " + rule + ": " + message;
    return out;
}

// ------------------------------------------------------------- validation

namespace {

std::string kname(int k) { return "K" + std::to_string(k); }

bool contains(const std::array<int, 4>& q, int k) { return std::find(q.begin(), q.end(), k) != q.end(); }

std::set<int> as_set(const std::array<int, 4>& q) { return {q.begin(), q.end()}; }

// True when a and b sit at opposite corners of the 4-cycle.
bool diagonal(const std::array<int, 4>& q, int a, int b) {
    for (int i = 0; i < 4; ++i) {
        if (q[i] == a) return q[(i + 2) % 4] == b;
    }
    return false;
}

}  // namespace

std::vector<Diagnostic> validate_record(const AnnotationRecord& r) {
    std::vector<Diagnostic> out;
    auto fail = [&](std::string rule, std::string msg) { out.push_back({0, 0, std::move(rule), std::move(msg)}); };

    if (r.faces.count(FaceId::Back)) fail("back-face-hidden", "the back face can never be visible");
    if (r.faces.size() != 3) {
        fail("three-visible-faces", "expected 3 face quads, got " + std::to_string(r.faces.size()));
        return out;
    }
    for (const auto& [face, q] : r.faces) {
        if (as_set(q).size() != 4) fail("face-indices", std::string(face_name(face)) + " repeats a keypoint index");
    }
    if (!out.empty()) return out;

    for (const auto& [face, q] : r.faces) {
        if (contains(q, 5)) fail("k5-self-occluded", std::string(face_name(face)) + " uses K5");
        if (!contains(q, 0)) fail("k0-on-visible-faces", std::string(face_name(face)) + " does not contain K0");
    }
    if (r.keypoints.visible(5)) fail("k5-self-occluded", "K5 must not be flagged visible");
    for (int k = 0; k < 8; ++k) {
        if (k != 5 && !r.keypoints.visible(k)) fail("visible-corner-flags", kname(k) + " must be flagged visible");
    }

    const std::array<int, 4>* front = nullptr;
    std::vector<const std::array<int, 4>*> sides;
    for (const auto& [face, q] : r.faces) {
        if (as_set(q) == std::set<int>{0, 1, 2, 3}) {
            if (front) fail("front-face", "two faces use K0..K3");
            front = &q;
        } else {
            sides.push_back(&q);
        }
    }
    if (!front) {
        fail("front-face", "no face is made of K0, K1, K2, K3");
    } else if (!diagonal(*front, 0, 1)) {
        fail("k1-opposite-k0", "K1 must be the front corner opposite K0");
    }
    if (sides.size() == 2) {
        const std::array<int, 4>* k2_face = nullptr;
        const std::array<int, 4>* k3_face = nullptr;
        for (const auto* q : sides) {
            const auto s = as_set(*q);
            if (s == std::set<int>{0, 2, 4, 6} || s == std::set<int>{0, 2, 4, 7}) k2_face = q;
            if (s == std::set<int>{0, 3, 4, 6} || s == std::set<int>{0, 3, 4, 7}) k3_face = q;
        }
        if (!k2_face || !k3_face) {
            fail("side-faces", "the two side faces must be K0, K4, one of K2/K3 and one of K6/K7");
        } else {
            const int b2 = contains(*k2_face, 6) ? 6 : 7;
            const int b3 = contains(*k3_face, 6) ? 6 : 7;
            if (b2 == b3) fail("side-faces", "K6 and K7 must lie on different side faces");
            if (!diagonal(*k2_face, 0, b2) || !diagonal(*k3_face, 0, b3)) {
                fail("side-faces", "K6/K7 must be opposite K0 on their side face");
            }
        }
    }

    const auto& p = r.keypoints.points;
    if (!(p[2].x < p[3].x)) {
        fail("k2-leftmost", "K2.x (" + format_number(p[2].x) + ") must be less than K3.x (" + format_number(p[3].x) + ")");
    }
    if (!(p[6].x < p[7].x)) {
        fail("k6-leftmost", "K6.x (" + format_number(p[6].x) + ") must be less than K7.x (" + format_number(p[7].x) + ")");
    }
    for (const auto& [face, q] : r.faces) {
        const FaceQuad fq = r.face_quad(face);
        if (!is_simple_quad(fq.corners) || signed_area(fq.corners) <= 0.0) {
            fail("quad-orientation", std::string(face_name(face)) +
                                         " corners must form a simple quad read clockwise on screen (TL, TR, BR, BL)");
        }
    }
    return out;
}

// ----------------------------------------------------------------- parsing

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& msg) {
    throw Error(ErrorKind::Parse, path + ": " + msg);
}

const json& member(const json& obj, const char* key, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) schema_error(path, std::string("missing field '") + key + "'");
    return *it;
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) schema_error(path, "expected a string");
    return v.get<std::string>();
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) schema_error(path, "expected a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) schema_error(path, "expected an integer");
    return v.get<int>();
}

AnnotationRecord parse_record(const json& j, const std::string& base) {
    if (!j.is_object()) schema_error(base, "expected an object");
    AnnotationRecord r;
    r.image = as_string(member(j, "image", base), base + ".image");
    r.parcel_id = as_string(member(j, "parcel_id", base), base + ".parcel_id");
    if (r.image.empty()) schema_error(base + ".image", "must not be empty");
    if (r.parcel_id.empty()) schema_error(base + ".parcel_id", "must not be empty");

    const std::string kp_path = base + ".keypoints";
    const json& kps = member(j, "keypoints", base);
    if (!kps.is_array() || kps.size() != 8) schema_error(kp_path, "expected 8 [x, y, v] triplets");
    for (int k = 0; k < 8; ++k) {
        const std::string kpath = kp_path + "[" + std::to_string(k) + "]";
        const json& t = kps[k];
        if (!t.is_array() || t.size() != 3) schema_error(kpath, "expected [x, y, v]");
        r.keypoints.points[k] = {as_number(t[0], kpath + "[0]"), as_number(t[1], kpath + "[1]")};
        const int v = as_int(t[2], kpath + "[2]");
        if (v < 0 || v > 2) schema_error(kpath + "[2]", "visibility must be 0, 1 or 2");
        r.keypoints.flags[k] = v;
    }

    const std::string faces_path = base + ".faces";
    const json& faces = member(j, "faces", base);
    if (!faces.is_object()) schema_error(faces_path, "expected an object");
    for (const auto& [name, idx] : faces.items()) {
        const std::string fpath = faces_path + "." + name;
        const auto face = parse_face(name);
        if (!face) schema_error(fpath, "unknown face name");
        if (!idx.is_array() || idx.size() != 4) schema_error(fpath, "expected 4 keypoint indices");
        std::array<int, 4> q{};
        for (int i = 0; i < 4; ++i) {
            q[i] = as_int(idx[i], fpath + "[" + std::to_string(i) + "]");
            if (q[i] < 0 || q[i] > 7) schema_error(fpath + "[" + std::to_string(i) + "]", "index out of range 0..7");
        }
        r.faces[*face] = q;
    }

    if (const auto it = j.find("tampering"); it != j.end()) {
        const std::string tpath = base + ".tampering";
        if (!it->is_array()) schema_error(tpath, "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string epath = tpath + "[" + std::to_string(i) + "]";
            const json& e = (*it)[i];
            if (!e.is_object()) schema_error(epath, "expected an object");
            FaceTampering t;
            const auto face = parse_face(as_string(member(e, "face", epath), epath + ".face"));
            if (!face) schema_error(epath + ".face", "unknown face name");
            const auto type = parse_tamper_type(as_string(member(e, "type", epath), epath + ".type"));
            if (!type) schema_error(epath + ".type", "must be label, tape or writing");
            const auto diff = parse_difficulty(as_string(member(e, "difficulty", epath), epath + ".difficulty"));
            if (!diff) schema_error(epath + ".difficulty", "must be easy or hard");
            t.face = *face;
            t.type = *type;
            t.difficulty = *diff;
            if (r.tampering_for(t.face)) schema_error(epath + ".face", "face listed twice");
            r.tampering.push_back(t);
        }
    }
    if (const auto it = j.find("role"); it != j.end()) {
        r.role = as_string(*it, base + ".role");
        if (r.role != "input" && r.role != "reference") schema_error(base + ".role", "must be input or reference");
    }
    if (const auto it = j.find("split"); it != j.end()) r.split = as_string(*it, base + ".split");
    return r;
}

// 1-based line on which each top-level array element starts.
std::vector<std::size_t> element_lines(std::string_view text) {
    std::vector<std::size_t> lines;
    std::size_t line = 1;
    int depth = 0;
    bool in_string = false, escaped = false, expect_element = false;
    for (char c : text) {
        if (c == '\n') ++line;
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
        if (depth == 1 && expect_element && c != ']') {
            lines.push_back(line);
            expect_element = false;
        }
        if (c == '"') in_string = true;
        else if (c == '[' || c == '{') {
            ++depth;
            if (depth == 1) expect_element = true;
        } else if (c == ']' || c == '}') {
            --depth;
        } else if (c == ',' && depth == 1) {
            expect_element = true;
        }
    }
    return lines;
}

}  // namespace

std::vector<AnnotationRecord> parse_annotations(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, std::string("annotations: ") + e.what());
    }
    if (!doc.is_array()) throw Error(ErrorKind::Parse, "annotations: top level must be an array of records");
    const auto lines = element_lines(text);
    auto line_of = [&](std::size_t i) { return i < lines.size() ? lines[i] : std::size_t{0}; };

    std::vector<AnnotationRecord> records;
    records.reserve(doc.size());
    std::vector<Diagnostic> problems;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const std::string base = "[" + std::to_string(i) + "]";
        try {
            records.push_back(parse_record(doc[i], base));
        } catch (const Error& e) {
            std::string msg = e.what();
            const std::string prefix = std::string(to_string(ErrorKind::Parse)) + ": ";
            if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
            throw Error(ErrorKind::Parse, "record " + std::to_string(i) + " (line " + std::to_string(line_of(i)) +
                                              "): " + msg);
        }
        for (auto d : validate_record(records.back())) {
            d.record = i;
            d.line = line_of(i);
            problems.push_back(std::move(d));
        }
    }
    if (!problems.empty()) {
        std::string msg = std::to_string(problems.size()) + " annotation problem(s)";
        for (const auto& d : problems) msg += "\n  " + d.to_string();
        throw Error(ErrorKind::Validation, msg);
    }
    return records;
}

std::vector<AnnotationRecord> load_annotations(const fs::path& path) {
    const std::string text = read_text_file(path);
    try {
        return parse_annotations(text);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + std::string(e.what()).substr(std::string(to_string(e.kind())).size() + 2));
    }
}

std::string annotations_to_json(std::span<const AnnotationRecord> records) {
    ordered_json doc = ordered_json::array();
    for (const auto& r : records) {
        ordered_json j;
        j["image"] = r.image;
        j["parcel_id"] = r.parcel_id;
        ordered_json kps = ordered_json::array();
        for (int k = 0; k < 8; ++k) {
            kps.push_back({r.keypoints.points[k].x, r.keypoints.points[k].y, r.keypoints.flags[k]});
        }
        j["keypoints"] = kps;
        ordered_json faces = ordered_json::object();
        for (const auto& [face, q] : r.faces) faces[std::string(face_name(face))] = q;
        j["faces"] = faces;
        ordered_json tampering = ordered_json::array();
        for (const auto& t : r.tampering) {
            tampering.push_back({{"face", face_name(t.face)},
                                 {"type", tamper_type_name(t.type)},
                                 {"difficulty", difficulty_name(t.difficulty)}});
        }
        j["tampering"] = tampering;
        j["role"] = r.role;
        if (!r.split.empty()) j["split"] = r.split;
        doc.push_back(std::move(j));
    }
    return doc.dump(1) + "\n";
}

void save_annotations(const fs::path& path, std::span<const AnnotationRecord> records) {
    write_text_file(path, annotations_to_json(records));
}

// ---------------------------------------------------------------- textures

const Raster& ParcelTextureMap::face(FaceId id) const {
    const auto it = faces.find(id);
    if (it == faces.end()) {
        throw Error(ErrorKind::MissingReference, parcel_id + " has no " + std::string(face_name(id)) + " texture");
    }
    return it->second;
}

Raster texture_layout(const std::map<FaceId, Raster>& faces) {
    Raster layout(kLayoutSize, kLayoutSize, 3, 0.0);
    const std::map<FaceId, std::pair<int, int>> cells = {{FaceId::Top, {1, 0}},
                                                         {FaceId::SideA, {0, 1}},
                                                         {FaceId::Front, {1, 1}},
                                                         {FaceId::SideB, {2, 1}},
                                                         {FaceId::Bottom, {1, 2}}};
    for (const auto& [face, cell] : cells) {
        const auto it = faces.find(face);
        if (it == faces.end()) continue;
        const Raster& src = it->second;
        if (src.width() != kRectifiedSize || src.height() != kRectifiedSize) {
            throw Error(ErrorKind::InvalidInput, "layout faces must be 400x400, got " + src.shape_string());
        }
        const int ox = cell.first * kRectifiedSize;
        const int oy = cell.second * kRectifiedSize;
        for (int y = 0; y < kRectifiedSize; ++y) {
            for (int x = 0; x < kRectifiedSize; ++x) {
                for (int c = 0; c < 3; ++c) layout.at(ox + x, oy + y, c) = src.at(x, y, src.channels() == 3 ? c : 0);
            }
        }
    }
    return layout;
}

ParcelTextureMap compose_texture_map(std::span<const AnnotationRecord> records, const ImageLoader& load_image) {
    if (records.empty()) throw Error(ErrorKind::InvalidInput, "no reference records to compose");
    ParcelTextureMap map;
    map.parcel_id = records.front().parcel_id;
    struct Best {
        std::size_t record;
        double area;
    };
    std::map<FaceId, Best> best;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].parcel_id != map.parcel_id) {
            throw Error(ErrorKind::InvalidInput, "reference records mix parcels " + map.parcel_id + " and " +
                                                     records[i].parcel_id);
        }
        for (const auto& [face, q] : records[i].faces) {
            const double area = signed_area(records[i].face_quad(face).corners);
            const auto it = best.find(face);
            if (it == best.end() || area > it->second.area) best[face] = {i, area};
        }
    }
    std::string missing;
    for (FaceId f : kRelevantFaces) {
        if (!best.count(f)) missing += (missing.empty() ? "" : ", ") + std::string(face_name(f));
    }
    if (!missing.empty()) throw Error(ErrorKind::IncompleteTexture, map.parcel_id + " lacks " + missing);

    std::map<std::size_t, Raster> images;
    for (FaceId f : kRelevantFaces) {
        const std::size_t i = best[f].record;
        if (!images.count(i)) images.emplace(i, load_image(records[i]));
        map.faces[f] = rectify_face(images.at(i), records[i].face_quad(f));
    }
    map.layout = texture_layout(map.faces);
    return map;
}

void save_texture_map(const fs::path& root, const ParcelTextureMap& map) {
    const fs::path dir = root / map.parcel_id;
    for (const auto& [face, img] : map.faces) write_png(dir / (std::string(face_name(face)) + ".png"), img);
    write_png(dir / "layout.png", map.layout);
}

ParcelTextureMap load_texture_map(const fs::path& root, const std::string& parcel_id) {
    const TextureStore store(root);
    if (!store.contains(parcel_id)) throw Error(ErrorKind::MissingReference, "no texture map for " + parcel_id);
    ParcelTextureMap map;
    map.parcel_id = parcel_id;
    for (FaceId f : kRelevantFaces) {
        Raster face = store.load_face(parcel_id, f);
        if (face.width() != kRectifiedSize || face.height() != kRectifiedSize) {
            throw Error(ErrorKind::InvalidInput, store.face_path(parcel_id, f).string() + " is not 400x400");
        }
        map.faces[f] = std::move(face);
    }
    map.layout = texture_layout(map.faces);
    return map;
}

TextureStore::TextureStore(fs::path root) : root_(std::move(root)) {}

bool TextureStore::contains(const std::string& parcel_id) const {
    for (FaceId f : kRelevantFaces) {
        if (!fs::exists(face_path(parcel_id, f))) return false;
    }
    return true;
}

fs::path TextureStore::face_path(const std::string& parcel_id, FaceId face) const {
    return root_ / parcel_id / (std::string(face_name(face)) + ".png");
}

Raster TextureStore::load_face(const std::string& parcel_id, FaceId face) const {
    const fs::path p = face_path(parcel_id, face);
    if (!fs::exists(p)) {
        throw Error(ErrorKind::MissingReference, "no reference " + std::string(face_name(face)) + " for " + parcel_id);
    }
    return read_png(p);
}

// ------------------------------------------------------------------- pairs

std::string pair_id_for(const AnnotationRecord& record, FaceId face) {
    return fs::path(record.image).stem().string() + "_" + std::string(face_name(face));
}

std::vector<PairRecord> build_pairs(std::span<const AnnotationRecord> inputs, const TextureStore& store) {
    std::vector<PairRecord> pairs;
    std::set<std::string> known, missing;
    for (const auto& r : inputs) {
        if (r.role != "input") continue;
        if (!known.count(r.parcel_id)) {
            if (!store.contains(r.parcel_id)) {
                missing.insert(r.parcel_id);
                continue;
            }
            known.insert(r.parcel_id);
        }
        for (const auto& [face, q] : r.faces) {
            PairRecord p;
            p.pair_id = pair_id_for(r, face);
            p.parcel_id = r.parcel_id;
            p.face = face;
            p.split = r.split;
            p.image = r.image;
            if (const auto* t = r.tampering_for(face)) {
                p.label = true;
                p.type = t->type;
                p.difficulty = t->difficulty;
            }
            p.viewing_angle = viewing_angle(r.face_quad(face));
            pairs.push_back(std::move(p));
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw Error(ErrorKind::MissingReference, "no reference texture map for parcel(s) " + list);
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const PairRecord& a, const PairRecord& b) { return a.pair_id < b.pair_id; });
    for (std::size_t i = 1; i < pairs.size(); ++i) {
        if (pairs[i].pair_id == pairs[i - 1].pair_id) {
            throw Error(ErrorKind::InvalidInput, "duplicate pair id " + pairs[i].pair_id + " (image stems must be unique)");
        }
    }
    return pairs;
}

std::vector<PairRecord> write_pairs(std::span<const AnnotationRecord> inputs, const TextureStore& store,
                                    const PairBuildOptions& options) {
    auto pairs = build_pairs(inputs, store);
    std::map<std::string, const AnnotationRecord*> by_image;
    for (const auto& r : inputs) by_image[r.image] = &r;

    const fs::path views = options.manifest_dir / "views";
    fs::create_directories(views);
    const fs::path store_root = fs::absolute(store.root()).lexically_normal();
    const fs::path manifest_abs = fs::absolute(options.manifest_dir).lexically_normal();
    for (auto& p : pairs) {
        p.input_view = (fs::path("views") / (p.pair_id + ".png")).generic_string();
        p.reference_view =
            (store_root / p.parcel_id / (std::string(face_name(p.face)) + ".png")).lexically_relative(manifest_abs).generic_string();
    }

    // Rectify per image so each capture is decoded once.
    std::vector<std::string> images;
    for (const auto& p : pairs) {
        if (images.empty() || images.back() != p.image) images.push_back(p.image);
    }
    std::sort(images.begin(), images.end());
    images.erase(std::unique(images.begin(), images.end()), images.end());
    parallel_for(images.size(), options.jobs, [&](std::size_t i) {
        const AnnotationRecord& r = *by_image.at(images[i]);
        const Raster img = read_png(options.annotation_dir / r.image);
        for (const auto& [face, q] : r.faces) {
            write_png(views / (pair_id_for(r, face) + ".png"), rectify_face(img, r.face_quad(face)));
        }
    });
    save_pair_manifest(options.manifest_dir / "pairs.csv", pairs);
    return pairs;
}

namespace {
const std::vector<std::string> kPairColumns = {"pair_id", "parcel_id",  "face_id",        "label",
                                               "type",    "difficulty", "split",          "image",
                                               "input_view", "reference_view", "viewing_angle"};
}

void save_pair_manifest(const fs::path& path, std::span<const PairRecord> pairs) {
    std::string out = csv_row(kPairColumns);
    for (const auto& p : pairs) {
        out += csv_row({p.pair_id, p.parcel_id, std::string(face_name(p.face)), p.label ? "1" : "0",
                        p.type ? std::string(tamper_type_name(*p.type)) : "",
                        p.difficulty ? std::string(difficulty_name(*p.difficulty)) : "", p.split, p.image,
                        p.input_view, p.reference_view, format_number(p.viewing_angle)});
    }
    write_text_file(path, out);
}

std::vector<PairRecord> load_pair_manifest(const fs::path& path) {
    const CsvTable t = read_csv(path);
    std::vector<std::size_t> col;
    for (const auto& name : kPairColumns) col.push_back(t.column(name));
    std::vector<PairRecord> pairs;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        auto bad = [&](const std::string& what) {
            throw Error(ErrorKind::Parse, path.string() + " row " + std::to_string(r + 2) + ": " + what);
        };
        PairRecord p;
        p.pair_id = row[col[0]];
        p.parcel_id = row[col[1]];
        const auto face = parse_face(row[col[2]]);
        if (!face) bad("unknown face_id '" + row[col[2]] + "'");
        p.face = *face;
        if (row[col[3]] != "0" && row[col[3]] != "1") bad("label must be 0 or 1");
        p.label = row[col[3]] == "1";
        if (!row[col[4]].empty()) {
            p.type = parse_tamper_type(row[col[4]]);
            if (!p.type) bad("unknown type '" + row[col[4]] + "'");
        }
        if (!row[col[5]].empty()) {
            p.difficulty = parse_difficulty(row[col[5]]);
            if (!p.difficulty) bad("unknown difficulty '" + row[col[5]] + "'");
        }
        p.split = row[col[6]];
        p.image = row[col[7]];
        p.input_view = row[col[8]];
        p.reference_view = row[col[9]];
        try {
            p.viewing_angle = std::stod(row[col[10]]);
        } catch (const std::exception&) {
            bad("viewing_angle is not a number");
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

SidePair load_side_pair(const PairRecord& pair, const fs::path& manifest_dir) {
    SidePair s{pair, read_png(manifest_dir / pair.input_view), read_png(manifest_dir / pair.reference_view)};
    if (s.input_view.width() != s.reference_view.width() || s.input_view.height() != s.reference_view.height()) {
        throw Error(ErrorKind::InvalidPair, pair.pair_id + ": views differ in size");
    }
    return s;
}

}  // namespace tamperkit
