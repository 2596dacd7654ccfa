#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tamperkit/geometry.hpp"
#include "tamperkit/raster.hpp"

namespace tamperkit {

enum class TamperType { Label, Tape, Writing };
enum class Difficulty { Easy, Hard };

std::string_view tamper_type_name(TamperType t);
std::optional<TamperType> parse_tamper_type(std::string_view name);
std::string_view difficulty_name(Difficulty d);
std::optional<Difficulty> parse_difficulty(std::string_view name);

struct FaceTampering {
    FaceId face = FaceId::Front;
    TamperType type = TamperType::Label;
    Difficulty difficulty = Difficulty::Easy;
};

struct AnnotationRecord {
    std::string image;  // relative to the annotation file's directory
    std::string parcel_id;
    Keypoints8 keypoints;
    // Physical face -> keypoint indices in texture order (TL, TR, BR, BL seen from outside).
    std::map<FaceId, std::array<int, 4>> faces;
    std::vector<FaceTampering> tampering;
    std::string role = "input";  // "input" or "reference"
    std::string split;           // free-form, "train"/"test" in synthetic data

    const FaceTampering* tampering_for(FaceId face) const;
    FaceQuad face_quad(FaceId face) const;
};

struct Diagnostic {
    std::size_t record = 0;
    std::size_t line = 0;  // 1-based line where the record starts, 0 if unknown
    std::string rule;      // ordering rule name, or "schema" for parse problems
    std::string message;

    std::string to_string() const;
};

// Ordering and face-consistency checks for one record; empty when valid.
std::vector<Diagnostic> validate_record(const AnnotationRecord& record);

std::vector<AnnotationRecord> parse_annotations(std::string_view json_text);
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);
std::string annotations_to_json(std::span<const AnnotationRecord> records);
void save_annotations(const std::filesystem::path& path, std::span<const AnnotationRecord> records);

// ---------------------------------------------------------------- textures

inline constexpr int kLayoutSize = 3 * kRectifiedSize;

struct ParcelTextureMap {
    std::string parcel_id;
    std::map<FaceId, Raster> faces;  // the five relevant faces
    Raster layout;

    const Raster& face(FaceId id) const;
};

// Cross arrangement: Top above, Front centre, Bottom below, SideA left, SideB right.
Raster texture_layout(const std::map<FaceId, Raster>& faces);

using ImageLoader = std::function<Raster(const AnnotationRecord&)>;

// Each face comes from the record whose quad for it has the largest area.
ParcelTextureMap compose_texture_map(std::span<const AnnotationRecord> records, const ImageLoader& load_image);

// Texture store on disk: <root>/<parcel_id>/<face>.png plus layout.png.
void save_texture_map(const std::filesystem::path& root, const ParcelTextureMap& map);
ParcelTextureMap load_texture_map(const std::filesystem::path& root, const std::string& parcel_id);

class TextureStore {
public:
    explicit TextureStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    bool contains(const std::string& parcel_id) const;
    std::filesystem::path face_path(const std::string& parcel_id, FaceId face) const;
    Raster load_face(const std::string& parcel_id, FaceId face) const;

private:
    std::filesystem::path root_;
};

// ------------------------------------------------------------------- pairs

struct PairRecord {
    std::string pair_id;  // <image stem>_<face>
    std::string parcel_id;
    FaceId face = FaceId::Front;
    bool label = false;
    std::optional<TamperType> type;
    std::optional<Difficulty> difficulty;
    std::string split;
    std::string image;           // source capture, as in the annotation
    std::string input_view;      // rectified input, relative to the manifest directory
    std::string reference_view;  // reference texture, relative to the manifest directory
    double viewing_angle = 0.0;
};

struct SidePair {
    PairRecord info;
    Raster input_view;
    Raster reference_view;
};

std::string pair_id_for(const AnnotationRecord& record, FaceId face);

// One pair per visible face of every input-role record, sorted by pair_id.
std::vector<PairRecord> build_pairs(std::span<const AnnotationRecord> inputs, const TextureStore& store);

// Rectifies every pair's input view into manifest_dir, fills the view paths
// and writes pairs.csv there.
struct PairBuildOptions {
    std::filesystem::path annotation_dir;  // where record image paths resolve
    std::filesystem::path manifest_dir;
    int jobs = 1;
};
std::vector<PairRecord> write_pairs(std::span<const AnnotationRecord> inputs, const TextureStore& store,
                                    const PairBuildOptions& options);

void save_pair_manifest(const std::filesystem::path& path, std::span<const PairRecord> pairs);
std::vector<PairRecord> load_pair_manifest(const std::filesystem::path& path);

// Loads both views of a manifest row; paths resolve against manifest_dir.
SidePair load_side_pair(const PairRecord& pair, const std::filesystem::path& manifest_dir);

}  // namespace tamperkit
