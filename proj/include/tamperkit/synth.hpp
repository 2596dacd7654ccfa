#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tamperkit/dataset.hpp"
#include "tamperkit/geometry.hpp"
#include "tamperkit/raster.hpp"

namespace tamperkit {

// ------------------------------------------------------------------- PRNG

// splitmix64 finalizer; used to derive independent substream seeds.
std::uint64_t splitmix64(std::uint64_t x);
// Seed for a named substream, e.g. derive_seed(parcel_seed, "tamper", face).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

// mt19937_64 with portable draws (no std::*_distribution, whose output is
// implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi);  // inclusive
    bool coin() { return (engine_() >> 63) != 0; }

private:
    std::mt19937_64 engine_;
};

// --------------------------------------------------------------- textures

inline constexpr int kTextureSize = kRectifiedSize;

// Physical size of a face in mm as (texture x extent, texture y extent).
struct FaceSizeMm {
    double width = 300.0;
    double height = 300.0;
    double longer() const { return std::max(width, height); }
    double shorter() const { return std::min(width, height); }
};

// dims = (width x, height y, depth z) in mm.
FaceSizeMm face_size_mm(const Eigen::Vector3d& dims, FaceId face);

struct TextureSpec {
    std::array<double, 3> base_color{0.68, 0.53, 0.37};
    double noise_amplitude = 0.04;
    int printed_marks = 2;  // printed-label rectangles per face
};

TextureSpec random_texture_spec(Rng& rng);
Raster make_face_texture(const TextureSpec& spec, std::uint64_t seed, int size = kTextureSize);

using FaceTextures = std::array<Raster, 6>;  // indexed by FaceId
FaceTextures make_parcel_textures(const TextureSpec& spec, std::uint64_t seed);

// -------------------------------------------------------------- tampering

struct TamperSpec {
    TamperType type = TamperType::Label;
    Difficulty difficulty = Difficulty::Easy;
    FaceId face = FaceId::Front;
    std::uint64_t seed = 0;
};

// Parameters drawn for one spec; lengths in texture px unless suffixed _mm.
struct TamperPlan {
    TamperSpec spec;
    Point2 center;
    double angle_deg = 0.0;
    double length_px = 0.0;  // label width / tape length / writing extent
    double width_px = 0.0;   // label height / tape width / stroke width
    double length_mm = 0.0;
    double stroke_mm = 0.0;  // writing only
    double alpha = 1.0;
    std::array<double, 3> color{};
    std::vector<std::vector<Point2>> strokes;  // writing polylines, texture px
};

// Texture px per mm, fixed by the longer side: size / longer_mm.
double px_per_mm(const FaceSizeMm& face, int size = kTextureSize);
TamperPlan plan_tampering(const TamperSpec& spec, const FaceSizeMm& face, int size = kTextureSize);
Raster render_tampering(const Raster& texture, const TamperPlan& plan);
Raster apply_tampering(const Raster& texture, const TamperSpec& spec, const FaceSizeMm& face);

// ---------------------------------------------------------------- scenes

struct SceneConfig {
    std::uint64_t seed = 0;
    Eigen::Vector3d dims{300.0, 250.0, 200.0};
    double distance_min = 2.5;  // multiples of the largest dimension
    double distance_max = 3.5;
    double yaw_min = 20.0, yaw_max = 45.0;      // |yaw| in degrees
    double pitch_min = 20.0, pitch_max = 45.0;  // |pitch| in degrees
    double roll_max = 10.0;
    double min_face_angle = 15.0;  // degrees between each shown face and its line of sight
    int image_size = 800;
    int supersample = 2;
    double gain_min = 0.85, gain_max = 1.15;
    // Which side and which cap must face the camera, together with Front.
    FaceId side = FaceId::SideA;  // SideA or SideB
    FaceId cap = FaceId::Top;     // Top or Bottom

    void validate() const;
};

struct ScenePose {
    double yaw_deg = 0.0, pitch_deg = 0.0, roll_deg = 0.0;
    double distance_mm = 0.0;
    Eigen::Vector2d offset{0.0, 0.0};  // image-plane shift of the parcel centre, px
    std::array<double, 6> gains{};
    std::array<double, 3> background{};
    int attempts = 1;
};

struct RenderedScene {
    Raster image;
    AnnotationRecord annotation;  // image/parcel_id left for the caller
    ScenePose pose;
    Cuboid cuboid;
};

RenderedScene render_scene(const SceneConfig& cfg, const FaceTextures& textures);

// --------------------------------------------------------------- benchmark

struct BenchmarkConfig {
    int n_parcels = 20;
    int images_per_parcel = 4;
    double tamper_fraction = 0.5;
    std::uint64_t seed = 7;
    int image_size = 800;
    int jobs = 1;

    void validate() const;
};

struct BenchmarkSummary {
    int parcels = 0;
    int tampered_parcels = 0;
    int tampered_faces = 0;
    int images = 0;
    int pairs = 0;
};

// Writes images/, annotations.json, references/, pairs/ and manifest.json.
BenchmarkSummary generate_benchmark(const BenchmarkConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace tamperkit
