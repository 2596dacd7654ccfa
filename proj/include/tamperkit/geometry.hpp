#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "tamperkit/raster.hpp"

namespace tamperkit {

// Image coordinates use the pixel-center convention: pixel (i, j) is centred at
// (i, j) and an image of width W spans x in [-0.5, W - 0.5]. y points down.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
    friend bool operator==(const Point2&, const Point2&) = default;
};

double cross(Point2 a, Point2 b);
double distance(Point2 a, Point2 b);

/// Physical side surfaces of a parcel. Back is opposite Front and is never
/// visible in annotated captures.
enum class FaceId { Front = 0, SideA = 1, SideB = 2, Top = 3, Bottom = 4, Back = 5 };

inline constexpr std::array<FaceId, 5> kRelevantFaces = {FaceId::Front, FaceId::SideA, FaceId::SideB, FaceId::Top,
                                                         FaceId::Bottom};

std::string_view face_name(FaceId face);
std::optional<FaceId> parse_face(std::string_view name);

/// COCO-style keypoint flags: 0 unlabeled, 1 labeled but occluded, 2 visible.
inline constexpr int kUnlabeled = 0;
inline constexpr int kOccluded = 1;
inline constexpr int kVisible = 2;

/// The eight parcel corners K0..K7.
///
/// K0 joins the three visible faces, K1..K3 complete the ordering front face,
/// K4..K7 lie on the face opposite it and K5 is the self-occluded corner.
struct Keypoints8 {
    std::array<Point2, 8> points{};
    std::array<int, 8> flags{kVisible, kVisible, kVisible, kVisible, kVisible, kOccluded, kVisible, kVisible};

    bool visible(int k) const { return flags[k] == kVisible; }
    bool labeled(int k) const { return flags[k] > kUnlabeled; }
};

/// Four image corners of one side surface.
///
/// Corners are ordered with positive shoelace area in image
/// coordinates (a face seen from outside, read TL, TR, BR, BL). Rectification
/// maps corners[0] to the top-left of the output square.
struct FaceQuad {
    std::array<Point2, 4> corners{};
    FaceId face_id = FaceId::Front;
    std::array<int, 4> keypoint_indices{-1, -1, -1, -1};
};

double signed_area(std::span<const Point2, 4> quad);
bool is_simple_quad(std::span<const Point2, 4> quad);

// ---------------------------------------------------------------- cuboids

/// Axis-aligned box centred at the model origin, posed in an OpenCV-style
/// camera frame (x right, y down, z forward).
struct Cuboid {
    Eigen::Vector3d dims{1.0, 1.0, 1.0};  // width (x), height (y), depth (z)
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation{0.0, 0.0, 5.0};
    double focal = 500.0;
    Point2 principal{0.0, 0.0};
};

/// Model corner i has x sign (i & 1), y sign (i & 2), z sign (i & 4); set bit = positive half.
inline constexpr int kCornerCount = 8;

/// Corner ids of each face in texture order (TL, TR, BR, BL seen from outside),
/// indexed by FaceId.
extern const std::array<std::array<int, 4>, 6> kFaceCorners;
FaceId opposite_face(FaceId face);

struct CuboidProjection {
    std::array<Point2, 8> points{};
    std::array<double, 8> depths{};
    std::array<bool, 6> face_visible{};
    std::array<Eigen::Vector3d, 6> face_normals{};  // outward, camera frame
    int visible_count() const;
};

CuboidProjection project_cuboid(const Cuboid& cuboid);

// Rotation applied as yaw about y, then pitch about x, then roll about z (degrees).
Eigen::Matrix3d rotation_from_angles(double yaw_deg, double pitch_deg, double roll_deg = 0.0);

/// Corner positions plus the face incidence needed for ordering.
struct CornerLayout {
    std::array<Point2, 8> points{};
    std::array<std::array<int, 4>, 6> face_corners = kFaceCorners;
    std::array<bool, 6> face_visible{};
    std::array<Eigen::Vector3d, 6> face_normals{};

    static CornerLayout from_projection(const CuboidProjection& projection);
};

struct OrderedKeypoints {
    Keypoints8 keypoints;
    std::array<int, 8> corner_ids{};  // model corner for each K index
    int front_face = 0;               // index into the layout's faces
};

/// Ordering front face: the visible face whose unit normal best matches (1, 0, -0.5).
int select_front_face(const CornerLayout& layout);
OrderedKeypoints order_keypoints(const CornerLayout& layout);

/// Front (K0,K2,K1,K3) tagged Front, the K2-face tagged SideA and the K3-face
/// tagged SideB. Face ids here are roles relative to the ordering front.
std::array<FaceQuad, 3> visible_face_quads(const Keypoints8& kp);

// ----------------------------------------------------------- homography

struct Homography {
    Eigen::Matrix3d h = Eigen::Matrix3d::Identity();

    Point2 apply(Point2 p) const;
    Homography inverse() const;
};

Homography estimate_homography(std::span<const Point2, 4> src, std::span<const Point2, 4> dst);

inline constexpr int kRectifiedSize = 400;

// Corners of an out_size square in the pixel-center convention (TL, TR, BR, BL).
std::array<Point2, 4> square_corners(int size);

Raster rectify_face(const Raster& img, const FaceQuad& quad, int out_size = kRectifiedSize);

/// Composites `source` (seen as a fronto-parallel square) onto `canvas` inside
/// `quad`, scaling colors by `gain` and averaging supersample^2 samples per pixel.
void paint_quad(Raster& canvas, const Raster& source, std::span<const Point2, 4> quad, double gain = 1.0,
                int supersample = 1);

// ----------------------------------------------------------- distortion

/// r_src = r_dist * (A r_dist^3 + B r_dist^2 + C r_dist + D), radii normalised
/// by half the smaller image dimension.
struct DistortionParams {
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
    double D = 1.0;

    bool is_identity() const { return A == 0.0 && B == 0.0 && C == 0.0 && D == 1.0; }
    double source_radius(double r_dist) const { return r_dist * (((A * r_dist + B) * r_dist + C) * r_dist + D); }
    void validate() const;
};

inline constexpr std::array<double, 6> kDistortionStudyA = {-0.08, -0.04, -0.02, 0.04, 0.08, 0.16};

Point2 image_center(int width, int height);
double normalization_radius(int width, int height);

// Maps a location in the distorted image to the source location it samples.
Point2 distort_point(Point2 pt, const DistortionParams& p, Point2 center, double norm_radius);
// Inverse of distort_point: where a source location lands in the distorted
// image; empty when no distorted radius maps onto it.
std::optional<Point2> undistort_point(Point2 pt, const DistortionParams& p, Point2 center, double norm_radius);

Raster apply_barrel_distortion(const Raster& img, const DistortionParams& p);

// ---------------------------------------------------------- view angle

/// Obliqueness proxy in degrees: the larger of the top-edge angle to the image
/// x-axis and the left-edge angle to the image y-axis.
double viewing_angle(const FaceQuad& quad);

}  // namespace tamperkit
