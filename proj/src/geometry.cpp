#include "tamperkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace tamperkit {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTieTolerance = 1e-9;
constexpr double kMinFaceArea = 25.0;

const std::array<Eigen::Vector3d, 6> kModelNormals = {
    Eigen::Vector3d(0, 0, -1), Eigen::Vector3d(-1, 0, 0), Eigen::Vector3d(1, 0, 0),
    Eigen::Vector3d(0, -1, 0), Eigen::Vector3d(0, 1, 0),  Eigen::Vector3d(0, 0, 1),
};

Eigen::Vector3d model_corner(const Eigen::Vector3d& dims, int i) {
    return {(i & 1 ? 0.5 : -0.5) * dims.x(), (i & 2 ? 0.5 : -0.5) * dims.y(), (i & 4 ? 0.5 : -0.5) * dims.z()};
}

double triangle_area(Point2 a, Point2 b, Point2 c) { return 0.5 * std::abs(cross(b - a, c - a)); }

bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
    const double d1 = cross(p2 - p1, q1 - p1);
    const double d2 = cross(p2 - p1, q2 - p1);
    const double d3 = cross(q2 - q1, p1 - q1);
    const double d4 = cross(q2 - q1, p2 - q1);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

void require_non_degenerate(std::span<const Point2, 4> pts, const char* which) {
    for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) {
            for (int c = b + 1; c < 4; ++c) {
                if (triangle_area(pts[a], pts[b], pts[c]) <= 1e-9) {
                    throw Error(ErrorKind::DegenerateConfiguration,
                                std::string(which) + " points contain a collinear triple");
                }
            }
        }
    }
}

Eigen::Matrix3d hartley_normalization(std::span<const Point2, 4> pts) {
    double cx = 0.0, cy = 0.0;
    for (const auto& p : pts) {
        cx += p.x;
        cy += p.y;
    }
    cx /= 4.0;
    cy /= 4.0;
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
    mean_dist /= 4.0;
    const double s = std::sqrt(2.0) / mean_dist;
    Eigen::Matrix3d t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
}

Point2 apply_matrix(const Eigen::Matrix3d& m, Point2 p) {
    const Eigen::Vector3d v = m * Eigen::Vector3d(p.x, p.y, 1.0);
    return {v.x() / v.z(), v.y() / v.z()};
}

FaceQuad oriented_quad(const Keypoints8& kp, std::array<int, 4> cycle, FaceId role) {
    FaceQuad quad;
    quad.face_id = role;
    for (int i = 0; i < 4; ++i) quad.corners[i] = kp.points[cycle[i]];
    if (signed_area(quad.corners) < 0) {
        // Keep corners[0] (K0) and walk the cycle the other way.
        std::swap(cycle[1], cycle[3]);
        for (int i = 0; i < 4; ++i) quad.corners[i] = kp.points[cycle[i]];
    }
    quad.keypoint_indices = cycle;
    if (!is_simple_quad(quad.corners) || std::abs(signed_area(quad.corners)) < kMinFaceArea) {
        throw Error(ErrorKind::DegenerateFace, std::string(face_name(role)) + " quad is self-intersecting or smaller than 25 px^2");
    }
    return quad;
}

}  // namespace

double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::string_view face_name(FaceId face) {
    switch (face) {
        case FaceId::Front: return "front";
        case FaceId::SideA: return "side_a";
        case FaceId::SideB: return "side_b";
        case FaceId::Top: return "top";
        case FaceId::Bottom: return "bottom";
        case FaceId::Back: return "back";
    }
    return "?";
}

std::optional<FaceId> parse_face(std::string_view name) {
    for (int f = 0; f < 6; ++f) {
        if (face_name(static_cast<FaceId>(f)) == name) return static_cast<FaceId>(f);
    }
    return std::nullopt;
}

double signed_area(std::span<const Point2, 4> quad) {
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) acc += cross(quad[i], quad[(i + 1) % 4]);
    return 0.5 * acc;
}

bool is_simple_quad(std::span<const Point2, 4> quad) {
    return !segments_intersect(quad[0], quad[1], quad[2], quad[3]) &&
           !segments_intersect(quad[1], quad[2], quad[3], quad[0]);
}

const std::array<std::array<int, 4>, 6> kFaceCorners = {{
    {0, 1, 3, 2},  // front  (z-)
    {4, 0, 2, 6},  // side_a (x-)
    {1, 5, 7, 3},  // side_b (x+)
    {4, 5, 1, 0},  // top    (y-)
    {2, 3, 7, 6},  // bottom (y+)
    {5, 4, 6, 7},  // back   (z+)
}};

FaceId opposite_face(FaceId face) {
    switch (face) {
        case FaceId::Front: return FaceId::Back;
        case FaceId::Back: return FaceId::Front;
        case FaceId::SideA: return FaceId::SideB;
        case FaceId::SideB: return FaceId::SideA;
        case FaceId::Top: return FaceId::Bottom;
        case FaceId::Bottom: return FaceId::Top;
    }
    return FaceId::Back;
}

int CuboidProjection::visible_count() const {
    return static_cast<int>(std::count(face_visible.begin(), face_visible.end(), true));
}

CuboidProjection project_cuboid(const Cuboid& c) {
    if ((c.dims.array() <= 0.0).any()) {
        throw Error(ErrorKind::InvalidInput, "cuboid dimensions must be positive");
    }
    const Eigen::Matrix3d should_be_identity = c.rotation.transpose() * c.rotation;
    if ((should_be_identity - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
        throw Error(ErrorKind::InvalidInput, "cuboid rotation is not orthonormal");
    }
    CuboidProjection out;
    for (int i = 0; i < kCornerCount; ++i) {
        const Eigen::Vector3d cam = c.rotation * model_corner(c.dims, i) + c.translation;
        if (cam.z() <= 1e-9) {
            throw Error(ErrorKind::DegeneratePose, "cuboid corner " + std::to_string(i) + " is at or behind the camera plane");
        }
        out.depths[i] = cam.z();
        out.points[i] = {c.focal * cam.x() / cam.z() + c.principal.x, c.focal * cam.y() / cam.z() + c.principal.y};
    }
    for (int f = 0; f < 6; ++f) {
        const Eigen::Vector3d normal = c.rotation * kModelNormals[f];
        Eigen::Vector3d center = Eigen::Vector3d::Zero();
        for (int corner : kFaceCorners[f]) center += model_corner(c.dims, corner);
        center = c.rotation * (center / 4.0) + c.translation;
        out.face_normals[f] = normal;
        out.face_visible[f] = normal.dot(center) < 0.0;
    }
    return out;
}

Eigen::Matrix3d rotation_from_angles(double yaw_deg, double pitch_deg, double roll_deg) {
    const double yaw = yaw_deg * kPi / 180.0;
    const double pitch = pitch_deg * kPi / 180.0;
    const double roll = roll_deg * kPi / 180.0;
    const Eigen::Matrix3d ry = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
    const Eigen::Matrix3d rx = Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitX()).toRotationMatrix();
    const Eigen::Matrix3d rz = Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    return rz * rx * ry;
}

CornerLayout CornerLayout::from_projection(const CuboidProjection& projection) {
    CornerLayout layout;
    layout.points = projection.points;
    layout.face_visible = projection.face_visible;
    layout.face_normals = projection.face_normals;
    return layout;
}

int select_front_face(const CornerLayout& layout) {
    const Eigen::Vector3d target = Eigen::Vector3d(1.0, 0.0, -0.5).normalized();
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int f = 0; f < 6; ++f) {
        if (!layout.face_visible[f]) continue;
        const double score = layout.face_normals[f].normalized().dot(target);
        if (score > best_score) {
            best_score = score;
            best = f;
        }
    }
    return best;
}

OrderedKeypoints order_keypoints(const CornerLayout& layout) {
    const int visible = static_cast<int>(std::count(layout.face_visible.begin(), layout.face_visible.end(), true));
    if (visible != 3) {
        throw Error(ErrorKind::UnsupportedView, "keypoint ordering needs exactly 3 visible faces, got " + std::to_string(visible));
    }
    // Visible-face count per corner; the invisible count is 3 minus it.
    std::array<int, 8> visible_faces{};
    std::array<std::array<bool, 6>, 8> on_face{};
    for (int f = 0; f < 6; ++f) {
        for (int corner : layout.face_corners[f]) {
            on_face[corner][f] = true;
            if (layout.face_visible[f]) ++visible_faces[corner];
        }
    }
    const int front = select_front_face(layout);
    int back = -1;
    for (int f = 0; f < 6; ++f) {
        const bool shares = std::any_of(layout.face_corners[f].begin(), layout.face_corners[f].end(),
                                        [&](int corner) { return on_face[corner][front]; });
        if (!shares) back = f;
    }
    if (back < 0) {
        throw Error(ErrorKind::InvalidInput, "face incidence does not describe a cuboid");
    }

    auto corners_where = [&](int face, int count) {
        std::vector<int> out;
        for (int corner = 0; corner < kCornerCount; ++corner) {
            if (on_face[corner][face] && visible_faces[corner] == count) out.push_back(corner);
        }
        return out;
    };
    auto left_right = [&](std::vector<int> pair, const char* which) {
        if (pair.size() != 2) {
            throw Error(ErrorKind::UnsupportedView, std::string("expected two ") + which + " corners");
        }
        const double dx = layout.points[pair[0]].x - layout.points[pair[1]].x;
        if (std::abs(dx) <= kTieTolerance) {
            throw Error(ErrorKind::AmbiguousOrdering, std::string(which) + " corners share the same x coordinate");
        }
        if (dx > 0) std::swap(pair[0], pair[1]);
        return pair;
    };
    auto single = [&](std::vector<int> v, const char* which) {
        if (v.size() != 1) {
            throw Error(ErrorKind::UnsupportedView, std::string("visible faces do not share exactly one ") + which + " corner");
        }
        return v[0];
    };

    OrderedKeypoints out;
    out.front_face = front;
    out.corner_ids[0] = single(corners_where(front, 3), "K0");
    out.corner_ids[1] = single(corners_where(front, 1), "K1");
    const auto k23 = left_right(corners_where(front, 2), "K2/K3");
    out.corner_ids[2] = k23[0];
    out.corner_ids[3] = k23[1];
    out.corner_ids[4] = single(corners_where(back, 2), "K4");
    out.corner_ids[5] = single(corners_where(back, 0), "K5");
    const auto k67 = left_right(corners_where(back, 1), "K6/K7");
    out.corner_ids[6] = k67[0];
    out.corner_ids[7] = k67[1];
    for (int k = 0; k < 8; ++k) {
        out.keypoints.points[k] = layout.points[out.corner_ids[k]];
        out.keypoints.flags[k] = k == 5 ? kOccluded : kVisible;
    }
    return out;
}

std::array<FaceQuad, 3> visible_face_quads(const Keypoints8& kp) {
    // The K2-face and K3-face share the edge K0-K4 and lie on opposite sides of
    // it, so the back corner of the K2-face is the one on K2's side.
    const Point2 axis = kp.points[4] - kp.points[0];
    const double side_k2 = cross(axis, kp.points[2] - kp.points[0]);
    const double side_k6 = cross(axis, kp.points[6] - kp.points[0]);
    const bool k6_with_k2 = (side_k2 > 0) == (side_k6 > 0);
    const int back_of_k2 = k6_with_k2 ? 6 : 7;
    const int back_of_k3 = k6_with_k2 ? 7 : 6;
    return {
        oriented_quad(kp, {0, 2, 1, 3}, FaceId::Front),
        oriented_quad(kp, {0, 2, back_of_k2, 4}, FaceId::SideA),
        oriented_quad(kp, {0, 3, back_of_k3, 4}, FaceId::SideB),
    };
}

Point2 Homography::apply(Point2 p) const { return apply_matrix(h, p); }

Homography Homography::inverse() const {
    Homography inv{h.inverse()};
    if (std::abs(inv.h(2, 2)) > 1e-12) inv.h /= inv.h(2, 2);
    return inv;
}

Homography estimate_homography(std::span<const Point2, 4> src, std::span<const Point2, 4> dst) {
    require_non_degenerate(src, "source");
    require_non_degenerate(dst, "destination");
    const Eigen::Matrix3d t_src = hartley_normalization(src);
    const Eigen::Matrix3d t_dst = hartley_normalization(dst);
    Eigen::Matrix<double, 8, 9> a;
    for (int i = 0; i < 4; ++i) {
        const Point2 p = apply_matrix(t_src, src[i]);
        const Point2 q = apply_matrix(t_dst, dst[i]);
        a.row(2 * i) << -p.x, -p.y, -1, 0, 0, 0, q.x * p.x, q.x * p.y, q.x;
        a.row(2 * i + 1) << 0, 0, 0, -p.x, -p.y, -1, q.y * p.x, q.y * p.y, q.y;
    }
    Eigen::JacobiSVD<Eigen::Matrix<double, 8, 9>> svd(a, Eigen::ComputeFullV);
    const Eigen::Matrix<double, 9, 1> null = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << null(0), null(1), null(2), null(3), null(4), null(5), null(6), null(7), null(8);
    Eigen::Matrix3d h = t_dst.inverse() * hn * t_src;
    if (std::abs(h.determinant()) < 1e-300) {
        throw Error(ErrorKind::DegenerateConfiguration, "estimated homography is singular");
    }
    if (std::abs(h(2, 2)) > 1e-12) h /= h(2, 2);
    return Homography{h};
}

std::array<Point2, 4> square_corners(int size) {
    const double lo = -0.5;
    const double hi = size - 0.5;
    return {Point2{lo, lo}, Point2{hi, lo}, Point2{hi, hi}, Point2{lo, hi}};
}

Raster rectify_face(const Raster& img, const FaceQuad& quad, int out_size) {
    if (out_size < 1) throw Error(ErrorKind::InvalidInput, "rectified size must be >= 1");
    std::ostringstream offending;
    for (int i = 0; i < 4; ++i) {
        const Point2 p = quad.corners[i];
        if (p.x < -0.5 || p.y < -0.5 || p.x > img.width() - 0.5 || p.y > img.height() - 0.5) {
            offending << " corner " << i << " (" << p.x << ", " << p.y << ")";
        }
    }
    if (!offending.str().empty()) {
        throw Error(ErrorKind::OutOfBounds, std::string(face_name(quad.face_id)) + " quad leaves the image:" + offending.str());
    }
    const auto square = square_corners(out_size);
    const Homography h = estimate_homography(square, quad.corners);
    Raster out(out_size, out_size, img.channels());
    for (int y = 0; y < out_size; ++y) {
        for (int x = 0; x < out_size; ++x) {
            const Point2 src = h.apply({static_cast<double>(x), static_cast<double>(y)});
            for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = sample_bilinear(img, src.x, src.y, c);
        }
    }
    return out;
}

void paint_quad(Raster& canvas, const Raster& source, std::span<const Point2, 4> quad, double gain, int supersample) {
    if (canvas.channels() != source.channels()) {
        throw Error(ErrorKind::InvalidInput, "paint_quad channel mismatch");
    }
    supersample = std::max(1, supersample);
    const std::array<Point2, 4> src_rect = {
        Point2{-0.5, -0.5}, Point2{source.width() - 0.5, -0.5}, Point2{source.width() - 0.5, source.height() - 0.5},
        Point2{-0.5, source.height() - 0.5}};
    const Homography to_source = estimate_homography(quad, src_rect);
    const double orientation = signed_area(quad) >= 0 ? 1.0 : -1.0;
    auto inside = [&](Point2 p) {
        for (int i = 0; i < 4; ++i) {
            if (orientation * cross(quad[(i + 1) % 4] - quad[i], p - quad[i]) < 0) return false;
        }
        return true;
    };
    double min_x = quad[0].x, max_x = quad[0].x, min_y = quad[0].y, max_y = quad[0].y;
    for (const auto& p : quad) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(min_x)));
    const int x1 = std::min(canvas.width() - 1, static_cast<int>(std::ceil(max_x)));
    const int y0 = std::max(0, static_cast<int>(std::floor(min_y)));
    const int y1 = std::min(canvas.height() - 1, static_cast<int>(std::ceil(max_y)));
    const int channels = canvas.channels();
    const double step = 1.0 / supersample;
    const double samples = static_cast<double>(supersample * supersample);
    std::array<double, 3> acc{};
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            acc.fill(0.0);
            int covered = 0;
            for (int sy = 0; sy < supersample; ++sy) {
                for (int sx = 0; sx < supersample; ++sx) {
                    const Point2 p{x - 0.5 + (sx + 0.5) * step, y - 0.5 + (sy + 0.5) * step};
                    if (!inside(p)) continue;
                    ++covered;
                    const Point2 s = to_source.apply(p);
                    for (int c = 0; c < channels; ++c) acc[c] += sample_bilinear(source, s.x, s.y, c);
                }
            }
            if (covered == 0) continue;
            const double coverage = covered / samples;
            for (int c = 0; c < channels; ++c) {
                const double painted = std::clamp(gain * acc[c] / covered, 0.0, 1.0);
                canvas.at(x, y, c) = coverage * painted + (1.0 - coverage) * canvas.at(x, y, c);
            }
        }
    }
}

void DistortionParams::validate() const {
    if (!(D > 0.0) || !std::isfinite(A) || !std::isfinite(B) || !std::isfinite(C) || !std::isfinite(D)) {
        throw Error(ErrorKind::InvalidInput, "distortion parameters need finite values and D > 0");
    }
}

Point2 image_center(int width, int height) { return {(width - 1) / 2.0, (height - 1) / 2.0}; }

double normalization_radius(int width, int height) { return std::min(width, height) / 2.0; }

Point2 distort_point(Point2 pt, const DistortionParams& p, Point2 center, double norm_radius) {
    const Point2 d = pt - center;
    const double r_dist = std::hypot(d.x, d.y) / norm_radius;
    if (r_dist == 0.0) return pt;
    const double scale = p.source_radius(r_dist) / r_dist;
    return center + scale * d;
}

std::optional<Point2> undistort_point(Point2 pt, const DistortionParams& p, Point2 center, double norm_radius) {
    if (p.is_identity()) return pt;
    const Point2 d = pt - center;
    const double target = std::hypot(d.x, d.y) / norm_radius;
    if (target == 0.0) return pt;
    // Walk outward while the polynomial is increasing until it brackets the target.
    double lo = 0.0;
    double hi = 0.0;
    double prev = 0.0;
    const double step = 1e-3;
    bool bracketed = false;
    for (int i = 1; i <= 20000; ++i) {
        const double r = i * step;
        const double f = p.source_radius(r);
        if (f < prev) break;
        if (f >= target) {
            lo = r - step;
            hi = r;
            bracketed = true;
            break;
        }
        prev = f;
    }
    if (!bracketed) return std::nullopt;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        (p.source_radius(mid) < target ? lo : hi) = mid;
    }
    const double r_dist = 0.5 * (lo + hi);
    return center + (r_dist / target) * d;
}

Raster apply_barrel_distortion(const Raster& img, const DistortionParams& p) {
    p.validate();
    const Point2 center = image_center(img.width(), img.height());
    const double radius = normalization_radius(img.width(), img.height());
    Raster out(img.width(), img.height(), img.channels(), 0.0);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const Point2 src = distort_point({static_cast<double>(x), static_cast<double>(y)}, p, center, radius);
            if (src.x < -0.5 || src.y < -0.5 || src.x > img.width() - 0.5 || src.y > img.height() - 0.5) continue;
            for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = sample_bilinear(img, src.x, src.y, c);
        }
    }
    return out;
}

double viewing_angle(const FaceQuad& quad) {
    const Point2 top = quad.corners[1] - quad.corners[0];
    const Point2 left = quad.corners[3] - quad.corners[0];
    if (std::hypot(top.x, top.y) == 0.0 || std::hypot(left.x, left.y) == 0.0) {
        throw Error(ErrorKind::DegenerateFace, "viewing angle needs non-zero edges");
    }
    const double top_angle = std::atan2(std::abs(top.y), std::abs(top.x));
    const double left_angle = std::atan2(std::abs(left.x), std::abs(left.y));
    return std::max(top_angle, left_angle) * 180.0 / kPi;
}

}  // namespace tamperkit
