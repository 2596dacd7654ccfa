#include "tamperkit/synth.hpp"

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "tamperkit/error.hpp"
#include "tamperkit/image_io.hpp"
#include "tamperkit/util.hpp"

namespace tamperkit {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {
constexpr double kPi = 3.14159265358979323846;
using Color = std::array<double, 3>;
}  // namespace

// ------------------------------------------------------------------- PRNG

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the stream name
    for (unsigned char c : stream) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(seed ^ h) + index);
}

int Rng::integer(int lo, int hi) {
    if (hi < lo) throw Error(ErrorKind::Internal, "Rng::integer with empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    // Rejection sampling keeps the draw unbiased and portable.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return lo + static_cast<int>(v % span);
}

namespace {

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) std::swap(v[i], v[rng.integer(0, i)]);
}

// ----------------------------------------------------------- drawing

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void blend_pixel(Raster& img, int x, int y, const Color& color, double alpha) {
    for (int c = 0; c < 3; ++c) img.at(x, y, c) = (1.0 - alpha) * img.at(x, y, c) + alpha * color[c];
}

// Axis-aligned rectangle in a card's local frame (u right, v down, origin at centre).
struct LocalRect {
    double u0, u1, v0, v1;
};

double rect_coverage(const LocalRect& r, double u, double v) {
    return clamp01(std::min({u - r.u0, r.u1 - u, v - r.v0, r.v1 - v}) + 0.5);
}

// A rotated card with optional ink marks, alpha-blended with antialiased edges.
void draw_card(Raster& img, Point2 center, double angle_deg, double hw, double hh, const Color& fill, double alpha,
               const std::vector<LocalRect>& ink = {}, const Color& ink_color = {0, 0, 0}) {
    const double a = angle_deg * kPi / 180.0;
    const double ca = std::cos(a), sa = std::sin(a);
    const double ex = std::abs(ca) * hw + std::abs(sa) * hh + 1.0;
    const double ey = std::abs(sa) * hw + std::abs(ca) * hh + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(center.x - ex)));
    const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(center.x + ex)));
    const int y0 = std::max(0, static_cast<int>(std::floor(center.y - ey)));
    const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(center.y + ey)));
    const LocalRect body{-hw, hw, -hh, hh};
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - center.x, dy = y - center.y;
            const double u = ca * dx + sa * dy;
            const double v = -sa * dx + ca * dy;
            const double cov = rect_coverage(body, u, v);
            if (cov <= 0.0) continue;
            double ink_cov = 0.0;
            for (const auto& r : ink) ink_cov = std::max(ink_cov, rect_coverage(r, u, v));
            Color c;
            for (int k = 0; k < 3; ++k) c[k] = (1.0 - ink_cov) * fill[k] + ink_cov * ink_color[k];
            blend_pixel(img, x, y, c, alpha * cov);
        }
    }
}

// Ink-only marks in an axis-aligned frame centred at `center`; the background shows through.
void draw_ink(Raster& img, Point2 center, double hw, double hh, const std::vector<LocalRect>& marks, const Color& color,
              double alpha) {
    const int x0 = std::max(0, static_cast<int>(std::floor(center.x - hw - 1)));
    const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(center.x + hw + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(center.y - hh - 1)));
    const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(center.y + hh + 1)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double cov = 0.0;
            for (const auto& r : marks) cov = std::max(cov, rect_coverage(r, x - center.x, y - center.y));
            if (cov > 0.0) blend_pixel(img, x, y, color, alpha * cov);
        }
    }
}

double segment_distance(Point2 p, Point2 a, Point2 b) {
    const Point2 ab = b - a, ap = p - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    const double t = len2 > 0 ? std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0) : 0.0;
    return distance(p, a + t * ab);
}

void draw_strokes(Raster& img, const std::vector<std::vector<Point2>>& strokes, double width, const Color& color) {
    double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
    for (const auto& s : strokes) {
        for (const auto& p : s) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
    }
    const double pad = width / 2 + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(min_x - pad)));
    const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(max_x + pad)));
    const int y0 = std::max(0, static_cast<int>(std::floor(min_y - pad)));
    const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(max_y + pad)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double d = 1e300;
            for (const auto& s : strokes) {
                for (std::size_t i = 0; i + 1 < s.size(); ++i) d = std::min(d, segment_distance({double(x), double(y)}, s[i], s[i + 1]));
            }
            const double cov = clamp01(width / 2 - d + 0.5);
            if (cov > 0.0) blend_pixel(img, x, y, color, cov);
        }
    }
}

// Centre for a rotated w x h box so it stays `margin` px inside the texture.
Point2 place_box(Rng& rng, int size, double hw, double hh, double angle_deg, double margin) {
    const double a = angle_deg * kPi / 180.0;
    const double ex = std::abs(std::cos(a)) * hw + std::abs(std::sin(a)) * hh + margin;
    const double ey = std::abs(std::sin(a)) * hw + std::abs(std::cos(a)) * hh + margin;
    const double cx = ex < size - ex ? rng.uniform(ex, size - ex) : size / 2.0;
    const double cy = ey < size - ey ? rng.uniform(ey, size - ey) : size / 2.0;
    return {cx, cy};
}

// Smooth value noise in [-1, 1] on a (cells+1)^2 lattice with cubic fade.
std::vector<double> value_noise(Rng& rng, int size, int cells) {
    std::vector<double> lattice(static_cast<std::size_t>(cells + 1) * (cells + 1));
    for (double& v : lattice) v = rng.uniform(-1.0, 1.0);
    auto fade = [](double t) { return t * t * (3.0 - 2.0 * t); };
    std::vector<double> out(static_cast<std::size_t>(size) * size);
    const double scale = static_cast<double>(cells) / size;
    for (int y = 0; y < size; ++y) {
        const double gy = (y + 0.5) * scale;
        const int iy = std::min(static_cast<int>(gy), cells - 1);
        const double ty = fade(gy - iy);
        for (int x = 0; x < size; ++x) {
            const double gx = (x + 0.5) * scale;
            const int ix = std::min(static_cast<int>(gx), cells - 1);
            const double tx = fade(gx - ix);
            auto L = [&](int i, int j) { return lattice[static_cast<std::size_t>(j) * (cells + 1) + i]; };
            const double top = L(ix, iy) + tx * (L(ix + 1, iy) - L(ix, iy));
            const double bot = L(ix, iy + 1) + tx * (L(ix + 1, iy + 1) - L(ix, iy + 1));
            out[static_cast<std::size_t>(y) * size + x] = top + ty * (bot - top);
        }
    }
    return out;
}

const std::array<Color, 4> kInkColors = {Color{0.10, 0.10, 0.12}, Color{0.10, 0.20, 0.50}, Color{0.55, 0.10, 0.10},
                                         Color{0.10, 0.38, 0.20}};

}  // namespace

// --------------------------------------------------------------- textures

FaceSizeMm face_size_mm(const Eigen::Vector3d& dims, FaceId face) {
    switch (face) {
        case FaceId::Front:
        case FaceId::Back: return {dims.x(), dims.y()};
        case FaceId::SideA:
        case FaceId::SideB: return {dims.z(), dims.y()};
        case FaceId::Top:
        case FaceId::Bottom: return {dims.x(), dims.z()};
    }
    return {};
}

TextureSpec random_texture_spec(Rng& rng) {
    TextureSpec s;
    s.base_color = {rng.uniform(0.62, 0.76), rng.uniform(0.47, 0.58), rng.uniform(0.30, 0.42)};
    s.noise_amplitude = rng.uniform(0.02, 0.05);
    s.printed_marks = rng.integer(1, 3);
    return s;
}

Raster make_face_texture(const TextureSpec& spec, std::uint64_t seed, int size) {
    Rng rng(seed);
    const auto coarse = value_noise(rng, size, 5);
    const auto fine = value_noise(rng, size, 16);
    Raster tex(size, size, 3);
    const double tint = rng.uniform(-0.03, 0.03);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * size + x;
            const double n = spec.noise_amplitude * (coarse[i] + 0.4 * fine[i]);
            for (int c = 0; c < 3; ++c) tex.at(x, y, c) = clamp01(spec.base_color[c] + tint + n);
        }
    }
    for (int m = 0; m < spec.printed_marks; ++m) {
        const double hw = rng.uniform(0.08, 0.2) * size;
        const double hh = rng.uniform(0.04, 0.1) * size;
        const Point2 c = place_box(rng, size, hw, hh, 0.0, 12.0);
        const Color ink = kInkColors[rng.integer(0, 3)];
        if (rng.coin()) {
            draw_card(tex, c, 0.0, hw, hh, ink, 0.85);
        } else {
            // Outlined box with a few printed lines.
            const double t = std::max(4.0, 0.03 * size);
            std::vector<LocalRect> marks = {{-hw, hw, -hh, -hh + t}, {-hw, hw, hh - t, hh}, {-hw, -hw + t, -hh, hh},
                                            {hw - t, hw, -hh, hh}};
            const int lines = std::max(1, static_cast<int>((2 * hh - 4 * t) / (2.2 * t)));
            for (int l = 0; l < lines; ++l) {
                const double v0 = -hh + 2 * t + l * 2.2 * t;
                const double len = rng.uniform(0.4, 0.9) * (2 * hw - 4 * t);
                marks.push_back({-hw + 2 * t, -hw + 2 * t + len, v0, v0 + t});
            }
            draw_ink(tex, c, hw, hh, marks, ink, 0.9);
        }
    }
    return tex;
}

FaceTextures make_parcel_textures(const TextureSpec& spec, std::uint64_t seed) {
    FaceTextures t;
    for (int f = 0; f < 6; ++f) t[f] = make_face_texture(spec, derive_seed(seed, "face", f));
    return t;
}

// -------------------------------------------------------------- tampering

double px_per_mm(const FaceSizeMm& face, int size) { return size / face.longer(); }

TamperPlan plan_tampering(const TamperSpec& spec, const FaceSizeMm& face, int size) {
    if (!(face.width > 0 && face.height > 0)) throw Error(ErrorKind::InvalidInput, "face size must be positive");
    TamperPlan p;
    p.spec = spec;
    Rng rng(derive_seed(spec.seed, "plan"));
    switch (spec.type) {
        case TamperType::Label: {
            if (spec.difficulty == Difficulty::Easy) {
                p.length_px = rng.uniform(0.35, 0.50) * size;
                p.width_px = p.length_px * rng.uniform(0.55, 0.8);
                p.color = {0.97, 0.97, 0.95};
            } else {
                p.length_px = rng.uniform(0.08, 0.15) * size;
                p.width_px = p.length_px * rng.uniform(0.7, 1.0);
                const std::array<Color, 4> sticker = {Color{0.85, 0.15, 0.12}, Color{0.95, 0.55, 0.10},
                                                      Color{0.95, 0.85, 0.15}, Color{0.96, 0.96, 0.94}};
                p.color = sticker[rng.integer(0, 3)];
            }
            p.angle_deg = rng.uniform(-12.0, 12.0);
            p.length_mm = p.length_px * face.width / size;
            p.center = place_box(rng, size, p.length_px / 2, p.width_px / 2, p.angle_deg, 4.0);
            break;
        }
        case TamperType::Tape: {
            p.alpha = 0.35;
            const std::array<Color, 2> tape = {Color{0.97, 0.96, 0.92}, Color{0.35, 0.22, 0.10}};
            p.color = tape[rng.integer(0, 1)];
            bool along_x;
            if (spec.difficulty == Difficulty::Easy) {
                along_x = face.width >= face.height;
                const double frac = rng.uniform(0.55, 0.80);
                p.length_mm = frac * face.longer();
                p.width_px = 0.12 * size;
            } else {
                along_x = rng.coin();
                p.length_mm = rng.uniform(0.12, 0.24) * face.shorter();
                p.width_px = rng.uniform(0.05, 0.08) * size;
            }
            const double axis_mm = along_x ? face.width : face.height;
            p.length_px = p.length_mm * size / axis_mm;
            p.angle_deg = (along_x ? 0.0 : 90.0) + rng.uniform(-5.0, 5.0);
            p.center = place_box(rng, size, p.length_px / 2, p.width_px / 2, p.angle_deg, 2.0);
            break;
        }
        case TamperType::Writing: {
            // Path and placement come from their own stream so easy and hard
            // variants of one seed share the same handwriting.
            Rng path(derive_seed(spec.seed, "writing-path"));
            p.color = path.coin() ? Color{0.05, 0.05, 0.06} : Color{0.08, 0.10, 0.35};
            const double letter = path.uniform(0.06, 0.10) * size;
            p.length_px = path.uniform(0.35, 0.60) * size;
            p.angle_deg = path.uniform(-15.0, 15.0);
            const int words = path.integer(1, 3);
            const double gap = 0.6 * letter;
            const double word_len = (p.length_px - gap * (words - 1)) / words;
            std::vector<std::vector<Point2>> local;
            double x = -p.length_px / 2;
            for (int w = 0; w < words; ++w) {
                std::vector<Point2> s;
                const double end = x + word_len;
                bool up = path.coin();
                s.push_back({x, letter / 2 - path.uniform(0.0, 0.3) * letter});
                while (x < end) {
                    x = std::min(end, x + letter * path.uniform(0.25, 0.45));
                    const double h = up ? path.uniform(0.6, 1.0) : path.uniform(0.0, 0.3);
                    s.push_back({x, letter / 2 - h * letter});
                    up = !up;
                }
                local.push_back(std::move(s));
                x = end + gap;
            }
            const double max_stroke = 15.0 * px_per_mm(face, size);
            p.center = place_box(path, size, p.length_px / 2, letter / 2, p.angle_deg, max_stroke / 2 + 2.0);
            const double a = p.angle_deg * kPi / 180.0;
            for (const auto& s : local) {
                std::vector<Point2> out;
                for (const auto& q : s) {
                    out.push_back({p.center.x + std::cos(a) * q.x - std::sin(a) * q.y,
                                   p.center.y + std::sin(a) * q.x + std::cos(a) * q.y});
                }
                p.strokes.push_back(std::move(out));
            }
            p.stroke_mm = spec.difficulty == Difficulty::Easy ? rng.uniform(5.0, 15.0) : rng.uniform(1.5, 3.0);
            p.width_px = p.stroke_mm * px_per_mm(face, size);
            p.length_mm = p.length_px / px_per_mm(face, size);
            break;
        }
    }
    return p;
}

Raster render_tampering(const Raster& texture, const TamperPlan& p) {
    if (texture.channels() != 3) throw Error(ErrorKind::InvalidInput, "tampering expects an RGB texture");
    Raster out = texture;
    const double hw = p.length_px / 2, hh = p.width_px / 2;
    switch (p.spec.type) {
        case TamperType::Label: {
            Rng rng(derive_seed(p.spec.seed, "label-detail"));
            std::vector<LocalRect> ink;
            if (p.spec.difficulty == Difficulty::Easy) {
                // Address lines in the upper part, a barcode underneath.
                const double m = 0.08 * 2 * hw;
                const double t = std::max(3.0, 0.07 * 2 * hh);
                const int lines = rng.integer(3, 5);
                for (int l = 0; l < lines; ++l) {
                    const double v0 = -hh + m + l * 1.9 * t;
                    ink.push_back({-hw + m, -hw + m + rng.uniform(0.4, 0.9) * (2 * hw - 2 * m), v0, v0 + t});
                }
                double u = -hw + m;
                const double v0 = hh - m - 0.3 * 2 * hh;
                while (u < hw - m - 6) {
                    const double bar = rng.uniform(2.0, 6.0);
                    ink.push_back({u, std::min(u + bar, hw - m), v0, hh - m});
                    u += bar + rng.uniform(2.0, 5.0);
                }
            } else {
                // Framed hint symbol: border plus an upward arrow.
                const double t = std::max(1.5, 0.1 * 2 * hw);
                ink = {{-hw, hw, -hh, -hh + t}, {-hw, hw, hh - t, hh}, {-hw, -hw + t, -hh, hh}, {hw - t, hw, -hh, hh}};
                ink.push_back({-0.6 * t, 0.6 * t, -hh + 2.5 * t, hh - 2 * t});
                ink.push_back({-hw + 2.5 * t, hw - 2.5 * t, -hh + 2.5 * t, -hh + 3.5 * t});
            }
            draw_card(out, p.center, p.angle_deg, hw, hh, p.color, 1.0, ink, {0.03, 0.03, 0.03});
            break;
        }
        case TamperType::Tape:
            draw_card(out, p.center, p.angle_deg, hw, hh, p.color, p.alpha);
            break;
        case TamperType::Writing:
            draw_strokes(out, p.strokes, p.width_px, p.color);
            break;
    }
    return out;
}

Raster apply_tampering(const Raster& texture, const TamperSpec& spec, const FaceSizeMm& face) {
    return render_tampering(texture, plan_tampering(spec, face, texture.width()));
}

// ---------------------------------------------------------------- scenes

void SceneConfig::validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorKind::InvalidInput, "scene config: " + m); };
    if (!(dims.minCoeff() > 0)) bad("dimensions must be positive");
    if (!(yaw_min >= 2.0 && yaw_max <= 88.0 && yaw_min <= yaw_max)) bad("yaw range must lie within [2, 88] degrees");
    if (!(pitch_min >= 2.0 && pitch_max <= 88.0 && pitch_min <= pitch_max)) {
        bad("pitch range must lie within [2, 88] degrees");
    }
    if (!(roll_max >= 0.0 && roll_max <= 30.0)) bad("roll_max must lie within [0, 30]");
    if (!(distance_min >= 1.5 && distance_min <= distance_max)) bad("distance range must start at 1.5 or more");
    if (!(min_face_angle >= 0.0 && min_face_angle <= 30.0)) bad("min_face_angle must lie within [0, 30]");
    if (image_size < 64) bad("image size must be at least 64");
    if (supersample < 1) bad("supersample must be >= 1");
    if (!(gain_min > 0 && gain_min <= gain_max)) bad("gain range must be positive");
    if (side != FaceId::SideA && side != FaceId::SideB) bad("side must be side_a or side_b");
    if (cap != FaceId::Top && cap != FaceId::Bottom) bad("cap must be top or bottom");
}

RenderedScene render_scene(const SceneConfig& cfg, const FaceTextures& textures) {
    cfg.validate();
    for (const auto& t : textures) {
        if (t.channels() != 3) throw Error(ErrorKind::InvalidInput, "face textures must be RGB");
    }
    Rng rng(cfg.seed);
    const double size = cfg.image_size;
    const double focal = 1.3 * size;
    const double largest = cfg.dims.maxCoeff();
    const double margin = 4.0;
    std::array<bool, 6> want{};
    want[static_cast<int>(FaceId::Front)] = true;
    want[static_cast<int>(cfg.side)] = true;
    want[static_cast<int>(cfg.cap)] = true;

    for (int attempt = 1; attempt <= 64; ++attempt) {
        ScenePose pose;
        pose.attempts = attempt;
        pose.yaw_deg = rng.uniform(cfg.yaw_min, cfg.yaw_max) * (cfg.side == FaceId::SideA ? -1.0 : 1.0);
        pose.pitch_deg = rng.uniform(cfg.pitch_min, cfg.pitch_max) * (cfg.cap == FaceId::Top ? 1.0 : -1.0);
        pose.roll_deg = rng.uniform(-cfg.roll_max, cfg.roll_max);
        pose.distance_mm = rng.uniform(cfg.distance_min, cfg.distance_max) * largest;
        pose.offset = {rng.uniform(-0.06, 0.06) * size, rng.uniform(-0.06, 0.06) * size};
        for (double& g : pose.gains) g = rng.uniform(cfg.gain_min, cfg.gain_max);
        for (double& b : pose.background) b = rng.uniform(0.1, 0.9);

        Cuboid c;
        c.dims = cfg.dims;
        c.rotation = rotation_from_angles(pose.yaw_deg, pose.pitch_deg, pose.roll_deg);
        c.translation = {pose.offset.x() * pose.distance_mm / focal, pose.offset.y() * pose.distance_mm / focal,
                         pose.distance_mm};
        c.focal = focal;
        c.principal = image_center(cfg.image_size, cfg.image_size);
        const CuboidProjection proj = project_cuboid(c);
        bool ok = true;
        for (int f = 0; f < 6; ++f) ok = ok && proj.face_visible[f] == want[f];
        for (const auto& p : proj.points) {
            ok = ok && p.x >= margin && p.y >= margin && p.x <= size - 1 - margin && p.y <= size - 1 - margin;
        }
        // Reject slivers: every shown face must meet its line of sight at min_face_angle or more.
        const double min_cos = std::sin(cfg.min_face_angle * kPi / 180.0);
        for (int f = 0; f < 6 && ok; ++f) {
            if (!want[f]) continue;
            Eigen::Vector3d centre = Eigen::Vector3d::Zero();
            for (int corner : kFaceCorners[f]) {
                const Eigen::Vector3d local((corner & 1) ? 0.5 : -0.5, (corner & 2) ? 0.5 : -0.5, (corner & 4) ? 0.5 : -0.5);
                centre += 0.25 * (c.rotation * local.cwiseProduct(c.dims) + c.translation);
            }
            ok = proj.face_normals[f].normalized().dot(-centre.normalized()) >= min_cos;
        }
        if (!ok) continue;
        OrderedKeypoints ordered;
        try {
            ordered = order_keypoints(CornerLayout::from_projection(proj));
        } catch (const Error&) {
            continue;
        }

        RenderedScene scene;
        scene.pose = pose;
        scene.cuboid = c;
        scene.image = Raster(cfg.image_size, cfg.image_size, 3);
        for (int y = 0; y < cfg.image_size; ++y) {
            for (int x = 0; x < cfg.image_size; ++x) {
                for (int ch = 0; ch < 3; ++ch) scene.image.at(x, y, ch) = pose.background[ch];
            }
        }
        std::array<int, 8> k_of_corner{};
        for (int k = 0; k < 8; ++k) k_of_corner[ordered.corner_ids[k]] = k;
        scene.annotation.keypoints = ordered.keypoints;
        for (int f = 0; f < 6; ++f) {
            if (!want[f]) continue;
            std::array<Point2, 4> quad;
            std::array<int, 4> idx;
            for (int i = 0; i < 4; ++i) {
                quad[i] = proj.points[kFaceCorners[f][i]];
                idx[i] = k_of_corner[kFaceCorners[f][i]];
            }
            paint_quad(scene.image, textures[f], quad, pose.gains[f], cfg.supersample);
            scene.annotation.faces[static_cast<FaceId>(f)] = idx;
        }
        return scene;
    }
    throw Error(ErrorKind::Internal, "no admissible pose after 64 draws for seed " + std::to_string(cfg.seed));
}

// --------------------------------------------------------------- benchmark

void BenchmarkConfig::validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorKind::InvalidInput, "benchmark config: " + m); };
    if (n_parcels < 1) bad("n_parcels must be >= 1");
    if (images_per_parcel < 1) bad("images_per_parcel must be >= 1");
    if (!(tamper_fraction >= 0.0 && tamper_fraction <= 1.0)) bad("tamper_fraction must lie in [0, 1]");
    if (image_size < 200) bad("image_size must be at least 200");
    if (jobs < 1) bad("jobs must be >= 1");
}

namespace {

struct CaptureView {
    FaceId side;
    FaceId cap;
};

// Reference views cover all five faces; input views cycle through every combination.
const std::array<CaptureView, 2> kReferenceViews = {CaptureView{FaceId::SideA, FaceId::Top},
                                                    CaptureView{FaceId::SideB, FaceId::Bottom}};
const std::array<CaptureView, 4> kInputViews = {CaptureView{FaceId::SideA, FaceId::Top},
                                                CaptureView{FaceId::SideB, FaceId::Bottom},
                                                CaptureView{FaceId::SideB, FaceId::Top},
                                                CaptureView{FaceId::SideA, FaceId::Bottom}};

const std::array<std::pair<TamperType, Difficulty>, 6> kCombos = {
    std::pair{TamperType::Label, Difficulty::Easy},   std::pair{TamperType::Label, Difficulty::Hard},
    std::pair{TamperType::Tape, Difficulty::Easy},    std::pair{TamperType::Tape, Difficulty::Hard},
    std::pair{TamperType::Writing, Difficulty::Easy}, std::pair{TamperType::Writing, Difficulty::Hard}};

struct ParcelPlan {
    std::string id;
    std::uint64_t seed = 0;
    std::vector<TamperSpec> tampering;
};

struct ParcelOutput {
    std::vector<AnnotationRecord> references;
    std::vector<AnnotationRecord> inputs;
    std::vector<Raster> reference_images;
    ordered_json manifest;
};

ordered_json pose_json(const ScenePose& p) {
    return {{"yaw_deg", p.yaw_deg},       {"pitch_deg", p.pitch_deg},   {"roll_deg", p.roll_deg},
            {"distance_mm", p.distance_mm}, {"offset_px", {p.offset.x(), p.offset.y()}},
            {"gains", p.gains},           {"background", p.background}, {"attempts", p.attempts}};
}

ParcelOutput generate_parcel(const BenchmarkConfig& cfg, const ParcelPlan& plan, const fs::path& out_dir) {
    ParcelOutput out;
    Rng rng(plan.seed);
    const Eigen::Vector3d dims(rng.uniform(200.0, 400.0), rng.uniform(200.0, 400.0), rng.uniform(200.0, 400.0));
    const TextureSpec tex_spec = random_texture_spec(rng);
    const std::uint64_t tex_seed = derive_seed(plan.seed, "texture");
    const FaceTextures clean = make_parcel_textures(tex_spec, tex_seed);
    FaceTextures tampered = clean;

    ordered_json tamper_json = ordered_json::array();
    std::vector<FaceTampering> tags;
    for (const auto& spec : plan.tampering) {
        const FaceSizeMm size = face_size_mm(dims, spec.face);
        const TamperPlan tp = plan_tampering(spec, size);
        tampered[static_cast<int>(spec.face)] = render_tampering(clean[static_cast<int>(spec.face)], tp);
        tags.push_back({spec.face, spec.type, spec.difficulty});
        tamper_json.push_back({{"face", face_name(spec.face)},
                               {"type", tamper_type_name(spec.type)},
                               {"difficulty", difficulty_name(spec.difficulty)},
                               {"seed", spec.seed},
                               {"length_mm", tp.length_mm},
                               {"length_px", tp.length_px},
                               {"width_px", tp.width_px},
                               {"stroke_mm", tp.stroke_mm},
                               {"angle_deg", tp.angle_deg},
                               {"center_px", {tp.center.x, tp.center.y}}});
    }

    ordered_json captures = ordered_json::array();
    auto capture = [&](const std::string& name, std::uint64_t seed, const CaptureView& view, const FaceTextures& tex,
                       const std::string& role, const std::string& split) {
        SceneConfig sc;
        sc.seed = seed;
        sc.dims = dims;
        sc.image_size = cfg.image_size;
        sc.side = view.side;
        sc.cap = view.cap;
        RenderedScene scene = render_scene(sc, tex);
        AnnotationRecord rec = std::move(scene.annotation);
        rec.image = "images/" + name + ".png";
        rec.parcel_id = plan.id;
        rec.role = role;
        rec.split = split;
        if (role == "input") rec.tampering = tags;
        write_png(out_dir / rec.image, scene.image);
        ordered_json cj = {{"image", rec.image}, {"role", role}, {"seed", seed},
                           {"side", face_name(view.side)}, {"cap", face_name(view.cap)}};
        if (!split.empty()) cj["split"] = split;
        cj["pose"] = pose_json(scene.pose);
        captures.push_back(std::move(cj));
        return std::pair{std::move(rec), std::move(scene.image)};
    };

    for (std::size_t r = 0; r < kReferenceViews.size(); ++r) {
        auto [rec, img] = capture(plan.id + "_ref" + std::to_string(r), derive_seed(plan.seed, "reference", r),
                                  kReferenceViews[r], clean, "reference", "");
        out.references.push_back(std::move(rec));
        out.reference_images.push_back(std::move(img));
    }
    char buf[16];
    for (int j = 0; j < cfg.images_per_parcel; ++j) {
        std::snprintf(buf, sizeof buf, "_%02d", j);
        const std::string split = j < cfg.images_per_parcel / 2 ? "train" : "test";
        auto [rec, img] = capture(plan.id + buf, derive_seed(plan.seed, "input", j), kInputViews[j % kInputViews.size()],
                                  tampered, "input", split);
        out.inputs.push_back(std::move(rec));
    }

    out.manifest = {{"parcel_id", plan.id},
                    {"seed", plan.seed},
                    {"dims_mm", {dims.x(), dims.y(), dims.z()}},
                    {"texture", {{"seed", tex_seed},
                                 {"base_color", tex_spec.base_color},
                                 {"noise_amplitude", tex_spec.noise_amplitude},
                                 {"printed_marks", tex_spec.printed_marks}}},
                    {"tampered", !plan.tampering.empty()},
                    {"tampering", tamper_json},
                    {"captures", captures}};
    return out;
}

}  // namespace

BenchmarkSummary generate_benchmark(const BenchmarkConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    try {
        fs::create_directories(out_dir / "images");
        fs::create_directories(out_dir / "references");
    } catch (const fs::filesystem_error& e) {
        throw Error(ErrorKind::Io, std::string("cannot create output directory: ") + e.what());
    }

    // Tampered parcels and round-robin (type, difficulty) assignment are fixed up
    // front so they do not depend on scheduling.
    std::vector<ParcelPlan> plans(cfg.n_parcels);
    std::vector<int> order(cfg.n_parcels);
    std::iota(order.begin(), order.end(), 0);
    Rng assign(derive_seed(cfg.seed, "tamper-assignment"));
    shuffle(order, assign);
    const int n_tampered = static_cast<int>(std::lround(cfg.n_parcels * cfg.tamper_fraction));
    std::vector<bool> is_tampered(cfg.n_parcels, false);
    for (int i = 0; i < n_tampered; ++i) is_tampered[order[i]] = true;

    char id[32];
    int combo = 0;
    for (int i = 0; i < cfg.n_parcels; ++i) {
        std::snprintf(id, sizeof id, "p%04d", i + 1);
        plans[i].id = id;
        plans[i].seed = derive_seed(cfg.seed, "parcel", static_cast<std::uint64_t>(i));
        if (!is_tampered[i]) continue;
        std::vector<FaceId> faces(kRelevantFaces.begin(), kRelevantFaces.end());
        Rng pick(derive_seed(plans[i].seed, "tamper-faces"));
        shuffle(faces, pick);
        for (int k = 0; k < 3; ++k) {
            const auto [type, diff] = kCombos[combo++ % kCombos.size()];
            plans[i].tampering.push_back({type, diff, faces[k], derive_seed(plans[i].seed, "tamper", static_cast<std::uint64_t>(faces[k]))});
        }
    }

    std::vector<ParcelOutput> outputs(cfg.n_parcels);
    parallel_for(plans.size(), cfg.jobs, [&](std::size_t i) {
        outputs[i] = generate_parcel(cfg, plans[i], out_dir);
        const auto& refs = outputs[i].references;
        auto& images = outputs[i].reference_images;
        const ParcelTextureMap map = compose_texture_map(refs, [&](const AnnotationRecord& r) -> Raster {
            for (std::size_t k = 0; k < refs.size(); ++k) {
                if (refs[k].image == r.image) return images[k];
            }
            throw Error(ErrorKind::Internal, "unknown reference image " + r.image);
        });
        save_texture_map(out_dir / "references", map);
        images.clear();
    });

    std::vector<AnnotationRecord> all, inputs;
    ordered_json parcels = ordered_json::array();
    BenchmarkSummary summary;
    summary.parcels = cfg.n_parcels;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        for (const auto& r : outputs[i].references) all.push_back(r);
        for (const auto& r : outputs[i].inputs) {
            all.push_back(r);
            inputs.push_back(r);
        }
        parcels.push_back(std::move(outputs[i].manifest));
        if (!plans[i].tampering.empty()) {
            ++summary.tampered_parcels;
            summary.tampered_faces += static_cast<int>(plans[i].tampering.size());
        }
    }
    summary.images = static_cast<int>(inputs.size());
    save_annotations(out_dir / "annotations.json", all);

    const TextureStore store(out_dir / "references");
    const auto pairs = write_pairs(inputs, store, {out_dir, out_dir / "pairs", cfg.jobs});
    summary.pairs = static_cast<int>(pairs.size());

    ordered_json manifest = {
        {"generator", "tamperkit synth"},
        {"config", {{"n_parcels", cfg.n_parcels},
                    {"images_per_parcel", cfg.images_per_parcel},
                    {"tamper_fraction", cfg.tamper_fraction},
                    {"seed", cfg.seed},
                    {"image_size", cfg.image_size}}},
        {"summary", {{"parcels", summary.parcels},
                     {"tampered_parcels", summary.tampered_parcels},
                     {"tampered_faces", summary.tampered_faces},
                     {"input_images", summary.images},
                     {"pairs", summary.pairs}}},
        {"layout", {{"images", "images/"},
                    {"annotations", "annotations.json"},
                    {"references", "references/<parcel_id>/<face>.png"},
                    {"pairs", "pairs/pairs.csv"}}},
        {"parcels", parcels}};
    write_text_file(out_dir / "manifest.json", manifest.dump(1) + "\n");
    return summary;
}

}  // namespace tamperkit
