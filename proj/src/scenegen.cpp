#include "see360/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace see360 {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    int id = 0;
    Rgb color{};
};

Rgb mix(const Rgb& a, const Rgb& b, double w)
{
    return {a[0] + (b[0] - a[0]) * w, a[1] + (b[1] - a[1]) * w, a[2] + (b[2] - a[2]) * w};
}

Rgb scale(const Rgb& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

Eigen::Vector3d billboard_normal(const Billboard& b)
{
    Eigen::Vector3d n(-b.center.x(), 0, -b.center.z());
    return n.normalized();
}

Rgb texture(const Billboard& b, double s, double t)
{
    switch (b.pattern) {
    case Pattern::Solid:
        // A soft vertical gradient so solid quads still carry some structure.
        return scale(b.color, 0.75 + 0.25 * t);
    case Pattern::Stripes:
        return static_cast<int>(std::floor(s * b.frequency)) % 2 ? b.color : scale(b.color, 0.45);
    case Pattern::Checker: {
        const int cs = static_cast<int>(std::floor(s * b.frequency));
        const int ct = static_cast<int>(std::floor(t * b.frequency));
        return (cs + ct) % 2 ? b.color : mix(b.color, Rgb{1, 1, 1}, 0.6);
    }
    }
    return b.color;
}

Hit cast(const SceneSpec& scene, const Eigen::Vector3d& o, const Eigen::Vector3d& d)
{
    Hit best;
    for (const auto& b : scene.billboards) {
        const Eigen::Vector3d n = billboard_normal(b);
        const double denom = n.dot(d);
        if (std::abs(denom) < 1e-12)
            continue;
        const double t = n.dot(b.center - o) / denom;
        if (!(t > 0) || t >= best.t)
            continue;
        const Eigen::Vector3d p = o + t * d;
        const Eigen::Vector3d axis(n.z(), 0, -n.x());
        const double s = (p - b.center).dot(axis) / b.width + 0.5;
        const double tv = (p.y() - b.center.y()) / b.height + 0.5;
        if (s < 0 || s >= 1 || tv < 0 || tv >= 1)
            continue;
        best.t = t;
        best.id = b.id;
        best.color = texture(b, s, tv);
    }
    if (scene.has_ground && d.y() < 0) {
        const double t = (scene.ground_y - o.y()) / d.y();
        if (t > 0 && t < best.t) {
            const Eigen::Vector3d p = o + t * d;
            const int cell = static_cast<int>(std::floor(p.x() / 2.0)) + static_cast<int>(std::floor(p.z() / 2.0));
            const Rgb tone = cell % 2 ? scene.ground : scale(scene.ground, 0.6);
            const double fade = std::exp(-std::hypot(p.x(), p.z()) / 25.0);
            best.t = t;
            best.id = 0;
            best.color = mix(scene.ground, tone, fade);
        }
    }
    if (!std::isfinite(best.t)) {
        best.id = 0;
        best.color = scene.background;
    }
    return best;
}

}  // namespace

double normalize_yaw(double yaw_deg)
{
    double y = std::fmod(yaw_deg, 360.0);
    if (y < 0)
        y += 360.0;
    return y >= 360.0 ? 0.0 : y;
}

Eigen::Vector3d CameraPose::forward() const
{
    const double a = yaw_deg * kDegToRad;
    return {std::sin(a), 0, std::cos(a)};
}

Eigen::Vector3d CameraPose::right() const
{
    const double a = yaw_deg * kDegToRad;
    return {std::cos(a), 0, -std::sin(a)};
}

double CameraPose::focal(int width) const
{
    if (!(fov_deg > 0 && fov_deg < 180))
        throw std::invalid_argument("field of view must lie in (0, 180) degrees");
    return 0.5 * width / std::tan(0.5 * fov_deg * kDegToRad);
}

SceneSpec build_scene(std::uint64_t seed, int complexity)
{
    if (complexity < 1)
        throw std::invalid_argument("scene complexity must be at least 1");
    if (6 * complexity > 255)
        throw std::invalid_argument("too many objects for 8-bit segmentation ids");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0, 1);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

    SceneSpec scene;
    scene.seed = seed;
    int id = 1;
    for (int sector = 0; sector < 6; ++sector)
        for (int k = 0; k < complexity; ++k) {
            Billboard b;
            // Spread the objects of one sector across sub-slots so they rarely stack.
            const double slot = 60.0 / complexity;
            const double azimuth = (sector * 60.0 + k * slot + uniform(0.15, 0.85) * slot) * kDegToRad;
            const double depth = uniform(kMinDepth, kMaxDepth);
            b.width = depth * uniform(0.18, 0.45);
            b.height = depth * uniform(0.15, 0.35);
            const double lift = uniform(0.0, 0.08) * depth;
            b.center = {depth * std::sin(azimuth), scene.ground_y + 0.5 * b.height + lift, depth * std::cos(azimuth)};
            b.id = id++;
            b.color = {uniform(0.15, 0.95), uniform(0.15, 0.95), uniform(0.15, 0.95)};
            b.pattern = static_cast<Pattern>(std::uniform_int_distribution<int>(0, 2)(rng));
            b.frequency = std::floor(uniform(2, 7));
            scene.billboards.push_back(b);
        }
    return scene;
}

Eigen::Vector2d project(const CameraPose& pose, const Eigen::Vector3d& world, int height, int width)
{
    const Eigen::Vector3d rel = world - pose.position;
    const double x = rel.dot(pose.right());
    const double y = rel.y();
    const double z = rel.dot(pose.forward());
    if (!(z > 0))
        return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    const double f = pose.focal(width);
    return {0.5 * width + f * x / z, 0.5 * height - f * y / z};
}

RenderedView render_view(const SceneSpec& scene, const CameraPose& pose, int height, int width)
{
    if (height < 1 || width < 1)
        throw std::invalid_argument("render size must be positive");
    const double f = pose.focal(width);
    const Eigen::Vector3d fwd = pose.forward();
    const Eigen::Vector3d right = pose.right();
    const Eigen::Vector3d up(0, 1, 0);
    auto ray = [&](double u, double v) {
        return Eigen::Vector3d(right * ((u - 0.5 * width) / f) + up * ((0.5 * height - v) / f) + fwd);
    };

    const Index plane = static_cast<Index>(height) * width;
    Buffer<float> rgb(3 * plane);
    Buffer<float> seg(plane);
    constexpr int kSub = 3;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            Rgb acc{0, 0, 0};
            for (int sy = 0; sy < kSub; ++sy)
                for (int sx = 0; sx < kSub; ++sx) {
                    const Hit h = cast(scene, pose.position, ray(x + (sx + 0.5) / kSub, y + (sy + 0.5) / kSub));
                    for (int c = 0; c < 3; ++c)
                        acc[static_cast<std::size_t>(c)] += h.color[static_cast<std::size_t>(c)];
                }
            const Index p = static_cast<Index>(y) * width + x;
            for (int c = 0; c < 3; ++c)
                rgb[c * plane + p] =
                    static_cast<float>(std::clamp(acc[static_cast<std::size_t>(c)] / (kSub * kSub), 0.0, 1.0));
            seg[p] = static_cast<float>(cast(scene, pose.position, ray(x + 0.5, y + 0.5)).id);
        }
    return {Tensor<float>({3, height, width}, std::move(rgb)), Tensor<float>({1, height, width}, std::move(seg))};
}

}  // namespace see360
