#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "see360/tensor.hpp"

namespace see360 {

using Rgb = std::array<double, 3>;

enum class Pattern { Solid, Stripes, Checker };

/// Vertical textured quad whose normal points at the scene origin.
struct Billboard {
    Eigen::Vector3d center;
    double width = 1;
    double height = 1;
    int id = 1;
    Rgb color{};
    Pattern pattern = Pattern::Solid;
    double frequency = 4;  // stripe or checker cells across the quad
};

struct SceneSpec {
    std::uint64_t seed = 0;
    std::vector<Billboard> billboards;
    Rgb background{0.62, 0.74, 0.88};
    Rgb ground{0.42, 0.38, 0.33};
    double ground_y = -1.5;
    bool has_ground = true;
};

inline constexpr double kMinDepth = 5.0;
inline constexpr double kMaxDepth = 30.0;

/// Yaw 0 looks along +z; positive yaw turns toward +x.
struct CameraPose {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    double yaw_deg = 0;
    double fov_deg = 60;

    Eigen::Vector3d forward() const;
    Eigen::Vector3d right() const;
    double focal(int width) const;
};

/// Yaw folded into [0, 360).
double normalize_yaw(double yaw_deg);

/// 6 * complexity billboards, `complexity` in every 60-degree sector.
SceneSpec build_scene(std::uint64_t seed, int complexity);

/// Pixel coordinates (u right, v down) of a world point; z <= 0 in camera
/// space yields non-finite values.
Eigen::Vector2d project(const CameraPose& pose, const Eigen::Vector3d& world, int height, int width);

struct RenderedView {
    Tensor<float> rgb;  // [3,H,W] in [0,1]
    Tensor<float> seg;  // [1,H,W] object ids, 0 for background and ground
};

/// z-buffered ray casting, 3x3 supersampled color; seg from pixel centres.
RenderedView render_view(const SceneSpec& scene, const CameraPose& pose, int height, int width);

}  // namespace see360
