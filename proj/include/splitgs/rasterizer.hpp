#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "splitgs/gaussian.hpp"
#include "splitgs/image.hpp"
#include "splitgs/tensor.hpp"

namespace splitgs {

struct Camera {
    enum class Mode { perspective, orthographic };

    double fx = 1.0, fy = 1.0;   // pixel-unit focal lengths / ortho scales
    double cx = 0.0, cy = 0.0;   // principal point
    std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // world-to-view
    std::array<double, 3> translation{0, 0, 0};
    int width = 0, height = 0;
    double near = 0.01;
    Mode mode = Mode::perspective;

    /// View matrix looking from `position` at `target`; image y grows downward.
    static Camera look_at(const std::array<double, 3>& position,
                          const std::array<double, 3>& target,
                          const std::array<double, 3>& up, double fx, double fy,
                          int width, int height, double near = 0.01,
                          Mode mode = Mode::perspective);
};

// compositing constants (shared contract between the tiled renderer and the
// brute-force reference; the reference must apply them identically to keep
// bit-equality)
constexpr int kTileSize = 16;
constexpr double kCovDilation = 0.3;          // px^2 added to the cov2d diagonal
constexpr double kAlphaClamp = 0.99;
constexpr double kAlphaSkip = 1.0 / 255.0;
constexpr double kTransmittanceStop = 1e-4;
constexpr double kRadiusSigmas = 3.0;         // conservative bounding box

struct ProjectedSplat {
    double mean2d[2];
    double cov2d[3];   // packed symmetric (a, b, c) = [[a,b],[b,c]], dilated
    double inv2d[3];   // packed inverse
    double depth;      // view-space z
    double view[3];    // view-space position (kept for backward)
    double color[3];
    double alpha;
    double radius;     // 3 sigma_max, axis-aligned bound in pixels
    int64_t source_index;
};

/// EWA projection of the retained (unmasked, depth > near) Gaussians.
/// A null mask keeps everything. Output order follows storage order.
std::vector<ProjectedSplat> project(const GaussianValues& g, const Camera& cam,
                                    const std::vector<uint8_t>* mask = nullptr);

/// Front-to-back Eq.-3 compositing of one pixel over depth-sorted splats.
/// This is the brute-force reference inner loop.
std::array<double, 3> composite_pixel(const std::vector<ProjectedSplat>& sorted,
                                      double px, double py);

/// Tile-based renderer (OpenMP over tiles). Masked Gaussians are excluded
/// before projection; splats sort by (depth, source_index).
Image render_tiled(const GaussianValues& g, const std::vector<uint8_t>& mask,
                   const Camera& cam);

/// Serial per-pixel oracle: every pixel walks the full sorted splat list.
/// Bit-identical to render_tiled by contract.
Image render_reference(const GaussianValues& g, const std::vector<uint8_t>& mask,
                       const Camera& cam);

struct RenderGrads {
    std::vector<double> positions;  // [N,3]
    std::vector<double> rotations;  // [N,4]
    std::vector<double> scales;     // [N,3]
    std::vector<double> opacities;  // [N,1]
    std::vector<double> colors;     // [N,3]
};

/// Analytic backward through compositing, the Gaussian exponent, the 2-D
/// covariance inverse, the projection Jacobian and the covariance
/// factorization. Deterministic: pixel gradients accumulate per tile-row
/// chunk, chunks merge in fixed order.
RenderGrads render_backward(const GaussianValues& g, const std::vector<uint8_t>& mask,
                            const Camera& cam, const Image& upstream);

/// Differentiable graph node wrapping render_tiled + render_backward.
/// An empty mask means all ones.
TensorPtr render(const GaussianSet& g, const std::vector<uint8_t>& mask,
                 const Camera& cam);

}  // namespace splitgs
