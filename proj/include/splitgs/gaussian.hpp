#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "splitgs/tensor.hpp"

namespace splitgs {

/// Structure-of-arrays Gaussian attributes as graph tensors.
/// positions [N,3] world units, rotations [N,4] unit quaternions (w,x,y,z),
/// scales [N,3] positive, opacities [N,1] in [0,1], colors [N,3] in [0,1].
struct GaussianSet {
    TensorPtr positions, rotations, scales, opacities, colors;

    int64_t size() const { return positions ? positions->rows() : 0; }
};

/// Unconstrained optimization parameterization; activate() maps it to a valid
/// GaussianSet for any finite input.
struct RawGaussianParams {
    TensorPtr position_delta;   // [N,3]
    TensorPtr rotation_logits;  // [N,4]
    TensorPtr scale_logits;     // [N,3]
    TensorPtr opacity_logits;   // [N,1]
    TensorPtr color_logits;     // [N,3]
};

/// Per-layer attribute caps; caps must strictly decrease with layer index.
struct LayerScale {
    int layer = 0;
    double opacity_cap = 0.8;
    double scale_cap = 0.05;
    double position_offset_cap = 0.1;
};

/// Geometric-decay schedule: opacity 0.8*2^-i, scale 0.05*extent*2^-i,
/// position offset 0.1*extent*2^-i, for layers 0..L.
std::vector<LayerScale> default_layer_schedule(int layers, double scene_extent);

constexpr double kScaleFloor = 1e-6;  // keeps covariance invertible

/// position = parent + cap*tanh(dp); opacity/scale through capped sigmoid;
/// rotation = normalize(logits + (1,0,0,0)); color = sigmoid(logits).
GaussianSet activate(const RawGaussianParams& raw, const TensorPtr& parent_positions,
                     const LayerScale& scale);

/// Sigma = R diag(s^2) R^T, row-major 3x3. Throws when |q| deviates from 1
/// beyond 1e-6.
std::array<double, 9> covariance(const std::array<double, 4>& quaternion,
                                 const std::array<double, 3>& scale);

/// Rotation matrix of a unit quaternion (w,x,y,z); no normalization applied.
void quat_to_rotmat(const double q[4], double r[9]);

/// Attribute-wise concatenation preserving input order.
GaussianSet concat(const std::vector<GaussianSet>& sets);

/// Plain value snapshot for rendering oracles and export.
struct GaussianValues {
    int64_t n = 0;
    std::vector<double> positions, rotations, scales, opacities, colors;
};

GaussianValues snapshot(const GaussianSet& set);
GaussianSet from_values(const GaussianValues& v, bool requires_grad = false);

/// Throws unless quaternions are unit (1e-9 after activation), scales
/// positive and opacities/colors within [0,1].
void validate(const GaussianSet& set);

}  // namespace splitgs
