#pragma once

#include <array>
#include <functional>
#include <vector>

#include "splitgs/image.hpp"
#include "splitgs/tensor.hpp"

namespace splitgs {

/// Mean absolute difference over all pixels and channels.
TensorPtr l1_image(const TensorPtr& a, const TensorPtr& b);

/// One-directional nearest-point distance: for every reference point, the
/// euclidean distance to its closest candidate (ties broken by lowest index),
/// averaged over references. Differentiable w.r.t. candidate positions.
TensorPtr nearest_point_loss(const std::vector<std::array<double, 3>>& ref_points,
                             const TensorPtr& candidates);

struct LossWeights {
    double perceptual = 0.5;  // lambda_p
    double lifting = 1.0;     // lambda_l
    double split = 0.5;       // lambda_s
};

struct LossReport {
    double image = 0.0;
    double perceptual = 0.0;
    double lifting = 0.0;
    double split = 0.0;
    double total = 0.0;
    TensorPtr node;  // scalar total, differentiable
};

using PerceptualFn = std::function<TensorPtr(const TensorPtr& a, const TensorPtr& b)>;

struct LossInputs {
    // (rendered, target) pairs; the image term averages over them
    std::vector<std::pair<TensorPtr, TensorPtr>> image_pairs;
    TensorPtr identity_positions;                     // [Ni,3]
    TensorPtr split_positions;                        // [Ns,3]; null disables the term
    std::vector<std::array<double, 3>> mesh_vertices; // reference points
};

/// total = image + lp * perceptual + ll * lifting + ls * split.
/// The perceptual term is zero when no plugin is given.
LossReport total_loss(const LossInputs& inputs, const LossWeights& weights,
                      const PerceptualFn& perceptual = nullptr);

// ---- image quality metrics (evaluation only, not differentiated) ----------

constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE), capped at 99 dB (identical images report the cap).
double psnr(const Image& a, const Image& b);

/// Single-scale SSIM: 11x11 Gaussian window sigma 1.5, C1 = 0.01^2,
/// C2 = 0.03^2, valid windows only, per-channel then averaged.
double ssim(const Image& a, const Image& b);

}  // namespace splitgs
