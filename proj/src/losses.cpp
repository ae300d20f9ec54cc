#include "splitgs/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace splitgs {

TensorPtr l1_image(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape) throw std::invalid_argument("l1_image: shape mismatch");
    return reduce_mean(abs(sub(a, b)));
}

TensorPtr nearest_point_loss(const std::vector<std::array<double, 3>>& ref_points,
                             const TensorPtr& candidates) {
    if (ref_points.empty()) throw std::invalid_argument("nearest_point_loss: no references");
    const int64_t q = candidates->rows();
    if (q < 1) throw std::invalid_argument("nearest_point_loss: empty candidate set");
    if (candidates->cols() != 3) throw std::invalid_argument("nearest_point_loss: need Qx3");

    const int64_t p = (int64_t)ref_points.size();
    std::vector<int64_t> nearest((size_t)p);
    const double* cv = candidates->values.data();
#pragma omp parallel for schedule(static) if (p * q > 4096)
    for (int64_t i = 0; i < p; ++i) {
        const auto& r = ref_points[i];
        double best = std::numeric_limits<double>::infinity();
        int64_t best_idx = 0;
        for (int64_t j = 0; j < q; ++j) {
            const double dx = cv[j * 3 + 0] - r[0];
            const double dy = cv[j * 3 + 1] - r[1];
            const double dz = cv[j * 3 + 2] - r[2];
            const double d = dx * dx + dy * dy + dz * dz;
            if (d < best) {  // strict comparison keeps the lowest index on ties
                best = d;
                best_idx = j;
            }
        }
        nearest[i] = best_idx;
    }

    std::vector<double> ref_flat((size_t)p * 3);
    for (int64_t i = 0; i < p; ++i) {
        for (int c = 0; c < 3; ++c) ref_flat[i * 3 + c] = ref_points[i][c];
    }
    auto selected = gather_rows(candidates, nearest);
    auto diff = sub(selected, make_tensor({p, 3}, std::move(ref_flat)));
    auto dist = sqrt(matmul(mul(diff, diff), constant({3, 1}, 1.0)));  // [P,1] row norms
    return reduce_mean(dist);
}

LossReport total_loss(const LossInputs& inputs, const LossWeights& weights,
                      const PerceptualFn& perceptual) {
    if (inputs.image_pairs.empty()) throw std::invalid_argument("total_loss: no image pairs");

    TensorPtr image_term = scalar_tensor(0.0);
    for (const auto& [rendered, target] : inputs.image_pairs) {
        image_term = add(image_term, l1_image(rendered, target));
    }
    image_term = div(image_term, scalar_tensor((double)inputs.image_pairs.size()));

    TensorPtr percep_term = scalar_tensor(0.0);
    if (perceptual) {
        for (const auto& [rendered, target] : inputs.image_pairs) {
            percep_term = add(percep_term, perceptual(rendered, target));
        }
        percep_term = div(percep_term, scalar_tensor((double)inputs.image_pairs.size()));
    }

    auto lifting_term = nearest_point_loss(inputs.mesh_vertices, inputs.identity_positions);
    TensorPtr split_term = inputs.split_positions
                               ? nearest_point_loss(inputs.mesh_vertices, inputs.split_positions)
                               : scalar_tensor(0.0);

    LossReport report;
    report.image = image_term->scalar();
    report.perceptual = percep_term->scalar();
    report.lifting = lifting_term->scalar();
    report.split = split_term->scalar();
    report.node = add(
        add(image_term, mul(scalar_tensor(weights.perceptual), percep_term)),
        add(mul(scalar_tensor(weights.lifting), lifting_term),
            mul(scalar_tensor(weights.split), split_term)));
    report.total = report.node->scalar();
    return report;
}

double psnr(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("psnr: shape mismatch");
    }
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= (double)a.data.size();
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

std::array<double, kSsimWindow> gaussian_window() {
    std::array<double, kSsimWindow> w{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double x = i - (kSsimWindow - 1) / 2.0;
        w[i] = std::exp(-x * x / (2.0 * kSsimSigma * kSsimSigma));
        sum += w[i];
    }
    for (auto& x : w) x /= sum;
    return w;
}

// separable valid-mode convolution over one channel plane
std::vector<double> windowed_mean(const std::vector<double>& plane, int h, int w) {
    const auto win = gaussian_window();
    const int out_w = w - kSsimWindow + 1;
    const int out_h = h - kSsimWindow + 1;
    std::vector<double> rows((size_t)h * out_w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kSsimWindow; ++i) acc += win[i] * plane[(size_t)y * w + x + i];
            rows[(size_t)y * out_w + x] = acc;
        }
    }
    std::vector<double> out((size_t)out_h * out_w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kSsimWindow; ++i) acc += win[i] * rows[(size_t)(y + i) * out_w + x];
            out[(size_t)y * out_w + x] = acc;
        }
    }
    return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("ssim: shape mismatch");
    }
    if (a.width < kSsimWindow || a.height < kSsimWindow) {
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    }

    const int h = a.height, w = a.width;
    const int out_h = h - kSsimWindow + 1, out_w = w - kSsimWindow + 1;
    double total = 0.0;
    for (int channel = 0; channel < 3; ++channel) {
        std::vector<double> pa((size_t)h * w), pb((size_t)h * w), paa((size_t)h * w),
            pbb((size_t)h * w), pab((size_t)h * w);
        for (int i = 0; i < h * w; ++i) {
            const double va = a.data[(size_t)i * 3 + channel];
            const double vb = b.data[(size_t)i * 3 + channel];
            pa[i] = va;
            pb[i] = vb;
            paa[i] = va * va;
            pbb[i] = vb * vb;
            pab[i] = va * vb;
        }
        auto mu_a = windowed_mean(pa, h, w);
        auto mu_b = windowed_mean(pb, h, w);
        auto e_aa = windowed_mean(paa, h, w);
        auto e_bb = windowed_mean(pbb, h, w);
        auto e_ab = windowed_mean(pab, h, w);

        double acc = 0.0;
        for (size_t i = 0; i < mu_a.size(); ++i) {
            const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
            const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
            const double cov = e_ab[i] - mu_a[i] * mu_b[i];
            const double num = (2.0 * mu_a[i] * mu_b[i] + kSsimC1) * (2.0 * cov + kSsimC2);
            const double den =
                (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kSsimC1) * (var_a + var_b + kSsimC2);
            acc += num / den;
        }
        total += acc / (double)((size_t)out_h * out_w);
    }
    return total / 3.0;
}

}  // namespace splitgs
