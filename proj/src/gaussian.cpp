#include "splitgs/gaussian.hpp"

#include <cmath>
#include <stdexcept>

#include "splitgs/nn.hpp"

namespace splitgs {

std::vector<LayerScale> default_layer_schedule(int layers, double scene_extent) {
    std::vector<LayerScale> out;
    out.reserve(layers + 1);
    double decay = 1.0;
    for (int i = 0; i <= layers; ++i) {
        LayerScale s;
        s.layer = i;
        s.opacity_cap = 0.8 * decay;
        s.scale_cap = 0.05 * scene_extent * decay;
        s.position_offset_cap = 0.1 * scene_extent * decay;
        out.push_back(s);
        decay *= 0.5;
    }
    return out;
}

GaussianSet activate(const RawGaussianParams& raw, const TensorPtr& parent_positions,
                     const LayerScale& scale) {
    const int64_t n = raw.position_delta->rows();
    if (parent_positions->rows() != n) {
        throw std::invalid_argument("activate: parent position count mismatch");
    }
    check_finite(raw.position_delta->values, "activate");
    check_finite(raw.rotation_logits->values, "activate");
    check_finite(raw.scale_logits->values, "activate");
    check_finite(raw.opacity_logits->values, "activate");
    check_finite(raw.color_logits->values, "activate");

    GaussianSet g;
    g.positions = add(parent_positions,
                      mul(scalar_tensor(scale.position_offset_cap), tanh(raw.position_delta)));
    g.opacities = mul(scalar_tensor(scale.opacity_cap), sigmoid(raw.opacity_logits));
    g.scales = add(mul(scalar_tensor(scale.scale_cap), sigmoid(raw.scale_logits)),
                   scalar_tensor(kScaleFloor));
    g.colors = sigmoid(raw.color_logits);

    // identity bias keeps zero logits on a valid rotation
    std::vector<double> bias((size_t)n * 4, 0.0);
    for (int64_t i = 0; i < n; ++i) bias[i * 4] = 1.0;
    auto q = add(raw.rotation_logits, make_tensor({n, 4}, std::move(bias)));
    auto norm = sqrt(matmul(mul(q, q), constant({4, 1}, 1.0)));  // [N,1] row norms
    g.rotations = div(q, matmul(norm, constant({1, 4}, 1.0)));
    return g;
}

void quat_to_rotmat(const double q[4], double r[9]) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    r[0] = 1.0 - 2.0 * (y * y + z * z);
    r[1] = 2.0 * (x * y - w * z);
    r[2] = 2.0 * (x * z + w * y);
    r[3] = 2.0 * (x * y + w * z);
    r[4] = 1.0 - 2.0 * (x * x + z * z);
    r[5] = 2.0 * (y * z - w * x);
    r[6] = 2.0 * (x * z - w * y);
    r[7] = 2.0 * (y * z + w * x);
    r[8] = 1.0 - 2.0 * (x * x + y * y);
}

std::array<double, 9> covariance(const std::array<double, 4>& quaternion,
                                 const std::array<double, 3>& scale) {
    const double norm = std::sqrt(quaternion[0] * quaternion[0] + quaternion[1] * quaternion[1] +
                                  quaternion[2] * quaternion[2] + quaternion[3] * quaternion[3]);
    if (std::fabs(norm - 1.0) > 1e-6) {
        throw std::invalid_argument("covariance: quaternion is not unit");
    }
    for (double s : scale) {
        if (!(s > 0.0)) throw std::invalid_argument("covariance: scales must be positive");
    }
    double r[9];
    quat_to_rotmat(quaternion.data(), r);
    const double d[3] = {scale[0] * scale[0], scale[1] * scale[1], scale[2] * scale[2]};
    std::array<double, 9> sigma{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += r[i * 3 + k] * d[k] * r[j * 3 + k];
            sigma[i * 3 + j] = acc;
        }
    }
    return sigma;
}

GaussianSet concat(const std::vector<GaussianSet>& sets) {
    if (sets.empty()) throw std::invalid_argument("concat: no sets");
    if (sets.size() == 1) return sets[0];
    std::vector<TensorPtr> pos, rot, scl, opa, col;
    for (const auto& s : sets) {
        pos.push_back(s.positions);
        rot.push_back(s.rotations);
        scl.push_back(s.scales);
        opa.push_back(s.opacities);
        col.push_back(s.colors);
    }
    GaussianSet out;
    out.positions = concat_rows(pos);
    out.rotations = concat_rows(rot);
    out.scales = concat_rows(scl);
    out.opacities = concat_rows(opa);
    out.colors = concat_rows(col);
    return out;
}

GaussianValues snapshot(const GaussianSet& set) {
    GaussianValues v;
    v.n = set.size();
    v.positions = set.positions->values;
    v.rotations = set.rotations->values;
    v.scales = set.scales->values;
    v.opacities = set.opacities->values;
    v.colors = set.colors->values;
    return v;
}

GaussianSet from_values(const GaussianValues& v, bool requires_grad) {
    GaussianSet g;
    auto mk = [&](const std::vector<double>& data, int64_t d) {
        return make_tensor({v.n, d}, data, requires_grad);
    };
    g.positions = mk(v.positions, 3);
    g.rotations = mk(v.rotations, 4);
    g.scales = mk(v.scales, 3);
    g.opacities = mk(v.opacities, 1);
    g.colors = mk(v.colors, 3);
    return g;
}

void validate(const GaussianSet& set) {
    const int64_t n = set.size();
    for (int64_t i = 0; i < n; ++i) {
        const double* q = set.rotations->values.data() + i * 4;
        const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        if (std::fabs(norm - 1.0) > 1e-9) {
            throw std::runtime_error("gaussian: quaternion not unit after activation");
        }
        for (int c = 0; c < 3; ++c) {
            if (!(set.scales->values[i * 3 + c] > 0.0)) {
                throw std::runtime_error("gaussian: non-positive scale");
            }
            const double col = set.colors->values[i * 3 + c];
            if (col < 0.0 || col > 1.0) throw std::runtime_error("gaussian: color out of range");
        }
        const double o = set.opacities->values[i];
        if (o < 0.0 || o > 1.0) throw std::runtime_error("gaussian: opacity out of range");
    }
}

}  // namespace splitgs
