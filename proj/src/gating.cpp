#include "splitgs/gating.hpp"

#include <stdexcept>

namespace splitgs {

LayerMask init_mask(int64_t n) {
    if (n < 0) throw std::invalid_argument("init_mask: negative size");
    LayerMask m;
    m.logical.assign((size_t)n, 1);
    m.composite = constant({n, 1}, 1.0);
    m.soft = nullptr;
    return m;
}

TensorPtr quantize(const TensorPtr& x) {
    check_finite(x->values, "quantize");
    std::vector<double> hard(x->numel());
    for (size_t i = 0; i < hard.size(); ++i) hard[i] = x->values[i] > 0.5 ? 1.0 : 0.0;
    return custom_grad(make_tensor(x->shape, std::move(hard)), x);
}

TensorPtr mask_predict(const TensorPtr& child_features, const MlpParams& params,
                       double slope) {
    return sigmoid(mlp_forward(child_features, params, slope));
}

LayerMask propagate_mask(const LayerMask& parent, const TensorPtr& m_next, int64_t k) {
    const int64_t n_children = m_next->rows();
    if (n_children != k * parent.size()) {
        throw std::invalid_argument("propagate_mask: child count != k * parent count");
    }

    // copy-major duplication of the parent composite; gradient fans back in
    std::vector<int64_t> idx((size_t)n_children);
    for (int64_t m = 0; m < k; ++m) {
        for (int64_t j = 0; j < parent.size(); ++j) idx[m * parent.size() + j] = j;
    }
    auto parent_dup = gather_rows(parent.composite, idx);

    LayerMask out;
    out.soft = m_next;
    out.logical.resize((size_t)n_children);
    std::vector<double> logical_vals((size_t)n_children);
    for (int64_t i = 0; i < n_children; ++i) {
        const bool child_on = m_next->values[i] > 0.5;
        const bool parent_on = parent.logical[idx[i]] != 0;
        out.logical[i] = (child_on && parent_on) ? 1 : 0;
        logical_vals[i] = out.logical[i];
    }

    auto surrogate = mul(m_next, parent_dup);
    out.composite = custom_grad(make_tensor({n_children, 1}, std::move(logical_vals)),
                                surrogate);
    return out;
}

int64_t active_count(const LayerMask& mask) {
    int64_t n = 0;
    for (uint8_t b : mask.logical) n += b;
    return n;
}

}  // namespace splitgs
