#pragma once

#include <cstdint>
#include <vector>

#include "splitgs/nn.hpp"
#include "splitgs/tensor.hpp"

namespace splitgs {

/// Per-layer Gaussian mask. `logical` is the binary keep/drop decision;
/// `composite` carries the same forward values but routes gradients through
/// the soft-mask surrogate product (straight-through).
struct LayerMask {
    TensorPtr soft;                 // [N,1] mask-net output; null at layer 0
    std::vector<uint8_t> logical;   // N binary values
    TensorPtr composite;            // [N,1], forward(composite) == logical

    int64_t size() const { return (int64_t)logical.size(); }
};

/// All-ones mask with no gradient path (layer 0 is never gated).
LayerMask init_mask(int64_t n);

/// Hard threshold x > 0.5 with straight-through identity gradient.
TensorPtr quantize(const TensorPtr& x);

/// Soft mask head: 2-layer MLP to one sigmoid unit per child Gaussian.
TensorPtr mask_predict(const TensorPtr& child_features, const MlpParams& params,
                       double slope);

/// Duplicates the parent mask k times (copy-major), ANDs with the quantized
/// child mask, and wires the STE composite soft*parent + sg(logical - soft*parent).
LayerMask propagate_mask(const LayerMask& parent, const TensorPtr& m_next, int64_t k);

int64_t active_count(const LayerMask& mask);

}  // namespace splitgs
