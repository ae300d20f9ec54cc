#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "splitgs/gating.hpp"
#include "splitgs/gaussian.hpp"
#include "splitgs/mesh.hpp"
#include "splitgs/nn.hpp"
#include "splitgs/tensor.hpp"

namespace splitgs {

constexpr int64_t kAttributeDim = 14;  // 3 pos + 4 rot + 3 scale + 1 opacity + 3 color

struct GatHeadParams {
    TensorPtr w;      // [F, F/heads]
    TensorPtr a_src;  // [F/heads, 1] first half of the attention vector
    TensorPtr a_dst;  // [F/heads, 1] second half
};

struct GatParams {
    std::vector<GatHeadParams> heads;
    TensorPtr w_mix;  // [F, F] applied after head concatenation
    TensorPtr b_mix;  // [1, F]
};

/// Per-split-layer weight block: attention, attribute decoder, mask head.
struct SplitLayerParams {
    GatParams gat;
    MlpParams decoder;   // F -> F -> 14
    MlpParams mask_net;  // F -> 64 -> 1
};

struct GsnConfig {
    int64_t feature_dim = 256;
    int64_t heads = 4;
    int64_t mask_hidden = 64;
    int64_t k = 2;
    int layers = 3;
    bool share_params = false;  // one SplitLayerParams reused on every step
    double leaky_slope = 0.2;
    uint64_t seed = 0;

    int64_t head_dim() const { return feature_dim / heads; }
};

struct GsnParams {
    GsnConfig cfg;
    MlpParams embed;  // 14 -> F -> F
    std::vector<SplitLayerParams> layers;  // size L, or 1 when shared

    const SplitLayerParams& layer(int i) const {
        return layers[cfg.share_params ? 0 : (size_t)i];
    }
    std::vector<std::pair<std::string, TensorPtr>> named() const;
};

GsnParams init_gsn_params(const GsnConfig& cfg, std::mt19937_64& rng);

/// F_0 = E(G_0): 14-dim attribute rows through the embedding MLP.
TensorPtr embed(const GaussianSet& g, const MlpParams& params, double slope);

/// Copy-major row duplication: output row m*N+j equals input row j.
TensorPtr duplicate_rows(const TensorPtr& f, int64_t k);

/// Multi-head graph attention: per-head softmax-normalized neighbor
/// aggregation, heads concatenated then linearly mixed. Self-loops must be
/// present so every vertex has a nonempty incoming segment.
/// When `attention_out` is non-null the per-head attention tensors are
/// appended to it (used by tests).
TensorPtr gat_layer(const TensorPtr& f, const Adjacency& adj, const GatParams& params,
                    double slope, std::vector<TensorPtr>* attention_out = nullptr);

struct LayerState {
    GaussianSet gaussians;
    TensorPtr features;  // [N_i, F]
    LayerMask mask;
};

/// One autoregressive splitting step: duplicate features, propagate through
/// attention on the next layer's topology, residual add, decode attributes,
/// activate against duplicated parent positions, update the mask.
LayerState split_layer(const LayerState& state, const Adjacency& adj_next, int64_t k,
                       const LayerScale& scale, const SplitLayerParams& params,
                       double slope);

/// Runs L splitting steps from G_0, returning layers 0..L (with masks).
/// Layer i+1 uses the extension of `base` at layer i+1.
std::vector<LayerState> run_autoregressive(const GaussianSet& g0, const MeshGraph& base,
                                           const GsnParams& params,
                                           const std::vector<LayerScale>& schedule,
                                           int64_t vertex_cap = kDefaultVertexCap);

/// Same, with precomputed adjacencies (index i holds the layer i+1 topology).
std::vector<LayerState> run_autoregressive(const GaussianSet& g0,
                                           const std::vector<Adjacency>& adjacencies,
                                           const GsnParams& params,
                                           const std::vector<LayerScale>& schedule);

}  // namespace splitgs
