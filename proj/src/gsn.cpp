#include "splitgs/gsn.hpp"

#include <stdexcept>

namespace splitgs {

std::vector<std::pair<std::string, TensorPtr>> GsnParams::named() const {
    std::vector<std::pair<std::string, TensorPtr>> out = embed.named("gsn.embed");
    for (size_t li = 0; li < layers.size(); ++li) {
        const std::string p = "gsn.layer" + std::to_string(li);
        const SplitLayerParams& lp = layers[li];
        for (size_t h = 0; h < lp.gat.heads.size(); ++h) {
            const std::string hp = p + ".gat.head" + std::to_string(h);
            out.emplace_back(hp + ".w", lp.gat.heads[h].w);
            out.emplace_back(hp + ".a_src", lp.gat.heads[h].a_src);
            out.emplace_back(hp + ".a_dst", lp.gat.heads[h].a_dst);
        }
        out.emplace_back(p + ".gat.w_mix", lp.gat.w_mix);
        out.emplace_back(p + ".gat.b_mix", lp.gat.b_mix);
        for (auto& kv : lp.decoder.named(p + ".decoder")) out.push_back(kv);
        for (auto& kv : lp.mask_net.named(p + ".mask")) out.push_back(kv);
    }
    return out;
}

GsnParams init_gsn_params(const GsnConfig& cfg, std::mt19937_64& rng) {
    if (cfg.feature_dim % cfg.heads != 0) {
        throw std::invalid_argument("gsn: feature_dim must be divisible by heads");
    }
    GsnParams p;
    p.cfg = cfg;
    p.embed = init_mlp(kAttributeDim, cfg.feature_dim, cfg.feature_dim, rng);

    const size_t blocks = cfg.share_params ? 1 : (size_t)cfg.layers;
    for (size_t li = 0; li < blocks; ++li) {
        SplitLayerParams lp;
        for (int64_t h = 0; h < cfg.heads; ++h) {
            GatHeadParams hp;
            hp.w = uniform_param(cfg.feature_dim, cfg.head_dim(), rng);
            hp.a_src = uniform_param(cfg.head_dim(), 1, rng);
            hp.a_dst = uniform_param(cfg.head_dim(), 1, rng);
            lp.gat.heads.push_back(hp);
        }
        lp.gat.w_mix = uniform_param(cfg.feature_dim, cfg.feature_dim, rng);
        lp.gat.b_mix = zeros_param(1, cfg.feature_dim);
        lp.decoder = init_mlp(cfg.feature_dim, cfg.feature_dim, kAttributeDim, rng);
        // positive bias keeps fresh gates open; q(0.5) is strictly 0
        lp.mask_net = init_mlp(cfg.feature_dim, cfg.mask_hidden, 1, rng, 2.0);
        p.layers.push_back(lp);
    }
    return p;
}

TensorPtr embed(const GaussianSet& g, const MlpParams& params, double slope) {
    auto attrs = concat_cols({g.positions, g.rotations, g.scales, g.opacities, g.colors});
    return mlp_forward(attrs, params, slope);
}

TensorPtr duplicate_rows(const TensorPtr& f, int64_t k) {
    if (k < 1) throw std::invalid_argument("duplicate_rows: k must be >= 1");
    if (k == 1) return f;
    const int64_t n = f->rows();
    std::vector<int64_t> idx((size_t)(n * k));
    for (int64_t m = 0; m < k; ++m) {
        for (int64_t j = 0; j < n; ++j) idx[m * n + j] = j;
    }
    return gather_rows(f, idx);
}

TensorPtr gat_layer(const TensorPtr& f, const Adjacency& adj, const GatParams& params,
                    double slope, std::vector<TensorPtr>* attention_out) {
    const int64_t n = f->rows();
    if (adj.n_vertices != n) {
        throw std::invalid_argument("gat_layer: feature rows differ from vertex count");
    }
    // sorted-by-dst adjacency makes missing self-loops easy to detect
    {
        int64_t expect = 0;
        for (size_t i = 0; i < adj.size() && expect < n; ++i) {
            if (adj.dst[i] == expect) ++expect;
            else if (adj.dst[i] > expect) break;
        }
        if (expect != n) {
            throw std::invalid_argument("gat_layer: vertex without incoming edge (missing self-loop)");
        }
    }

    std::vector<TensorPtr> head_outputs;
    head_outputs.reserve(params.heads.size());
    const auto ones_head = constant({1, params.heads.empty() ? 1 : params.heads[0].w->cols()}, 1.0);
    for (const auto& head : params.heads) {
        auto projected = matmul(f, head.w);                   // [N, Hd]
        auto score_src = matmul(projected, head.a_src);       // [N, 1]
        auto score_dst = matmul(projected, head.a_dst);       // [N, 1]
        auto edge_logits = leaky_relu(
            add(gather_rows(score_src, adj.src), gather_rows(score_dst, adj.dst)), slope);
        auto attention = segment_softmax(edge_logits, adj.dst);  // [E, 1]
        if (attention_out) attention_out->push_back(attention);
        auto messages = mul(gather_rows(projected, adj.src), matmul(attention, ones_head));
        head_outputs.push_back(scatter_rows(messages, adj.dst, n));
    }
    auto mixed = matmul(concat_cols(head_outputs), params.w_mix);
    return add(mixed, repeat_row(params.b_mix, n));
}

LayerState split_layer(const LayerState& state, const Adjacency& adj_next, int64_t k,
                       const LayerScale& scale, const SplitLayerParams& params,
                       double slope) {
    auto f_dup = duplicate_rows(state.features, k);
    if (adj_next.n_vertices != f_dup->rows()) {
        throw std::invalid_argument("split_layer: topology size differs from duplicated features");
    }
    auto propagated = gat_layer(f_dup, adj_next, params.gat, slope);
    auto f_next = add(propagated, f_dup);  // residual

    auto raw_logits = mlp_forward(f_next, params.decoder, slope);  // [kN, 14]
    RawGaussianParams raw;
    raw.position_delta = slice_cols(raw_logits, 0, 3);
    raw.rotation_logits = slice_cols(raw_logits, 3, 7);
    raw.scale_logits = slice_cols(raw_logits, 7, 10);
    raw.opacity_logits = slice_cols(raw_logits, 10, 11);
    raw.color_logits = slice_cols(raw_logits, 11, 14);

    LayerState next;
    next.gaussians = activate(raw, duplicate_rows(state.gaussians.positions, k), scale);
    next.features = f_next;
    next.mask = propagate_mask(state.mask, mask_predict(f_next, params.mask_net, slope), k);
    return next;
}

std::vector<LayerState> run_autoregressive(const GaussianSet& g0,
                                           const std::vector<Adjacency>& adjacencies,
                                           const GsnParams& params,
                                           const std::vector<LayerScale>& schedule) {
    const int L = params.cfg.layers;
    if ((int)adjacencies.size() < L) {
        throw std::invalid_argument("run_autoregressive: missing adjacencies");
    }
    if ((int)schedule.size() < L + 1) {
        throw std::invalid_argument("run_autoregressive: schedule too short");
    }

    std::vector<LayerState> states;
    states.reserve(L + 1);
    LayerState s0;
    s0.gaussians = g0;
    s0.features = embed(g0, params.embed, params.cfg.leaky_slope);
    s0.mask = init_mask(g0.size());
    states.push_back(s0);

    for (int i = 0; i < L; ++i) {
        states.push_back(split_layer(states.back(), adjacencies[i], params.cfg.k,
                                     schedule[i + 1], params.layer(i),
                                     params.cfg.leaky_slope));
    }
    return states;
}

std::vector<LayerState> run_autoregressive(const GaussianSet& g0, const MeshGraph& base,
                                           const GsnParams& params,
                                           const std::vector<LayerScale>& schedule,
                                           int64_t vertex_cap) {
    std::vector<Adjacency> adjacencies;
    adjacencies.reserve(params.cfg.layers);
    for (int i = 1; i <= params.cfg.layers; ++i) {
        adjacencies.push_back(to_adjacency(extend(base, params.cfg.k, i, vertex_cap)));
    }
    return run_autoregressive(g0, adjacencies, params, schedule);
}

}  // namespace splitgs
