#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace splitgs {

/// Undirected simple graph of a base mesh. Edges are kept canonical:
/// u < v, sorted lexicographically, deduplicated, no self-loops.
struct MeshGraph {
    int64_t vertex_count = 0;
    std::vector<std::pair<int64_t, int64_t>> edges;
    std::vector<std::array<double, 3>> positions;  // empty when absent

    bool has_positions() const { return !positions.empty(); }

    /// Canonicalizes raw edge pairs (also validating endpoints).
    static MeshGraph from_edges(int64_t vertex_count,
                                std::vector<std::pair<int64_t, int64_t>> raw_edges,
                                std::vector<std::array<double, 3>> positions = {});
};

/// Wavefront-style reader: `v` and `f` lines, slash-separated face entries,
/// 1-based (or negative-relative) indices. Edges come from face boundaries.
MeshGraph parse_obj(std::istream& in);
MeshGraph load_obj(const std::string& path);

constexpr int64_t kDefaultVertexCap = int64_t{1} << 20;

/// Layer-i extension of a base graph: k^i disjoint copies of the base edges
/// plus, for every original vertex, a clique over its k^i replicas.
struct LayerTopology {
    int layer = 0;
    int64_t k = 1;
    int64_t copies = 1;  // k^layer
    MeshGraph base;
    MeshGraph extended;

    // copy-major placement: copy m of original vertex j
    int64_t vertex_index(int64_t j, int64_t m) const;
    std::pair<int64_t, int64_t> vertex_of(int64_t extended_index) const;  // (j, m)
};

LayerTopology extend(const MeshGraph& base, int64_t k, int layer,
                     int64_t vertex_cap = kDefaultVertexCap);

// closed-form counts the construction must satisfy
int64_t topo_edge_count(const MeshGraph& base, int64_t k, int layer);
int64_t conn_edge_count(const MeshGraph& base, int64_t k, int layer);

/// Directed edge arrays for attention: every undirected edge both ways plus
/// one self-loop per vertex, sorted by (dst, src).
struct Adjacency {
    int64_t n_vertices = 0;
    std::vector<int64_t> src;
    std::vector<int64_t> dst;

    size_t size() const { return src.size(); }
};

Adjacency to_adjacency(const MeshGraph& g);
Adjacency to_adjacency(const LayerTopology& topo);

}  // namespace splitgs
