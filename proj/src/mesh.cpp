#include "splitgs/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace splitgs {

MeshGraph MeshGraph::from_edges(int64_t vertex_count,
                                std::vector<std::pair<int64_t, int64_t>> raw_edges,
                                std::vector<std::array<double, 3>> positions) {
    if (vertex_count < 0) throw std::invalid_argument("mesh: negative vertex count");
    if (!positions.empty() && (int64_t)positions.size() != vertex_count) {
        throw std::invalid_argument("mesh: position count differs from vertex count");
    }
    MeshGraph g;
    g.vertex_count = vertex_count;
    g.positions = std::move(positions);
    g.edges.reserve(raw_edges.size());
    for (auto [u, v] : raw_edges) {
        if (u < 0 || v < 0 || u >= vertex_count || v >= vertex_count) {
            throw std::invalid_argument("mesh: edge endpoint out of range");
        }
        if (u == v) continue;  // drop degenerate boundary edges
        g.edges.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    return g;
}

MeshGraph parse_obj(std::istream& in) {
    std::vector<std::array<double, 3>> positions;
    std::vector<std::vector<int64_t>> faces;

    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            std::array<double, 3> p{};
            if (!(ss >> p[0] >> p[1] >> p[2])) {
                throw std::runtime_error("obj: malformed vertex at line " +
                                         std::to_string(line_no));
            }
            positions.push_back(p);
        } else if (tag == "f") {
            std::vector<int64_t> face;
            std::string item;
            while (ss >> item) {
                // take the position index before any '/'
                const size_t slash = item.find('/');
                const std::string head = slash == std::string::npos ? item : item.substr(0, slash);
                int64_t idx;
                try {
                    idx = std::stoll(head);
                } catch (...) {
                    throw std::runtime_error("obj: malformed face index at line " +
                                             std::to_string(line_no));
                }
                if (idx < 0) idx = (int64_t)positions.size() + idx;  // relative indexing
                else idx -= 1;                                       // 1-based
                if (idx < 0 || idx >= (int64_t)positions.size()) {
                    throw std::runtime_error("obj: face index out of range at line " +
                                             std::to_string(line_no));
                }
                face.push_back(idx);
            }
            if (face.size() < 3) {
                throw std::runtime_error("obj: face with fewer than 3 vertices at line " +
                                         std::to_string(line_no));
            }
            faces.push_back(std::move(face));
        }
        // every other tag (vn, vt, usemtl, comments, ...) is ignored
    }

    if (positions.empty()) throw std::runtime_error("obj: no vertices");

    std::vector<std::pair<int64_t, int64_t>> edges;
    for (const auto& face : faces) {
        for (size_t i = 0; i < face.size(); ++i) {
            edges.emplace_back(face[i], face[(i + 1) % face.size()]);
        }
    }
    const int64_t n_vertices = (int64_t)positions.size();
    return MeshGraph::from_edges(n_vertices, std::move(edges), std::move(positions));
}

MeshGraph load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("obj: cannot open " + path);
    return parse_obj(in);
}

int64_t LayerTopology::vertex_index(int64_t j, int64_t m) const {
    if (j < 0 || j >= base.vertex_count || m < 0 || m >= copies) {
        throw std::invalid_argument("vertex_index: out of range");
    }
    return m * base.vertex_count + j;
}

std::pair<int64_t, int64_t> LayerTopology::vertex_of(int64_t extended_index) const {
    if (extended_index < 0 || extended_index >= extended.vertex_count) {
        throw std::invalid_argument("vertex_of: out of range");
    }
    return {extended_index % base.vertex_count, extended_index / base.vertex_count};
}

namespace {

int64_t checked_pow(int64_t k, int layer, int64_t base_vertices, int64_t cap) {
    int64_t copies = 1;
    for (int i = 0; i < layer; ++i) {
        if (copies > cap / k) throw std::runtime_error("extend: vertex cap exceeded");
        copies *= k;
    }
    if (base_vertices > 0 && copies > cap / base_vertices) {
        throw std::runtime_error("extend: vertex cap exceeded");
    }
    return copies;
}

}  // namespace

int64_t topo_edge_count(const MeshGraph& base, int64_t k, int layer) {
    int64_t copies = 1;
    for (int i = 0; i < layer; ++i) copies *= k;
    return copies * (int64_t)base.edges.size();
}

int64_t conn_edge_count(const MeshGraph& base, int64_t k, int layer) {
    int64_t copies = 1;
    for (int i = 0; i < layer; ++i) copies *= k;
    return base.vertex_count * copies * (copies - 1) / 2;
}

LayerTopology extend(const MeshGraph& base, int64_t k, int layer, int64_t vertex_cap) {
    if (k < 1) throw std::invalid_argument("extend: k must be >= 1");
    if (layer < 0) throw std::invalid_argument("extend: layer must be >= 0");
    const int64_t v0 = base.vertex_count;
    const int64_t copies = checked_pow(k, layer, v0, vertex_cap);

    LayerTopology topo;
    topo.layer = layer;
    topo.k = k;
    topo.copies = copies;
    topo.base = base;

    std::vector<std::pair<int64_t, int64_t>> edges;
    edges.reserve((size_t)(topo_edge_count(base, k, layer) + conn_edge_count(base, k, layer)));
    // topological inheritance: the base edge set inside every copy
    for (int64_t m = 0; m < copies; ++m) {
        const int64_t off = m * v0;
        for (auto [u, v] : base.edges) edges.emplace_back(off + u, off + v);
    }
    // internal connection: a clique over all replicas of each original vertex
    for (int64_t j = 0; j < v0; ++j) {
        for (int64_t m1 = 0; m1 < copies; ++m1) {
            for (int64_t m2 = m1 + 1; m2 < copies; ++m2) {
                edges.emplace_back(m1 * v0 + j, m2 * v0 + j);
            }
        }
    }
    topo.extended = MeshGraph::from_edges(v0 * copies, std::move(edges));
    return topo;
}

Adjacency to_adjacency(const MeshGraph& g) {
    Adjacency adj;
    adj.n_vertices = g.vertex_count;
    const size_t n = 2 * g.edges.size() + (size_t)g.vertex_count;
    std::vector<std::pair<int64_t, int64_t>> entries;  // (dst, src)
    entries.reserve(n);
    for (auto [u, v] : g.edges) {
        entries.emplace_back(v, u);
        entries.emplace_back(u, v);
    }
    for (int64_t v = 0; v < g.vertex_count; ++v) entries.emplace_back(v, v);
    std::sort(entries.begin(), entries.end());
    adj.src.reserve(n);
    adj.dst.reserve(n);
    for (auto [d, s] : entries) {
        adj.dst.push_back(d);
        adj.src.push_back(s);
    }
    return adj;
}

Adjacency to_adjacency(const LayerTopology& topo) { return to_adjacency(topo.extended); }

}  // namespace splitgs
