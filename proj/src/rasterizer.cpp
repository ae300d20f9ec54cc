#include "splitgs/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace splitgs {

namespace {

std::array<double, 3> cross(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

std::array<double, 3> normalized(const std::array<double, 3>& v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (n == 0.0) throw std::invalid_argument("camera: degenerate direction");
    return {v[0] / n, v[1] / n, v[2] / n};
}

}  // namespace

Camera Camera::look_at(const std::array<double, 3>& position,
                       const std::array<double, 3>& target, const std::array<double, 3>& up,
                       double fx, double fy, int width, int height, double near, Mode mode) {
    const auto forward = normalized(
        {target[0] - position[0], target[1] - position[1], target[2] - position[2]});
    const auto right = normalized(cross(forward, up));
    const auto down = cross(forward, right);  // image y grows downward

    Camera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.width = width;
    cam.height = height;
    cam.near = near;
    cam.mode = mode;
    cam.rotation = {right[0], right[1], right[2], down[0], down[1], down[2],
                    forward[0], forward[1], forward[2]};
    for (int r = 0; r < 3; ++r) {
        cam.translation[r] = -(cam.rotation[r * 3 + 0] * position[0] +
                               cam.rotation[r * 3 + 1] * position[1] +
                               cam.rotation[r * 3 + 2] * position[2]);
    }
    return cam;
}

std::vector<ProjectedSplat> project(const GaussianValues& g, const Camera& cam,
                                    const std::vector<uint8_t>* mask) {
    std::vector<ProjectedSplat> out;
    out.reserve((size_t)g.n);
    const auto& w = cam.rotation;

    for (int64_t i = 0; i < g.n; ++i) {
        if (mask && !(*mask)[i]) continue;
        const double* p = g.positions.data() + i * 3;
        double view[3];
        for (int r = 0; r < 3; ++r) {
            view[r] = w[r * 3 + 0] * p[0] + w[r * 3 + 1] * p[1] + w[r * 3 + 2] * p[2] +
                      cam.translation[r];
        }
        const double z = view[2];
        if (z <= cam.near) continue;

        ProjectedSplat s;
        s.view[0] = view[0];
        s.view[1] = view[1];
        s.view[2] = view[2];
        s.depth = z;
        s.source_index = i;

        // projection Jacobian rows (J00 J01 J02 / J10 J11 J12)
        double j00, j02, j11, j12;
        if (cam.mode == Camera::Mode::perspective) {
            s.mean2d[0] = cam.fx * view[0] / z + cam.cx;
            s.mean2d[1] = cam.fy * view[1] / z + cam.cy;
            j00 = cam.fx / z;
            j02 = -cam.fx * view[0] / (z * z);
            j11 = cam.fy / z;
            j12 = -cam.fy * view[1] / (z * z);
        } else {
            s.mean2d[0] = cam.fx * view[0] + cam.cx;
            s.mean2d[1] = cam.fy * view[1] + cam.cy;
            j00 = cam.fx;
            j02 = 0.0;
            j11 = cam.fy;
            j12 = 0.0;
        }

        double r[9];
        quat_to_rotmat(g.rotations.data() + i * 4, r);
        const double* sc = g.scales.data() + i * 3;
        const double d2[3] = {sc[0] * sc[0], sc[1] * sc[1], sc[2] * sc[2]};
        double sigma[9];
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                sigma[a * 3 + b] = r[a * 3 + 0] * d2[0] * r[b * 3 + 0] +
                                   r[a * 3 + 1] * d2[1] * r[b * 3 + 1] +
                                   r[a * 3 + 2] * d2[2] * r[b * 3 + 2];
            }
        }

        // M = J * W (2x3); cov2d = M Sigma M^T + dilation I
        double m[6];
        for (int c = 0; c < 3; ++c) {
            m[c] = j00 * w[c] + j02 * w[6 + c];
            m[3 + c] = j11 * w[3 + c] + j12 * w[6 + c];
        }
        double ms[6];  // M * Sigma
        for (int rr = 0; rr < 2; ++rr) {
            for (int c = 0; c < 3; ++c) {
                ms[rr * 3 + c] = m[rr * 3 + 0] * sigma[c] + m[rr * 3 + 1] * sigma[3 + c] +
                                 m[rr * 3 + 2] * sigma[6 + c];
            }
        }
        const double cov_a = ms[0] * m[0] + ms[1] * m[1] + ms[2] * m[2] + kCovDilation;
        const double cov_b = ms[0] * m[3] + ms[1] * m[4] + ms[2] * m[5];
        const double cov_c = ms[3] * m[3] + ms[4] * m[4] + ms[5] * m[5] + kCovDilation;
        s.cov2d[0] = cov_a;
        s.cov2d[1] = cov_b;
        s.cov2d[2] = cov_c;

        const double det = cov_a * cov_c - cov_b * cov_b;
        if (det <= 0.0) throw std::runtime_error("project: singular 2-D covariance");
        s.inv2d[0] = cov_c / det;
        s.inv2d[1] = -cov_b / det;
        s.inv2d[2] = cov_a / det;

        const double mid = 0.5 * (cov_a + cov_c);
        const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
        s.radius = kRadiusSigmas * std::sqrt(lambda_max);

        s.alpha = g.opacities[i];
        for (int c = 0; c < 3; ++c) s.color[c] = g.colors[i * 3 + c];
        out.push_back(s);
    }
    return out;
}

std::array<double, 3> composite_pixel(const std::vector<ProjectedSplat>& sorted, double px,
                                      double py) {
    std::array<double, 3> color{0.0, 0.0, 0.0};
    double transmittance = 1.0;
    for (const auto& s : sorted) {
        const double dx = px - s.mean2d[0];
        const double dy = py - s.mean2d[1];
        if (std::fabs(dx) > s.radius || std::fabs(dy) > s.radius) continue;
        const double power =
            -0.5 * (s.inv2d[0] * dx * dx + s.inv2d[2] * dy * dy) - s.inv2d[1] * dx * dy;
        const double alpha = std::min(kAlphaClamp, s.alpha * std::exp(power));
        if (alpha < kAlphaSkip) continue;
        for (int c = 0; c < 3; ++c) color[c] += transmittance * alpha * s.color[c];
        transmittance *= 1.0 - alpha;
        if (transmittance < kTransmittanceStop) break;
    }
    // black background: nothing added for the remaining transmittance
    return color;
}

namespace {

struct RenderContext {
    Camera cam;
    std::vector<ProjectedSplat> splats;       // depth-sorted
    std::vector<std::vector<int32_t>> tiles;  // per tile, indices into splats
    int tiles_x = 0, tiles_y = 0;
};

void sort_by_depth(std::vector<ProjectedSplat>& splats) {
    std::sort(splats.begin(), splats.end(), [](const ProjectedSplat& a, const ProjectedSplat& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.source_index < b.source_index;
    });
}

RenderContext build_context(const GaussianValues& g, const std::vector<uint8_t>& mask,
                            const Camera& cam) {
    if (cam.width <= 0 || cam.height <= 0) {
        throw std::invalid_argument("render: zero-size image");
    }
    if (!mask.empty() && (int64_t)mask.size() != g.n) {
        throw std::invalid_argument("render: mask length differs from Gaussian count");
    }
    RenderContext ctx;
    ctx.cam = cam;
    ctx.splats = project(g, cam, mask.empty() ? nullptr : &mask);
    sort_by_depth(ctx.splats);

    ctx.tiles_x = (cam.width + kTileSize - 1) / kTileSize;
    ctx.tiles_y = (cam.height + kTileSize - 1) / kTileSize;
    ctx.tiles.assign((size_t)ctx.tiles_x * ctx.tiles_y, {});
    // visiting splats in sorted order keeps every tile list depth-sorted
    for (size_t si = 0; si < ctx.splats.size(); ++si) {
        const auto& s = ctx.splats[si];
        const int x0 = std::max(0, (int)std::floor(s.mean2d[0] - s.radius - 0.5));
        const int x1 = std::min(cam.width - 1, (int)std::ceil(s.mean2d[0] + s.radius - 0.5));
        const int y0 = std::max(0, (int)std::floor(s.mean2d[1] - s.radius - 0.5));
        const int y1 = std::min(cam.height - 1, (int)std::ceil(s.mean2d[1] + s.radius - 0.5));
        if (x0 > x1 || y0 > y1) continue;
        for (int ty = y0 / kTileSize; ty <= y1 / kTileSize; ++ty) {
            for (int tx = x0 / kTileSize; tx <= x1 / kTileSize; ++tx) {
                ctx.tiles[(size_t)ty * ctx.tiles_x + tx].push_back((int32_t)si);
            }
        }
    }
    return ctx;
}

Image forward_from_context(const RenderContext& ctx) {
    Image img(ctx.cam.height, ctx.cam.width);
    const int n_tiles = ctx.tiles_x * ctx.tiles_y;
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < n_tiles; ++t) {
        const int tx = t % ctx.tiles_x, ty = t / ctx.tiles_x;
        const auto& list = ctx.tiles[t];
        const int y_end = std::min(ctx.cam.height, (ty + 1) * kTileSize);
        const int x_end = std::min(ctx.cam.width, (tx + 1) * kTileSize);
        for (int y = ty * kTileSize; y < y_end; ++y) {
            const double py = y + 0.5;
            for (int x = tx * kTileSize; x < x_end; ++x) {
                const double px = x + 0.5;
                double color[3] = {0, 0, 0};
                double transmittance = 1.0;
                for (int32_t si : list) {
                    const auto& s = ctx.splats[si];
                    const double dx = px - s.mean2d[0];
                    const double dy = py - s.mean2d[1];
                    if (std::fabs(dx) > s.radius || std::fabs(dy) > s.radius) continue;
                    const double power = -0.5 * (s.inv2d[0] * dx * dx + s.inv2d[2] * dy * dy) -
                                         s.inv2d[1] * dx * dy;
                    const double alpha = std::min(kAlphaClamp, s.alpha * std::exp(power));
                    if (alpha < kAlphaSkip) continue;
                    for (int c = 0; c < 3; ++c) color[c] += transmittance * alpha * s.color[c];
                    transmittance *= 1.0 - alpha;
                    if (transmittance < kTransmittanceStop) break;
                }
                for (int c = 0; c < 3; ++c) {
                    img.at(y, x, c) = std::clamp(color[c], 0.0, 1.0);
                }
            }
        }
    }
    return img;
}

// accumulated 2-D gradients per splat: d mean2d (2), d cov2d packed (3),
// d color (3), d alpha (1)
constexpr int kGrad2dStride = 9;

void backward_from_context(const RenderContext& ctx, const GaussianValues& g,
                           const Image& upstream, RenderGrads& grads) {
    const int chunk_rows = ctx.tiles_y;  // one chunk per tile row, thread-count independent
    const size_t n_splats = ctx.splats.size();
    std::vector<std::vector<double>> chunk_grads(
        (size_t)chunk_rows, std::vector<double>(n_splats * kGrad2dStride, 0.0));

    struct Contribution {
        int32_t splat;
        double alpha;
        double gaussian;  // exp(power)
        double t_before;
    };

#pragma omp parallel for schedule(dynamic)
    for (int ty = 0; ty < ctx.tiles_y; ++ty) {
        double* acc = chunk_grads[ty].data();
        std::vector<Contribution> contribs;
        for (int tx = 0; tx < ctx.tiles_x; ++tx) {
            const auto& list = ctx.tiles[(size_t)ty * ctx.tiles_x + tx];
            if (list.empty()) continue;
            const int y_end = std::min(ctx.cam.height, (ty + 1) * kTileSize);
            const int x_end = std::min(ctx.cam.width, (tx + 1) * kTileSize);
            for (int y = ty * kTileSize; y < y_end; ++y) {
                const double py = y + 0.5;
                for (int x = tx * kTileSize; x < x_end; ++x) {
                    const double gpx[3] = {upstream.at(y, x, 0), upstream.at(y, x, 1),
                                           upstream.at(y, x, 2)};
                    if (gpx[0] == 0.0 && gpx[1] == 0.0 && gpx[2] == 0.0) continue;
                    const double px = x + 0.5;

                    // re-walk the forward pass for this pixel
                    contribs.clear();
                    double transmittance = 1.0;
                    for (int32_t si : list) {
                        const auto& s = ctx.splats[si];
                        const double dx = px - s.mean2d[0];
                        const double dy = py - s.mean2d[1];
                        if (std::fabs(dx) > s.radius || std::fabs(dy) > s.radius) continue;
                        const double power =
                            -0.5 * (s.inv2d[0] * dx * dx + s.inv2d[2] * dy * dy) -
                            s.inv2d[1] * dx * dy;
                        const double gaussian = std::exp(power);
                        const double alpha = std::min(kAlphaClamp, s.alpha * gaussian);
                        if (alpha < kAlphaSkip) continue;
                        contribs.push_back({si, alpha, gaussian, transmittance});
                        transmittance *= 1.0 - alpha;
                        if (transmittance < kTransmittanceStop) break;
                    }

                    // reverse scan with suffix color sums
                    double suffix[3] = {0, 0, 0};
                    for (size_t ci = contribs.size(); ci-- > 0;) {
                        const auto& cb = contribs[ci];
                        const auto& s = ctx.splats[cb.splat];
                        double* a = acc + (size_t)cb.splat * kGrad2dStride;

                        double dalpha = 0.0;
                        for (int c = 0; c < 3; ++c) {
                            dalpha += gpx[c] *
                                      (s.color[c] * cb.t_before - suffix[c] / (1.0 - cb.alpha));
                            a[5 + c] += gpx[c] * cb.alpha * cb.t_before;  // d color
                            suffix[c] += s.color[c] * cb.alpha * cb.t_before;
                        }
                        a[8] += dalpha * cb.gaussian;  // d base opacity (pre-clamp region)
                        if (cb.alpha >= kAlphaClamp) continue;  // clamp is flat

                        const double dpower = dalpha * s.alpha * cb.gaussian;
                        const double dx = px - s.mean2d[0];
                        const double dy = py - s.mean2d[1];
                        const double v0 = s.inv2d[0] * dx + s.inv2d[1] * dy;
                        const double v1 = s.inv2d[1] * dx + s.inv2d[2] * dy;
                        a[0] += dpower * v0;            // d mean2d
                        a[1] += dpower * v1;
                        a[2] += dpower * 0.5 * v0 * v0;  // d cov2d packed
                        a[3] += dpower * v0 * v1;
                        a[4] += dpower * 0.5 * v1 * v1;
                    }
                }
            }
        }
    }

    // merge chunk buffers in fixed order, then chain each splat back to 3-D
    std::vector<double> g2d(n_splats * kGrad2dStride, 0.0);
    for (int c = 0; c < chunk_rows; ++c) {
        const double* src = chunk_grads[c].data();
        for (size_t i = 0; i < g2d.size(); ++i) g2d[i] += src[i];
    }

    const auto& w = ctx.cam.rotation;
#pragma omp parallel for schedule(static)
    for (int64_t si = 0; si < (int64_t)n_splats; ++si) {
        const double* a = g2d.data() + si * kGrad2dStride;
        const auto& s = ctx.splats[si];
        const int64_t src = s.source_index;

        for (int c = 0; c < 3; ++c) grads.colors[src * 3 + c] += a[5 + c];
        grads.opacities[src] += a[8];

        const double dmean[2] = {a[0], a[1]};
        // packed cov gradient -> symmetric matrix form
        const double c2[4] = {a[2], a[3] * 0.5, a[3] * 0.5, a[4]};
        if (dmean[0] == 0.0 && dmean[1] == 0.0 && c2[0] == 0.0 && c2[1] == 0.0 &&
            c2[3] == 0.0) {
            continue;
        }

        // rebuild the projection pieces at this splat
        const double z = s.view[2];
        double j00, j02, j11, j12;
        if (ctx.cam.mode == Camera::Mode::perspective) {
            j00 = ctx.cam.fx / z;
            j02 = -ctx.cam.fx * s.view[0] / (z * z);
            j11 = ctx.cam.fy / z;
            j12 = -ctx.cam.fy * s.view[1] / (z * z);
        } else {
            j00 = ctx.cam.fx;
            j02 = 0.0;
            j11 = ctx.cam.fy;
            j12 = 0.0;
        }
        double m[6];
        for (int c = 0; c < 3; ++c) {
            m[c] = j00 * w[c] + j02 * w[6 + c];
            m[3 + c] = j11 * w[3 + c] + j12 * w[6 + c];
        }

        double r[9];
        quat_to_rotmat(g.rotations.data() + src * 4, r);
        const double* sc = g.scales.data() + src * 3;
        const double d2[3] = {sc[0] * sc[0], sc[1] * sc[1], sc[2] * sc[2]};
        double sigma[9];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                sigma[i * 3 + j] = r[i * 3 + 0] * d2[0] * r[j * 3 + 0] +
                                   r[i * 3 + 1] * d2[1] * r[j * 3 + 1] +
                                   r[i * 3 + 2] * d2[2] * r[j * 3 + 2];
            }
        }

        // dSigma = M^T C2 M
        double c2m[6];  // C2 * M
        for (int c = 0; c < 3; ++c) {
            c2m[c] = c2[0] * m[c] + c2[1] * m[3 + c];
            c2m[3 + c] = c2[2] * m[c] + c2[3] * m[3 + c];
        }
        double dsigma[9];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                dsigma[i * 3 + j] = m[i] * c2m[j] + m[3 + i] * c2m[3 + j];
            }
        }

        // dM = 2 C2 M Sigma
        double msig[6];  // M * Sigma
        for (int rr = 0; rr < 2; ++rr) {
            for (int c = 0; c < 3; ++c) {
                msig[rr * 3 + c] = m[rr * 3 + 0] * sigma[c] + m[rr * 3 + 1] * sigma[3 + c] +
                                   m[rr * 3 + 2] * sigma[6 + c];
            }
        }
        double dm[6];
        for (int c = 0; c < 3; ++c) {
            dm[c] = 2.0 * (c2[0] * msig[c] + c2[1] * msig[3 + c]);
            dm[3 + c] = 2.0 * (c2[2] * msig[c] + c2[3] * msig[3 + c]);
        }

        // dJ = dM W^T (only the four nonzero J entries matter)
        const double dj00 = dm[0] * w[0] + dm[1] * w[1] + dm[2] * w[2];
        const double dj02 = dm[0] * w[6] + dm[1] * w[7] + dm[2] * w[8];
        const double dj11 = dm[3] * w[3] + dm[4] * w[4] + dm[5] * w[5];
        const double dj12 = dm[3] * w[6] + dm[4] * w[7] + dm[5] * w[8];

        // view-space gradient: projection mean path + Jacobian dependence
        double dview[3] = {0, 0, 0};
        if (ctx.cam.mode == Camera::Mode::perspective) {
            dview[0] = j00 * dmean[0];
            dview[1] = j11 * dmean[1];
            dview[2] = j02 * dmean[0] + j12 * dmean[1];
            const double fx = ctx.cam.fx, fy = ctx.cam.fy;
            dview[0] += dj02 * (-fx / (z * z));
            dview[1] += dj12 * (-fy / (z * z));
            dview[2] += dj00 * (-fx / (z * z)) + dj02 * (2.0 * fx * s.view[0] / (z * z * z)) +
                        dj11 * (-fy / (z * z)) + dj12 * (2.0 * fy * s.view[1] / (z * z * z));
        } else {
            dview[0] = j00 * dmean[0];
            dview[1] = j11 * dmean[1];
            dview[2] = 0.0;
        }
        for (int c = 0; c < 3; ++c) {
            grads.positions[src * 3 + c] +=
                w[c] * dview[0] + w[3 + c] * dview[1] + w[6 + c] * dview[2];
        }

        // dR = 2 dSigma R D; ds_m = 2 s_m (R^T dSigma R)_mm
        double dr[9];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                double acc2 = 0.0;
                for (int kk = 0; kk < 3; ++kk) acc2 += dsigma[i * 3 + kk] * r[kk * 3 + j];
                dr[i * 3 + j] = 2.0 * acc2 * d2[j];
            }
        }
        for (int mcol = 0; mcol < 3; ++mcol) {
            double acc2 = 0.0;
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    acc2 += r[i * 3 + mcol] * dsigma[i * 3 + j] * r[j * 3 + mcol];
                }
            }
            grads.scales[src * 3 + mcol] += 2.0 * sc[mcol] * acc2;
        }

        const double* q = g.rotations.data() + src * 4;
        const double qw = q[0], qx = q[1], qy = q[2], qz = q[3];
        const double drdq[4][9] = {
            {0, -2 * qz, 2 * qy, 2 * qz, 0, -2 * qx, -2 * qy, 2 * qx, 0},
            {0, 2 * qy, 2 * qz, 2 * qy, -4 * qx, -2 * qw, 2 * qz, 2 * qw, -4 * qx},
            {-4 * qy, 2 * qx, 2 * qw, 2 * qx, 0, 2 * qz, -2 * qw, 2 * qz, -4 * qy},
            {-4 * qz, -2 * qw, 2 * qx, 2 * qw, -4 * qz, 2 * qy, 2 * qx, 2 * qy, 0}};
        for (int qc = 0; qc < 4; ++qc) {
            double acc2 = 0.0;
            for (int e = 0; e < 9; ++e) acc2 += dr[e] * drdq[qc][e];
            grads.rotations[src * 4 + qc] += acc2;
        }
    }
}

}  // namespace

Image render_tiled(const GaussianValues& g, const std::vector<uint8_t>& mask,
                   const Camera& cam) {
    return forward_from_context(build_context(g, mask, cam));
}

Image render_reference(const GaussianValues& g, const std::vector<uint8_t>& mask,
                       const Camera& cam) {
    if (cam.width <= 0 || cam.height <= 0) {
        throw std::invalid_argument("render: zero-size image");
    }
    if (!mask.empty() && (int64_t)mask.size() != g.n) {
        throw std::invalid_argument("render: mask length differs from Gaussian count");
    }
    auto splats = project(g, cam, mask.empty() ? nullptr : &mask);
    sort_by_depth(splats);

    Image img(cam.height, cam.width);
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            const auto color = composite_pixel(splats, x + 0.5, y + 0.5);
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = std::clamp(color[c], 0.0, 1.0);
        }
    }
    return img;
}

RenderGrads render_backward(const GaussianValues& g, const std::vector<uint8_t>& mask,
                            const Camera& cam, const Image& upstream) {
    RenderGrads grads;
    grads.positions.assign((size_t)g.n * 3, 0.0);
    grads.rotations.assign((size_t)g.n * 4, 0.0);
    grads.scales.assign((size_t)g.n * 3, 0.0);
    grads.opacities.assign((size_t)g.n, 0.0);
    grads.colors.assign((size_t)g.n * 3, 0.0);
    auto ctx = build_context(g, mask, cam);
    backward_from_context(ctx, g, upstream, grads);
    return grads;
}

TensorPtr render(const GaussianSet& g, const std::vector<uint8_t>& mask, const Camera& cam) {
    auto values = std::make_shared<GaussianValues>(snapshot(g));
    auto ctx = std::make_shared<RenderContext>(build_context(*values, mask, cam));
    Image img = forward_from_context(*ctx);

    const bool req = g.positions->requires_grad || g.rotations->requires_grad ||
                     g.scales->requires_grad || g.opacities->requires_grad ||
                     g.colors->requires_grad;
    auto node = make_tensor({cam.height, cam.width, 3}, img.data, req);
    if (!req) return node;

    node->parents = {g.positions, g.rotations, g.scales, g.opacities, g.colors};
    Tensor* self = node.get();
    GaussianSet inputs = g;
    node->backward_fn = [self, inputs, values, ctx]() {
        Image upstream((int)self->shape[0], (int)self->shape[1]);
        upstream.data = self->grad;

        RenderGrads grads;
        const int64_t n = values->n;
        grads.positions.assign((size_t)n * 3, 0.0);
        grads.rotations.assign((size_t)n * 4, 0.0);
        grads.scales.assign((size_t)n * 3, 0.0);
        grads.opacities.assign((size_t)n, 0.0);
        grads.colors.assign((size_t)n * 3, 0.0);
        backward_from_context(*ctx, *values, upstream, grads);

        auto accumulate = [](const TensorPtr& t, const std::vector<double>& src) {
            if (!t->requires_grad) return;
            t->ensure_grad();
            for (size_t i = 0; i < src.size(); ++i) t->grad[i] += src[i];
        };
        accumulate(inputs.positions, grads.positions);
        accumulate(inputs.rotations, grads.rotations);
        accumulate(inputs.scales, grads.scales);
        accumulate(inputs.opacities, grads.opacities);
        accumulate(inputs.colors, grads.colors);
    };
    return node;
}

}  // namespace splitgs
