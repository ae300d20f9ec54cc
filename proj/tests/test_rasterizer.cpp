#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "splitgs/fd_check.hpp"
#include "splitgs/rasterizer.hpp"

using namespace splitgs;

namespace {

GaussianValues make_values(std::vector<double> pos, std::vector<double> rot,
                           std::vector<double> scale, std::vector<double> opacity,
                           std::vector<double> color) {
    GaussianValues v;
    v.n = (int64_t)opacity.size();
    v.positions = std::move(pos);
    v.rotations = std::move(rot);
    v.scales = std::move(scale);
    v.opacities = std::move(opacity);
    v.colors = std::move(color);
    return v;
}

GaussianValues random_values(int64_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pos(-0.6, 0.6);
    std::uniform_real_distribution<double> sc(0.05, 0.3);
    std::uniform_real_distribution<double> op(0.2, 0.9);
    std::uniform_real_distribution<double> col(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    GaussianValues v;
    v.n = n;
    for (int64_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) v.positions.push_back(pos(rng));
        double q[4] = {gauss(rng), gauss(rng), gauss(rng), gauss(rng)};
        const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        for (double x : q) v.rotations.push_back(x / norm);
        for (int c = 0; c < 3; ++c) v.scales.push_back(sc(rng));
        v.opacities.push_back(op(rng));
        for (int c = 0; c < 3; ++c) v.colors.push_back(col(rng));
    }
    return v;
}

Camera front_camera(int width, int height, double fx) {
    return Camera::look_at({0, 0, -2.5}, {0, 0, 0}, {0, 1, 0}, fx, fx, width, height, 0.05);
}

ProjectedSplat flat_splat(double mx, double my, double depth, double alpha,
                          std::array<double, 3> color, int64_t idx) {
    ProjectedSplat s{};
    s.mean2d[0] = mx;
    s.mean2d[1] = my;
    s.cov2d[0] = 1.3;
    s.cov2d[1] = 0.0;
    s.cov2d[2] = 1.3;
    const double det = 1.3 * 1.3;
    s.inv2d[0] = 1.3 / det;
    s.inv2d[1] = 0.0;
    s.inv2d[2] = 1.3 / det;
    s.depth = depth;
    s.alpha = alpha;
    s.radius = 1e6;
    for (int c = 0; c < 3; ++c) s.color[c] = color[c];
    s.source_index = idx;
    return s;
}

}  // namespace

TEST_CASE("orthographic projection with identity pose: cov2d = (1 + dilation) I") {
    auto v = make_values({0.25, -0.125, 1.0}, {1, 0, 0, 0}, {1, 1, 1}, {0.5}, {1, 0, 0});
    Camera cam;
    cam.mode = Camera::Mode::orthographic;
    cam.fx = cam.fy = 1.0;
    cam.cx = cam.cy = 4.0;
    cam.width = cam.height = 8;
    cam.near = 0.01;

    auto splats = project(v, cam);
    REQUIRE(splats.size() == 1);
    CHECK(splats[0].mean2d[0] == doctest::Approx(4.25));
    CHECK(splats[0].mean2d[1] == doctest::Approx(3.875));
    CHECK(splats[0].cov2d[0] == doctest::Approx(1.3).epsilon(1e-14));
    CHECK(splats[0].cov2d[1] == doctest::Approx(0.0));
    CHECK(splats[0].cov2d[2] == doctest::Approx(1.3).epsilon(1e-14));
}

TEST_CASE("Gaussians behind the camera are culled") {
    auto v = make_values({0, 0, -1.0}, {1, 0, 0, 0}, {0.1, 0.1, 0.1}, {0.5}, {1, 1, 1});
    Camera cam;
    cam.width = cam.height = 8;
    cam.cx = cam.cy = 4.0;
    CHECK(project(v, cam).empty());
}

TEST_CASE("perspective projection matches the hand-derived Jacobian evaluation") {
    auto v = make_values({0.3, -0.2, 2.0}, {1, 0, 0, 0}, {0.1, 0.05, 0.2}, {0.5}, {1, 0, 0});
    Camera cam;  // identity pose
    cam.fx = cam.fy = 100.0;
    cam.cx = cam.cy = 16.0;
    cam.width = cam.height = 32;

    auto splats = project(v, cam);
    REQUIRE(splats.size() == 1);
    CHECK(splats[0].mean2d[0] == doctest::Approx(31.0).epsilon(1e-12));
    CHECK(splats[0].mean2d[1] == doctest::Approx(6.0).epsilon(1e-12));

    // J = [[50, 0, -7.5], [0, 50, 5]], Sigma = diag(0.01, 0.0025, 0.04)
    const double a = 50 * 50 * 0.01 + 7.5 * 7.5 * 0.04 + 0.3;
    const double b = (-7.5) * 0.04 * 5.0;
    const double c = 50 * 50 * 0.0025 + 5 * 5 * 0.04 + 0.3;
    CHECK(splats[0].cov2d[0] == doctest::Approx(a).epsilon(1e-12));
    CHECK(splats[0].cov2d[1] == doctest::Approx(b).epsilon(1e-12));
    CHECK(splats[0].cov2d[2] == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("composite_pixel: empty list gives black") {
    std::vector<ProjectedSplat> none;
    auto c = composite_pixel(none, 3.5, 3.5);
    CHECK(c[0] == 0.0);
    CHECK(c[1] == 0.0);
    CHECK(c[2] == 0.0);
}

TEST_CASE("composite_pixel: one centered splat contributes alpha * color") {
    std::vector<ProjectedSplat> splats{flat_splat(3.5, 3.5, 1.0, 0.5, {1, 0, 0}, 0)};
    auto c = composite_pixel(splats, 3.5, 3.5);
    CHECK(c[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(c[1] == 0.0);
}

TEST_CASE("composite_pixel: two-splat front-to-back expansion (0.5, 0.25, 0)") {
    std::vector<ProjectedSplat> splats{flat_splat(3.5, 3.5, 1.0, 0.5, {1, 0, 0}, 0),
                                       flat_splat(3.5, 3.5, 2.0, 0.5, {0, 1, 0}, 1)};
    auto c = composite_pixel(splats, 3.5, 3.5);
    CHECK(std::fabs(c[0] - 0.5) < 1e-12);
    CHECK(std::fabs(c[1] - 0.25) < 1e-12);
    CHECK(std::fabs(c[2] - 0.0) < 1e-12);
}

TEST_CASE("all-zero mask renders black") {
    std::mt19937_64 rng(1);
    auto v = random_values(10, rng);
    auto img = render_tiled(v, std::vector<uint8_t>(10, 0), front_camera(16, 16, 20));
    for (double x : img.data) CHECK(x == 0.0);
}

TEST_CASE("tiled renderer is bit-identical to the brute-force oracle") {
    std::mt19937_64 rng(2);
    auto v = random_values(20, rng);
    auto cam = front_camera(32, 32, 30);
    auto tiled = render_tiled(v, {}, cam);
    auto oracle = render_reference(v, {}, cam);
    REQUIRE(tiled.data.size() == oracle.data.size());
    size_t mismatches = 0;
    for (size_t i = 0; i < tiled.data.size(); ++i) {
        if (tiled.data[i] != oracle.data[i]) ++mismatches;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("permuting Gaussian storage order leaves the image unchanged") {
    std::mt19937_64 rng(3);
    auto v = random_values(15, rng);
    auto cam = front_camera(24, 24, 25);
    auto img = render_tiled(v, {}, cam);

    std::vector<int64_t> perm(15);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    GaussianValues p;
    p.n = v.n;
    p.positions.resize(v.positions.size());
    p.rotations.resize(v.rotations.size());
    p.scales.resize(v.scales.size());
    p.opacities.resize(v.opacities.size());
    p.colors.resize(v.colors.size());
    for (int64_t i = 0; i < 15; ++i) {
        for (int c = 0; c < 3; ++c) {
            p.positions[i * 3 + c] = v.positions[perm[i] * 3 + c];
            p.scales[i * 3 + c] = v.scales[perm[i] * 3 + c];
            p.colors[i * 3 + c] = v.colors[perm[i] * 3 + c];
        }
        for (int c = 0; c < 4; ++c) p.rotations[i * 4 + c] = v.rotations[perm[i] * 4 + c];
        p.opacities[i] = v.opacities[perm[i]];
    }
    auto img_p = render_tiled(p, {}, cam);
    CHECK(img.data == img_p.data);
}

TEST_CASE("blending weights are nonnegative, sum <= 1, and match 1 - T") {
    std::mt19937_64 rng(4);
    auto v = random_values(12, rng);
    auto cam = front_camera(16, 16, 18);
    auto splats = project(v, cam);
    std::sort(splats.begin(), splats.end(), [](const auto& a, const auto& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.source_index < b.source_index;
    });

    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            double transmittance = 1.0, weight_sum = 0.0;
            for (const auto& s : splats) {
                const double dx = px - s.mean2d[0], dy = py - s.mean2d[1];
                if (std::fabs(dx) > s.radius || std::fabs(dy) > s.radius) continue;
                const double power =
                    -0.5 * (s.inv2d[0] * dx * dx + s.inv2d[2] * dy * dy) - s.inv2d[1] * dx * dy;
                const double alpha = std::min(kAlphaClamp, s.alpha * std::exp(power));
                if (alpha < kAlphaSkip) continue;
                const double weight = alpha * transmittance;
                CHECK(weight >= 0.0);
                weight_sum += weight;
                transmittance *= 1.0 - alpha;
                if (transmittance < kTransmittanceStop) break;
            }
            CHECK(weight_sum <= 1.0 + 1e-12);
            CHECK(std::fabs(transmittance - (1.0 - weight_sum)) < 1e-12);
        }
    }
}

TEST_CASE("render backward passes FD away from clamp and skip thresholds") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-0.2, 0.2);
    const int64_t n = 5;
    GaussianValues v;
    v.n = n;
    for (int64_t i = 0; i < n; ++i) {
        v.positions.insert(v.positions.end(), {dist(rng), dist(rng), dist(rng) * 0.5});
        std::normal_distribution<double> gauss(0.0, 1.0);
        double q[4] = {1.0 + gauss(rng) * 0.1, gauss(rng) * 0.1, gauss(rng) * 0.1,
                       gauss(rng) * 0.1};
        const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        for (double x : q) v.rotations.push_back(x / norm);
        // large footprints keep every pixel inside each splat's bounding box
        for (int c = 0; c < 3; ++c) v.scales.push_back(0.5 + 0.2 * std::fabs(dist(rng)));
        v.opacities.push_back(0.45 + dist(rng));
        for (int c = 0; c < 3; ++c) v.colors.push_back(0.3 + std::fabs(dist(rng)));
    }
    auto cam = front_camera(16, 16, 20);

    auto g = from_values(v, true);
    std::mt19937_64 wrng(6);
    std::uniform_real_distribution<double> wdist(-1.0, 1.0);
    std::vector<double> wv((size_t)cam.width * cam.height * 3);
    for (auto& x : wv) x = wdist(wrng);
    auto weights = make_tensor({cam.height, cam.width, 3}, wv);

    auto f = [&]() { return reduce_sum(mul(render(g, {}, cam), weights)); };
    auto report = fd_check(f, {g.positions, g.rotations, g.scales, g.opacities, g.colors},
                           1e-5);
    CHECK(report.max_rel_err < 1e-3);
}

TEST_CASE("color gradient of a sum-of-pixels loss equals the accumulated weight") {
    auto v = make_values({0, 0, 0}, {1, 0, 0, 0}, {0.5, 0.5, 0.5}, {0.6}, {0.8, 0.3, 0.2});
    auto cam = front_camera(16, 16, 15);

    // oracle: accumulate the blending weight over all pixels
    auto splats = project(v, cam);
    REQUIRE(splats.size() == 1);
    double weight_sum = 0.0;
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            const double dx = x + 0.5 - splats[0].mean2d[0];
            const double dy = y + 0.5 - splats[0].mean2d[1];
            if (std::fabs(dx) > splats[0].radius || std::fabs(dy) > splats[0].radius) continue;
            const double power = -0.5 * (splats[0].inv2d[0] * dx * dx +
                                         splats[0].inv2d[2] * dy * dy) -
                                 splats[0].inv2d[1] * dx * dy;
            const double alpha = std::min(kAlphaClamp, splats[0].alpha * std::exp(power));
            if (alpha < kAlphaSkip) continue;
            weight_sum += alpha;
        }
    }

    auto g = from_values(v, true);
    backward(reduce_sum(render(g, {}, cam)));
    for (int c = 0; c < 3; ++c) {
        CHECK(g.colors->grad[c] == doctest::Approx(weight_sum).epsilon(1e-12));
    }
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
    std::mt19937_64 rng(7);
    auto v = random_values(6, rng);
    auto cam = front_camera(16, 16, 20);
    auto grads = render_backward(v, {}, cam, Image(16, 16));
    for (double x : grads.positions) CHECK(x == 0.0);
    for (double x : grads.rotations) CHECK(x == 0.0);
    for (double x : grads.opacities) CHECK(x == 0.0);
}

TEST_CASE("zero-size image is an error") {
    std::mt19937_64 rng(8);
    auto v = random_values(2, rng);
    Camera cam;
    cam.width = 0;
    cam.height = 16;
    CHECK_THROWS(render_tiled(v, {}, cam));
    CHECK_THROWS(render_reference(v, {}, cam));
}

TEST_CASE("delayed filtering: masked render equals physically filtered render") {
    std::mt19937_64 rng(9);
    auto v = random_values(14, rng);
    std::vector<uint8_t> mask(14);
    for (auto& b : mask) b = rng() % 2;

    GaussianValues filtered;
    filtered.n = 0;
    for (int64_t i = 0; i < v.n; ++i) {
        if (!mask[i]) continue;
        ++filtered.n;
        for (int c = 0; c < 3; ++c) {
            filtered.positions.push_back(v.positions[i * 3 + c]);
            filtered.scales.push_back(v.scales[i * 3 + c]);
            filtered.colors.push_back(v.colors[i * 3 + c]);
        }
        for (int c = 0; c < 4; ++c) filtered.rotations.push_back(v.rotations[i * 4 + c]);
        filtered.opacities.push_back(v.opacities[i]);
    }

    auto cam = front_camera(24, 24, 22);
    auto masked = render_tiled(v, mask, cam);
    auto physical = render_tiled(filtered, {}, cam);
    REQUIRE(masked.data.size() == physical.data.size());
    for (size_t i = 0; i < masked.data.size(); ++i) {
        CHECK(std::fabs(masked.data[i] - physical.data[i]) < 1e-12);
    }
}

TEST_CASE("rendering a concatenated set equals rendering the pooled multiset") {
    std::mt19937_64 rng(10);
    auto a = random_values(6, rng);
    auto b = random_values(9, rng);

    GaussianValues pooled;
    pooled.n = a.n + b.n;
    auto append = [](std::vector<double>& dst, const std::vector<double>& src) {
        dst.insert(dst.end(), src.begin(), src.end());
    };
    append(pooled.positions, a.positions);
    append(pooled.positions, b.positions);
    append(pooled.rotations, a.rotations);
    append(pooled.rotations, b.rotations);
    append(pooled.scales, a.scales);
    append(pooled.scales, b.scales);
    append(pooled.opacities, a.opacities);
    append(pooled.opacities, b.opacities);
    append(pooled.colors, a.colors);
    append(pooled.colors, b.colors);

    auto cam = front_camera(24, 24, 22);
    auto joined = concat({from_values(a), from_values(b)});
    auto img_concat = from_tensor(render(joined, {}, cam));
    auto img_pooled = render_reference(pooled, {}, cam);
    CHECK(img_concat.data == img_pooled.data);
}
