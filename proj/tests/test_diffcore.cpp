#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "splitgs/fd_check.hpp"
#include "splitgs/reference.hpp"
#include "splitgs/tensor.hpp"

using namespace splitgs;

namespace {

std::vector<double> random_values(size_t n, std::mt19937_64& rng, double lo = -1.0,
                                  double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

}  // namespace

TEST_CASE("sigmoid value and gradient at zero") {
    auto x = param({1}, {0.0});
    auto y = sigmoid(x);
    CHECK(y->values[0] == doctest::Approx(0.5).epsilon(1e-15));
    backward(reduce_sum(y));
    CHECK(x->grad[0] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("leaky_relu negative side uses slope") {
    auto x = make_tensor({1}, {-1.0});
    auto y = leaky_relu(x, 0.2);
    CHECK(y->values[0] == doctest::Approx(-0.2).epsilon(1e-15));
}

TEST_CASE("exp forward values and FD gradient") {
    auto x = param({2}, {0.0, std::log(2.0)});
    auto y = exp(x);
    CHECK(y->values[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(y->values[1] == doctest::Approx(2.0).epsilon(1e-12));

    auto report = fd_check([&]() { return reduce_sum(exp(x)); }, {x});
    CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("matmul against identity and hand-multiplied case") {
    auto a = make_tensor({2, 2}, {1, 2, 3, 4});
    auto eye = make_tensor({2, 2}, {1, 0, 0, 1});
    auto prod = matmul(a, eye);
    CHECK(prod->values == a->values);

    auto ones = make_tensor({2, 1}, {1, 1});
    auto v = matmul(a, ones);
    // [[1,2],[3,4]] x [[1],[1]] = [[3],[7]]
    CHECK(v->values[0] == doctest::Approx(3.0));
    CHECK(v->values[1] == doctest::Approx(7.0));
}

TEST_CASE("matmul gradient matches finite differences") {
    std::mt19937_64 rng(7);
    auto a = param({3, 4}, random_values(12, rng));
    auto b = param({4, 2}, random_values(8, rng));
    auto report = fd_check([&]() { return reduce_sum(mul(matmul(a, b), matmul(a, b))); },
                           {a, b});
    CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("matmul OpenMP kernel is bit-identical to the serial reference") {
    std::mt19937_64 rng(11);
    const int64_t m = 37, k = 53, n = 29;
    auto av = random_values((size_t)m * k, rng);
    auto bv = random_values((size_t)k * n, rng);
    auto prod = matmul(make_tensor({m, k}, av), make_tensor({k, n}, bv));
    auto ref = reference::matmul(av, bv, m, k, n);
    REQUIRE(prod->numel() == ref.size());
    for (size_t i = 0; i < ref.size(); ++i) CHECK(prod->values[i] == ref[i]);
}

TEST_CASE("gather identity permutation and selected-row gradients") {
    auto f = param({3, 2}, {1, 2, 3, 4, 5, 6});
    std::vector<int64_t> all{0, 1, 2};
    auto same = gather_rows(f, all);
    CHECK(same->values == f->values);

    auto picked = gather_rows(f, {0, 2});
    backward(reduce_sum(picked));
    CHECK(f->grad == std::vector<double>{1, 1, 0, 0, 1, 1});
}

TEST_CASE("gather with duplicated index accumulates gradient") {
    auto f = param({2, 1}, {0.3, 0.7});
    backward(reduce_sum(gather_rows(f, {0, 0})));
    CHECK(f->grad[0] == doctest::Approx(2.0));
    CHECK(f->grad[1] == doctest::Approx(0.0));

    auto report =
        fd_check([&]() { return reduce_sum(mul(gather_rows(f, {0, 0}), gather_rows(f, {0, 0}))); },
                 {f});
    CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("gather rejects out-of-range index") {
    auto f = make_tensor({2, 1}, {1, 2});
    CHECK_THROWS(gather_rows(f, {2}));
}

TEST_CASE("segment_softmax uniform logits give uniform weights") {
    auto l = make_tensor({4}, {1.5, 1.5, 1.5, 1.5});
    auto y = segment_softmax(l, {0, 0, 0, 0});
    for (double v : y->values) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("segment_softmax closed form [0, ln3] -> [0.25, 0.75]") {
    auto l = make_tensor({2}, {0.0, std::log(3.0)});
    auto y = segment_softmax(l, {0, 0});
    CHECK(y->values[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(y->values[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("segment_softmax sums to one per segment and FD gradient passes") {
    std::mt19937_64 rng(3);
    auto l = param({8}, random_values(8, rng));
    std::vector<int64_t> segs{0, 1, 0, 2, 2, 1, 0, 2};
    auto y = segment_softmax(l, segs);
    double sums[3] = {0, 0, 0};
    for (size_t i = 0; i < segs.size(); ++i) sums[segs[i]] += y->values[i];
    for (double s : sums) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));

    auto w = make_tensor({8}, random_values(8, rng));
    auto report =
        fd_check([&]() { return reduce_sum(mul(segment_softmax(l, segs), w)); }, {l});
    CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("segment_softmax of empty input is empty") {
    auto l = make_tensor({0}, {});
    auto y = segment_softmax(l, {});
    CHECK(y->numel() == 0);
}

TEST_CASE("custom_grad forwards values, routes gradient to surrogate") {
    auto x = param({1}, {0.3});
    auto out = custom_grad(make_tensor({1}, {1.0}), x);
    CHECK(out->values[0] == doctest::Approx(1.0));
    backward(reduce_sum(out));
    CHECK(x->grad[0] == doctest::Approx(1.0));
}

TEST_CASE("custom_grad with constant surrogate blocks all gradients") {
    auto x = param({1}, {0.4});
    auto fv = mul(x, x);  // graph upstream of forward_value
    auto out = custom_grad(fv, make_tensor({1}, {0.0}));
    CHECK_FALSE(out->requires_grad);
    backward(out);  // no-op
    CHECK(x->grad.empty());
}

TEST_CASE("custom_grad STE composite matches FD of the surrogate path") {
    // forward: binary mask value; surrogate: soft * parent product
    auto m = param({1}, {0.3});
    auto parent = make_tensor({1}, {1.0});
    auto f = [&]() {
        auto surrogate = mul(m, parent);
        auto hard = make_tensor({1}, {m->values[0] > 0.5 ? 1.0 : 0.0});
        auto composite = custom_grad(hard, surrogate);
        return reduce_sum(mul(composite, composite));
    };
    // FD of the surrogate path: d/dm (m*1)^2 would be 2m, but the forward is
    // piecewise constant; fd_check is inapplicable. Check the backward rule
    // directly against the surrogate product's analytic derivative instead.
    auto surrogate = mul(m, parent);
    auto hard = make_tensor({1}, {0.0});
    auto composite = custom_grad(hard, surrogate);
    backward(reduce_sum(composite));
    CHECK(m->grad[0] == doctest::Approx(parent->values[0]).epsilon(1e-12));
    (void)f;
}

TEST_CASE("fd_check on a quadratic is nearly exact") {
    auto x = param({1}, {3.0});
    auto report = fd_check([&]() { return mul(x, x); }, {x});
    CHECK(report.entries[0].analytic == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(report.max_rel_err < 1e-9);
}

TEST_CASE("gradient accumulates additively across fan-out") {
    auto x = param({1}, {2.0});
    auto a = make_tensor({1}, {3.0});
    auto b = make_tensor({1}, {5.0});
    backward(add(mul(a, x), mul(b, x)));
    CHECK(x->grad[0] == doctest::Approx(8.0));
}

TEST_CASE("backward without requires_grad leaves is a no-op") {
    auto x = make_tensor({1}, {2.0});
    auto y = mul(x, x);
    CHECK_FALSE(y->requires_grad);
    CHECK_NOTHROW(backward(y));
}

TEST_CASE("error paths: shape mismatch, div by zero, domain errors") {
    auto a = make_tensor({2}, {1, 2});
    auto b = make_tensor({3}, {1, 2, 3});
    CHECK_THROWS(add(a, b));
    CHECK_THROWS(div(a, make_tensor({2}, {1.0, 0.0})));
    CHECK_THROWS(log(make_tensor({1}, {-1.0})));
    CHECK_THROWS(exp(make_tensor({1}, {1e6})));  // overflow -> non-finite
    CHECK_THROWS(matmul(make_tensor({2, 3}, std::vector<double>(6, 1.0)),
                        make_tensor({2, 2}, std::vector<double>(4, 1.0))));
}

TEST_CASE("scalar broadcasting works both ways, vector-vs-matrix is rejected") {
    auto m = make_tensor({2, 2}, {1, 2, 3, 4});
    auto s = scalar_tensor(10.0);
    CHECK(add(m, s)->values == std::vector<double>{11, 12, 13, 14});
    CHECK(sub(s, m)->values == std::vector<double>{9, 8, 7, 6});

    auto v = make_tensor({2}, {1, 1});
    CHECK_THROWS(add(m, v));
}

TEST_CASE("scalar broadcast gradient sums over the array side") {
    auto s = param({1}, {2.0});
    auto m = make_tensor({3}, {1, 2, 3});
    backward(reduce_sum(mul(m, s)));
    CHECK(s->grad[0] == doctest::Approx(6.0));
}

TEST_CASE("scatter_rows is the adjoint of gather_rows") {
    std::mt19937_64 rng(19);
    const int64_t n = 6, d = 3;
    std::vector<int64_t> idx{0, 4, 4, 2, 5};
    auto x = make_tensor({(int64_t)idx.size(), d}, random_values(idx.size() * d, rng));
    auto y = make_tensor({n, d}, random_values((size_t)n * d, rng));

    // <scatter(x), y> == <x, gather(y)>
    auto lhs = reduce_sum(mul(scatter_rows(x, idx, n), y));
    auto rhs = reduce_sum(mul(x, gather_rows(y, idx)));
    CHECK(lhs->values[0] == doctest::Approx(rhs->values[0]).epsilon(1e-12));
}

TEST_CASE("concat/slice round trip and gradients") {
    auto a = param({2, 2}, {1, 2, 3, 4});
    auto b = param({2, 3}, {5, 6, 7, 8, 9, 10});
    auto cc = concat_cols({a, b});
    CHECK(cc->shape == std::vector<int64_t>{2, 5});
    CHECK(slice_cols(cc, 0, 2)->values == a->values);
    CHECK(slice_cols(cc, 2, 5)->values == b->values);

    auto report = fd_check(
        [&]() {
            auto c = concat_cols({a, b});
            auto left = slice_cols(c, 0, 2);
            return reduce_sum(mul(left, left));
        },
        {a, b});
    CHECK(report.max_rel_err < 1e-6);

    auto rr = concat_rows({a, a});
    CHECK(rr->shape == std::vector<int64_t>{4, 2});
    backward(reduce_sum(rr));
    CHECK(a->grad == std::vector<double>(4, 2.0));
}

TEST_CASE("elementwise dispatcher mirrors the named ops") {
    auto x = make_tensor({2}, {0.5, -0.5});
    CHECK(elementwise(EwOp::tanh, x)->values == tanh(x)->values);
    auto y = make_tensor({2}, {2.0, 4.0});
    CHECK(elementwise(EwOp::mul, x, y)->values == mul(x, y)->values);
    CHECK_THROWS(elementwise(EwOp::add, x));
    CHECK_THROWS(elementwise(EwOp::exp, x, y));
}

TEST_CASE("smooth op battery passes FD at 1e-6") {
    std::mt19937_64 rng(23);
    auto x = param({6}, random_values(6, rng, 0.2, 1.5));  // positive: log/sqrt domain
    auto w = make_tensor({6}, random_values(6, rng));
    auto f = [&]() {
        auto t = add(mul(sigmoid(x), tanh(x)), div(exp(x), add(sqrt(x), scalar_tensor(1.0))));
        t = add(t, leaky_relu(sub(x, scalar_tensor(0.7)), 0.2));
        t = add(t, log(x));
        return reduce_sum(mul(t, w));
    };
    auto report = fd_check(f, {x});
    CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("grad buffers match value shapes after backward") {
    auto x = param({2, 3}, std::vector<double>(6, 0.5));
    backward(reduce_mean(mul(x, x)));
    CHECK(x->grad.size() == x->numel());
}
