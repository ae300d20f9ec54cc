#include "splitgs/nn.hpp"

#include <cmath>

namespace splitgs {

std::vector<std::pair<std::string, TensorPtr>> MlpParams::named(
    const std::string& prefix) const {
    return {{prefix + ".w1", w1}, {prefix + ".b1", b1}, {prefix + ".w2", w2},
            {prefix + ".b2", b2}};
}

TensorPtr repeat_row(const TensorPtr& row, int64_t n) {
    return gather_rows(row, std::vector<int64_t>(n, 0));
}

TensorPtr mlp_forward(const TensorPtr& x, const MlpParams& p, double slope) {
    const int64_t n = x->rows();
    auto h = leaky_relu(add(matmul(x, p.w1), repeat_row(p.b1, n)), slope);
    return add(matmul(h, p.w2), repeat_row(p.b2, n));
}

TensorPtr uniform_param(int64_t rows, int64_t cols, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt((double)rows);
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> v((size_t)(rows * cols));
    for (auto& x : v) x = dist(rng);
    return param({rows, cols}, std::move(v));
}

TensorPtr zeros_param(int64_t rows, int64_t cols) {
    return param({rows, cols}, std::vector<double>((size_t)(rows * cols), 0.0));
}

MlpParams init_mlp(int64_t in, int64_t hidden, int64_t out, std::mt19937_64& rng,
                   double out_bias) {
    MlpParams p;
    p.w1 = uniform_param(in, hidden, rng);
    p.b1 = zeros_param(1, hidden);
    p.w2 = uniform_param(hidden, out, rng);
    p.b2 = param({1, out}, std::vector<double>((size_t)out, out_bias));
    return p;
}

}  // namespace splitgs
