#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "splitgs/tensor.hpp"

namespace splitgs {

/// Two-layer perceptron weights. Biases are stored as [1, d] rows and
/// broadcast over rows via gather, keeping elementwise broadcasting minimal.
struct MlpParams {
    TensorPtr w1, b1, w2, b2;

    std::vector<std::pair<std::string, TensorPtr>> named(const std::string& prefix) const;
};

/// x[N,in] -> leaky_relu(x W1 + b1) W2 + b2, linear output layer.
TensorPtr mlp_forward(const TensorPtr& x, const MlpParams& p, double slope);

/// Broadcast a [1,d] row over n rows.
TensorPtr repeat_row(const TensorPtr& row, int64_t n);

// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init
TensorPtr uniform_param(int64_t rows, int64_t cols, std::mt19937_64& rng);
TensorPtr zeros_param(int64_t rows, int64_t cols);

MlpParams init_mlp(int64_t in, int64_t hidden, int64_t out, std::mt19937_64& rng,
                   double out_bias = 0.0);

}  // namespace splitgs
