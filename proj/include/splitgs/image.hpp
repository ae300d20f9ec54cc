#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splitgs/tensor.hpp"

namespace splitgs {

/// Row-major H x W x 3 image, channels last, values in [0,1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w) : height(h), width(w), data((size_t)h * w * 3, 0.0) {}

    double& at(int y, int x, int c) { return data[((size_t)y * width + x) * 3 + c]; }
    double at(int y, int x, int c) const { return data[((size_t)y * width + x) * 3 + c]; }
};

TensorPtr to_tensor(const Image& img);
Image from_tensor(const TensorPtr& t);

/// Binary PPM (P6), 8 bits per channel.
void save_ppm(const Image& img, const std::string& path);

}  // namespace splitgs
