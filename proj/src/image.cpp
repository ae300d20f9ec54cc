#include "splitgs/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace splitgs {

TensorPtr to_tensor(const Image& img) {
    return make_tensor({img.height, img.width, 3}, img.data);
}

Image from_tensor(const TensorPtr& t) {
    if (t->shape.size() != 3 || t->shape[2] != 3) {
        throw std::invalid_argument("image: tensor must be HxWx3");
    }
    Image img((int)t->shape[0], (int)t->shape[1]);
    img.data = t->values;
    return img;
}

void save_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("ppm: cannot open " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> bytes(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i) {
        bytes[i] = (unsigned char)std::clamp((int)std::lround(img.data[i] * 255.0), 0, 255);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), (std::streamsize)bytes.size());
    if (!out) throw std::runtime_error("ppm: write failed for " + path);
}

}  // namespace splitgs
