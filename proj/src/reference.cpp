#include "splitgs/reference.hpp"

namespace splitgs::reference {

std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b,
                           int64_t m, int64_t k, int64_t n) {
    std::vector<double> out((size_t)m * n, 0.0);
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            for (int64_t j = 0; j < n; ++j) out[i * n + j] += aip * b[p * n + j];
        }
    }
    return out;
}

}  // namespace splitgs::reference
