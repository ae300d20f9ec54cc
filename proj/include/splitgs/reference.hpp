#pragma once

#include <cstdint>
#include <vector>

namespace splitgs::reference {

/// Serial matmul kept as the comparison baseline for the OpenMP kernel.
/// Identical loop nest and accumulation order, no pragmas.
std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b,
                           int64_t m, int64_t k, int64_t n);

}  // namespace splitgs::reference
