#pragma once

#include <functional>
#include <string>
#include <vector>

#include "splitgs/tensor.hpp"

namespace splitgs {

struct FdCheckEntry {
    size_t param_index = 0;    // position in the params list
    size_t worst_element = 0;  // flat element index with the largest error
    double max_rel_err = 0.0;
    double analytic = 0.0;  // gradient at the worst element
    double numeric = 0.0;   // central FD at the worst element
};

struct FdCheckReport {
    std::vector<FdCheckEntry> entries;  // one per parameter tensor
    double max_rel_err = 0.0;
    bool pass(double tol_rel) const { return max_rel_err < tol_rel; }
};

/// Compares backward gradients against central finite differences.
/// `f` must rebuild the graph from the current parameter values on every call
/// and return a scalar. Relative error uses denominator
/// max(|fd|, |grad|, 1e-4) so near-zero gradients do not blow up the ratio.
/// Throws on non-finite evaluation, naming the offending parameter index.
FdCheckReport fd_check(const std::function<TensorPtr()>& f,
                       const std::vector<TensorPtr>& params, double h = 1e-5,
                       double tol_rel = 1e-6);

}  // namespace splitgs
