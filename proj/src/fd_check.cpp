#include "splitgs/fd_check.hpp"

#include <cmath>
#include <stdexcept>

namespace splitgs {

FdCheckReport fd_check(const std::function<TensorPtr()>& f,
                       const std::vector<TensorPtr>& params, double h, double tol_rel) {
    (void)tol_rel;
    TensorPtr root = f();
    if (!root->is_scalar()) throw std::invalid_argument("fd_check: f must return a scalar");
    backward(root);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) {
        if (p->grad.size() == p->numel()) {
            analytic.push_back(p->grad);
        } else {
            analytic.emplace_back(p->numel(), 0.0);  // parameter unused by f
        }
    }

    auto eval_at = [&](size_t pi) {
        double v;
        try {
            v = f()->scalar();
        } catch (const std::exception& e) {
            throw std::runtime_error("fd_check: evaluation failed while perturbing parameter " +
                                     std::to_string(pi) + ": " + e.what());
        }
        if (!std::isfinite(v)) {
            throw std::runtime_error("fd_check: non-finite evaluation at parameter " +
                                     std::to_string(pi));
        }
        return v;
    };

    FdCheckReport report;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        FdCheckEntry entry;
        entry.param_index = pi;
        for (size_t e = 0; e < p.numel(); ++e) {
            const double saved = p.values[e];
            p.values[e] = saved + h;
            const double fp = eval_at(pi);
            p.values[e] = saved - h;
            const double fm = eval_at(pi);
            p.values[e] = saved;

            const double fd = (fp - fm) / (2.0 * h);
            const double g = analytic[pi][e];
            const double denom = std::max({std::fabs(fd), std::fabs(g), 1e-4});
            const double rel = std::fabs(fd - g) / denom;
            if (rel > entry.max_rel_err) {
                entry.max_rel_err = rel;
                entry.worst_element = e;
                entry.analytic = g;
                entry.numeric = fd;
            }
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.entries.push_back(entry);
    }
    return report;
}

}  // namespace splitgs
