#include "splitgs/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace splitgs {

namespace {

size_t shape_numel(const std::vector<int64_t>& shape) {
    size_t n = 1;
    for (int64_t d : shape) {
        if (d < 0) throw std::invalid_argument("tensor: negative dimension");
        n *= static_cast<size_t>(d);
    }
    return n;
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

// parallelize only when the loop is worth the fork overhead
constexpr size_t kOmpThreshold = 4096;

}  // namespace

void check_finite(const std::vector<double>& v, const char* op_name) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw std::runtime_error(std::string(op_name) + ": non-finite value produced");
        }
    }
}

Tensor::Tensor(std::vector<int64_t> shp, std::vector<double> vals, bool req_grad)
    : shape(std::move(shp)), values(std::move(vals)), requires_grad(req_grad) {
    if (shape_numel(shape) != values.size()) {
        throw std::invalid_argument("tensor: shape does not match value count");
    }
}

double Tensor::scalar() const {
    if (!is_scalar()) throw std::invalid_argument("tensor: scalar() on non-scalar");
    return values[0];
}

int64_t Tensor::rows() const {
    if (shape.size() != 2) throw std::invalid_argument("tensor: rows() needs rank 2");
    return shape[0];
}

int64_t Tensor::cols() const {
    if (shape.size() != 2) throw std::invalid_argument("tensor: cols() needs rank 2");
    return shape[1];
}

void Tensor::ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

TensorPtr make_tensor(std::vector<int64_t> shape, std::vector<double> values,
                      bool requires_grad) {
    return std::make_shared<Tensor>(std::move(shape), std::move(values), requires_grad);
}

TensorPtr constant(std::vector<int64_t> shape, double fill) {
    size_t n = shape_numel(shape);
    return make_tensor(std::move(shape), std::vector<double>(n, fill), false);
}

TensorPtr scalar_tensor(double v) { return make_tensor({1}, {v}, false); }

TensorPtr param(std::vector<int64_t> shape, std::vector<double> values) {
    return make_tensor(std::move(shape), std::move(values), true);
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

namespace {

enum class Bcast { equal, a_scalar, b_scalar };

Bcast classify(const Tensor& a, const Tensor& b) {
    if (same_shape(a, b)) return Bcast::equal;
    if (a.is_scalar()) return Bcast::a_scalar;
    if (b.is_scalar()) return Bcast::b_scalar;
    throw std::invalid_argument(
        "elementwise: shapes must match or one side must be scalar");
}

TensorPtr binary_op(EwOp kind, const TensorPtr& a, const TensorPtr& b) {
    Bcast bc = classify(*a, *b);
    const Tensor& big = (bc == Bcast::a_scalar) ? *b : *a;
    const size_t n = big.numel();
    std::vector<double> out(n);
    const double* av = a->values.data();
    const double* bv = b->values.data();

    auto ai = [&](size_t i) { return bc == Bcast::a_scalar ? av[0] : av[i]; };
    auto bi = [&](size_t i) { return bc == Bcast::b_scalar ? bv[0] : bv[i]; };

    if (kind == EwOp::div) {
        for (size_t i = 0; i < n; ++i) {
            if (bi(i) == 0.0) throw std::runtime_error("div: division by zero");
        }
    }

    switch (kind) {
        case EwOp::add:
#pragma omp parallel for schedule(static) if (n > kOmpThreshold)
            for (int64_t i = 0; i < (int64_t)n; ++i) out[i] = ai(i) + bi(i);
            break;
        case EwOp::sub:
#pragma omp parallel for schedule(static) if (n > kOmpThreshold)
            for (int64_t i = 0; i < (int64_t)n; ++i) out[i] = ai(i) - bi(i);
            break;
        case EwOp::mul:
#pragma omp parallel for schedule(static) if (n > kOmpThreshold)
            for (int64_t i = 0; i < (int64_t)n; ++i) out[i] = ai(i) * bi(i);
            break;
        case EwOp::div:
#pragma omp parallel for schedule(static) if (n > kOmpThreshold)
            for (int64_t i = 0; i < (int64_t)n; ++i) out[i] = ai(i) / bi(i);
            break;
        default:
            throw std::invalid_argument("binary_op: not a binary kind");
    }
    check_finite(out, "elementwise");

    auto node = make_tensor(big.shape, std::move(out),
                            a->requires_grad || b->requires_grad);
    if (!node->requires_grad) return node;

    node->parents = {a, b};
    Tensor* self = node.get();
    TensorPtr pa = a, pb = b;
    node->backward_fn = [self, pa, pb, kind, bc]() {
        const std::vector<double>& g = self->grad;
        const size_t n = g.size();
        auto av = [&](size_t i) {
            return bc == Bcast::a_scalar ? pa->values[0] : pa->values[i];
        };
        auto bv = [&](size_t i) {
            return bc == Bcast::b_scalar ? pb->values[0] : pb->values[i];
        };
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < n; ++i) {
                double da;
                switch (kind) {
                    case EwOp::add: da = g[i]; break;
                    case EwOp::sub: da = g[i]; break;
                    case EwOp::mul: da = g[i] * bv(i); break;
                    default:        da = g[i] / bv(i); break;  // div
                }
                pa->grad[bc == Bcast::a_scalar ? 0 : i] += da;
            }
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (size_t i = 0; i < n; ++i) {
                double db;
                switch (kind) {
                    case EwOp::add: db = g[i]; break;
                    case EwOp::sub: db = -g[i]; break;
                    case EwOp::mul: db = g[i] * av(i); break;
                    default:
                        db = -g[i] * av(i) / (bv(i) * bv(i));
                        break;  // div
                }
                pb->grad[bc == Bcast::b_scalar ? 0 : i] += db;
            }
        }
    };
    return node;
}

TensorPtr unary_op(EwOp kind, const TensorPtr& x, double slope) {
    const size_t n = x->numel();
    std::vector<double> out(n);
    const double* xv = x->values.data();

    switch (kind) {
        case EwOp::exp:
#pragma omp parallel for schedule(static) if (n > kOmpThreshold)
            for (int64_t i = 0; i < (int64_t)n; ++i) out[i] = std::exp(xv[i]);
            break;
        case EwOp::log:
#pragma omp parallel for schedule(static) if (n > kOmpThreshold)
            for (int64_t i = 0; i < (int64_t)n; ++i) out[i] = std::log(xv[i]);
            break;
        case EwOp::tanh:
#pragma omp parallel for schedule(static) if (n > kOmpThreshold)
            for (int64_t i = 0; i < (int64_t)n; ++i) out[i] = std::tanh(xv[i]);
            break;
        case EwOp::sigmoid:
#pragma omp parallel for schedule(static) if (n > kOmpThreshold)
            for (int64_t i = 0; i < (int64_t)n; ++i) out[i] = 1.0 / (1.0 + std::exp(-xv[i]));
            break;
        case EwOp::leaky_relu:
#pragma omp parallel for schedule(static) if (n > kOmpThreshold)
            for (int64_t i = 0; i < (int64_t)n; ++i)
                out[i] = xv[i] > 0.0 ? xv[i] : slope * xv[i];
            break;
        case EwOp::abs:
#pragma omp parallel for schedule(static) if (n > kOmpThreshold)
            for (int64_t i = 0; i < (int64_t)n; ++i) out[i] = std::fabs(xv[i]);
            break;
        case EwOp::sqrt:
#pragma omp parallel for schedule(static) if (n > kOmpThreshold)
            for (int64_t i = 0; i < (int64_t)n; ++i) out[i] = std::sqrt(xv[i]);
            break;
        default:
            throw std::invalid_argument("unary_op: not a unary kind");
    }
    check_finite(out, "elementwise");

    auto node = make_tensor(x->shape, std::move(out), x->requires_grad);
    if (!node->requires_grad) return node;

    node->parents = {x};
    Tensor* self = node.get();
    TensorPtr px = x;
    node->backward_fn = [self, px, kind, slope]() {
        px->ensure_grad();
        const std::vector<double>& g = self->grad;
        const std::vector<double>& y = self->values;
        const std::vector<double>& xv = px->values;
        const size_t n = g.size();
        for (size_t i = 0; i < n; ++i) {
            double d;
            switch (kind) {
                case EwOp::exp:     d = y[i]; break;
                case EwOp::log:     d = 1.0 / xv[i]; break;
                case EwOp::tanh:    d = 1.0 - y[i] * y[i]; break;
                case EwOp::sigmoid: d = y[i] * (1.0 - y[i]); break;
                case EwOp::leaky_relu: d = xv[i] > 0.0 ? 1.0 : slope; break;
                case EwOp::abs:     d = xv[i] > 0.0 ? 1.0 : (xv[i] < 0.0 ? -1.0 : 0.0); break;
                default:            d = y[i] == 0.0 ? 0.0 : 0.5 / y[i]; break;  // sqrt
            }
            px->grad[i] += g[i] * d;
        }
    };
    return node;
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) { return binary_op(EwOp::add, a, b); }
TensorPtr sub(const TensorPtr& a, const TensorPtr& b) { return binary_op(EwOp::sub, a, b); }
TensorPtr mul(const TensorPtr& a, const TensorPtr& b) { return binary_op(EwOp::mul, a, b); }
TensorPtr div(const TensorPtr& a, const TensorPtr& b) { return binary_op(EwOp::div, a, b); }
TensorPtr exp(const TensorPtr& x) { return unary_op(EwOp::exp, x, 0.0); }
TensorPtr log(const TensorPtr& x) { return unary_op(EwOp::log, x, 0.0); }
TensorPtr tanh(const TensorPtr& x) { return unary_op(EwOp::tanh, x, 0.0); }
TensorPtr sigmoid(const TensorPtr& x) { return unary_op(EwOp::sigmoid, x, 0.0); }
TensorPtr leaky_relu(const TensorPtr& x, double slope) {
    return unary_op(EwOp::leaky_relu, x, slope);
}
TensorPtr abs(const TensorPtr& x) { return unary_op(EwOp::abs, x, 0.0); }
TensorPtr sqrt(const TensorPtr& x) { return unary_op(EwOp::sqrt, x, 0.0); }

TensorPtr elementwise(EwOp op, const TensorPtr& a, const TensorPtr& b, double slope) {
    switch (op) {
        case EwOp::add:
        case EwOp::sub:
        case EwOp::mul:
        case EwOp::div:
            if (!b) throw std::invalid_argument("elementwise: binary op needs two inputs");
            return binary_op(op, a, b);
        default:
            if (b) throw std::invalid_argument("elementwise: unary op takes one input");
            return unary_op(op, a, slope);
    }
}

// ---------------------------------------------------------------------------
// matmul
// ---------------------------------------------------------------------------

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    const int64_t m = a->rows(), k = a->cols();
    const int64_t k2 = b->rows(), n = b->cols();
    if (k != k2) throw std::invalid_argument("matmul: inner dimensions differ");

    std::vector<double> out((size_t)m * n, 0.0);
    const double* av = a->values.data();
    const double* bv = b->values.data();
#pragma omp parallel for schedule(static) if ((size_t)m * k * n > 32768)
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            for (int64_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
        }
    }
    check_finite(out, "matmul");

    auto node = make_tensor({m, n}, std::move(out), a->requires_grad || b->requires_grad);
    if (!node->requires_grad) return node;

    node->parents = {a, b};
    Tensor* self = node.get();
    TensorPtr pa = a, pb = b;
    node->backward_fn = [self, pa, pb, m, k, n]() {
        const double* g = self->grad.data();
        if (pa->requires_grad) {
            pa->ensure_grad();
            double* da = pa->grad.data();
            const double* bv = pb->values.data();
            // dA = dC * B^T
#pragma omp parallel for schedule(static) if ((size_t)m * k * n > 32768)
            for (int64_t i = 0; i < m; ++i) {
                for (int64_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (int64_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
                    da[i * k + p] += acc;
                }
            }
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            double* db = pb->grad.data();
            const double* av = pa->values.data();
            // dB = A^T * dC
#pragma omp parallel for schedule(static) if ((size_t)m * k * n > 32768)
            for (int64_t p = 0; p < k; ++p) {
                for (int64_t j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (int64_t i = 0; i < m; ++i) acc += av[i * k + p] * g[i * n + j];
                    db[p * n + j] += acc;
                }
            }
        }
    };
    return node;
}

// ---------------------------------------------------------------------------
// gather / scatter
// ---------------------------------------------------------------------------

TensorPtr gather_rows(const TensorPtr& src, const std::vector<int64_t>& idx) {
    const int64_t n = src->rows(), d = src->cols();
    for (int64_t i : idx) {
        if (i < 0 || i >= n) throw std::invalid_argument("gather_rows: index out of range");
    }
    const int64_t m = (int64_t)idx.size();
    std::vector<double> out((size_t)m * d);
    const double* sv = src->values.data();
#pragma omp parallel for schedule(static) if ((size_t)m * d > kOmpThreshold)
    for (int64_t i = 0; i < m; ++i) {
        std::copy(sv + idx[i] * d, sv + (idx[i] + 1) * d, out.begin() + i * d);
    }

    auto node = make_tensor({m, d}, std::move(out), src->requires_grad);
    if (!node->requires_grad) return node;

    node->parents = {src};
    Tensor* self = node.get();
    TensorPtr ps = src;
    std::vector<int64_t> idx_copy = idx;
    node->backward_fn = [self, ps, idx_copy, d]() {
        ps->ensure_grad();
        const double* g = self->grad.data();
        double* sg = ps->grad.data();
        // scatter-add in row order: duplicated indices accumulate deterministically
        for (size_t i = 0; i < idx_copy.size(); ++i) {
            const int64_t r = idx_copy[i];
            for (int64_t c = 0; c < d; ++c) sg[r * d + c] += g[(int64_t)i * d + c];
        }
    };
    return node;
}

TensorPtr scatter_rows(const TensorPtr& values, const std::vector<int64_t>& dst,
                       int64_t n_rows) {
    const int64_t e = values->rows(), d = values->cols();
    if ((int64_t)dst.size() != e) {
        throw std::invalid_argument("scatter_rows: index count differs from row count");
    }
    for (int64_t i : dst) {
        if (i < 0 || i >= n_rows) throw std::invalid_argument("scatter_rows: index out of range");
    }
    std::vector<double> out((size_t)n_rows * d, 0.0);
    const double* vv = values->values.data();
    for (int64_t i = 0; i < e; ++i) {
        const int64_t r = dst[i];
        for (int64_t c = 0; c < d; ++c) out[r * d + c] += vv[i * d + c];
    }
    check_finite(out, "scatter_rows");

    auto node = make_tensor({n_rows, d}, std::move(out), values->requires_grad);
    if (!node->requires_grad) return node;

    node->parents = {values};
    Tensor* self = node.get();
    TensorPtr pv = values;
    std::vector<int64_t> dst_copy = dst;
    node->backward_fn = [self, pv, dst_copy, d]() {
        pv->ensure_grad();
        const double* g = self->grad.data();
        double* vg = pv->grad.data();
        const int64_t e = (int64_t)dst_copy.size();
#pragma omp parallel for schedule(static) if ((size_t)e * d > kOmpThreshold)
        for (int64_t i = 0; i < e; ++i) {
            const int64_t r = dst_copy[i];
            for (int64_t c = 0; c < d; ++c) vg[i * d + c] += g[r * d + c];
        }
    };
    return node;
}

// ---------------------------------------------------------------------------
// segment softmax
// ---------------------------------------------------------------------------

TensorPtr segment_softmax(const TensorPtr& logits, const std::vector<int64_t>& segments) {
    const size_t e = logits->numel();
    if (segments.size() != e) {
        throw std::invalid_argument("segment_softmax: segment count differs from logit count");
    }
    if (e == 0) return make_tensor(logits->shape, {}, logits->requires_grad);

    int64_t n_seg = 0;
    for (int64_t s : segments) {
        if (s < 0) throw std::invalid_argument("segment_softmax: negative segment id");
        n_seg = std::max(n_seg, s + 1);
    }

    const double* lv = logits->values.data();
    std::vector<double> seg_max(n_seg, -std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < e; ++i) seg_max[segments[i]] = std::max(seg_max[segments[i]], lv[i]);

    std::vector<double> out(e), seg_sum(n_seg, 0.0);
    for (size_t i = 0; i < e; ++i) {
        out[i] = std::exp(lv[i] - seg_max[segments[i]]);
        seg_sum[segments[i]] += out[i];
    }
    for (size_t i = 0; i < e; ++i) out[i] /= seg_sum[segments[i]];
    check_finite(out, "segment_softmax");

    auto node = make_tensor(logits->shape, std::move(out), logits->requires_grad);
    if (!node->requires_grad) return node;

    node->parents = {logits};
    Tensor* self = node.get();
    TensorPtr pl = logits;
    std::vector<int64_t> seg_copy = segments;
    node->backward_fn = [self, pl, seg_copy, n_seg]() {
        pl->ensure_grad();
        const std::vector<double>& g = self->grad;
        const std::vector<double>& y = self->values;
        std::vector<double> seg_dot(n_seg, 0.0);
        for (size_t i = 0; i < y.size(); ++i) seg_dot[seg_copy[i]] += y[i] * g[i];
        for (size_t i = 0; i < y.size(); ++i) {
            pl->grad[i] += y[i] * (g[i] - seg_dot[seg_copy[i]]);
        }
    };
    return node;
}

// ---------------------------------------------------------------------------
// custom_grad
// ---------------------------------------------------------------------------

TensorPtr custom_grad(const TensorPtr& forward_value, const TensorPtr& surrogate) {
    if (forward_value->shape != surrogate->shape) {
        throw std::invalid_argument("custom_grad: shape mismatch");
    }
    auto node = make_tensor(forward_value->shape, forward_value->values,
                            surrogate->requires_grad);
    if (!node->requires_grad) return node;

    node->parents = {surrogate};
    Tensor* self = node.get();
    TensorPtr ps = surrogate;
    node->backward_fn = [self, ps]() {
        ps->ensure_grad();
        for (size_t i = 0; i < self->grad.size(); ++i) ps->grad[i] += self->grad[i];
    };
    return node;
}

// ---------------------------------------------------------------------------
// reductions / reshaping
// ---------------------------------------------------------------------------

TensorPtr reduce_sum(const TensorPtr& x) {
    double acc = 0.0;
    for (double v : x->values) acc += v;
    check_finite({acc}, "reduce_sum");
    auto node = make_tensor({1}, {acc}, x->requires_grad);
    if (!node->requires_grad) return node;
    node->parents = {x};
    Tensor* self = node.get();
    TensorPtr px = x;
    node->backward_fn = [self, px]() {
        px->ensure_grad();
        const double g = self->grad[0];
        for (double& d : px->grad) d += g;
    };
    return node;
}

TensorPtr reduce_mean(const TensorPtr& x) {
    if (x->numel() == 0) throw std::invalid_argument("reduce_mean: empty tensor");
    const double inv_n = 1.0 / (double)x->numel();
    double acc = 0.0;
    for (double v : x->values) acc += v;
    acc *= inv_n;
    check_finite({acc}, "reduce_mean");
    auto node = make_tensor({1}, {acc}, x->requires_grad);
    if (!node->requires_grad) return node;
    node->parents = {x};
    Tensor* self = node.get();
    TensorPtr px = x;
    node->backward_fn = [self, px, inv_n]() {
        px->ensure_grad();
        const double g = self->grad[0] * inv_n;
        for (double& d : px->grad) d += g;
    };
    return node;
}

TensorPtr concat_rows(const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
    const int64_t d = parts[0]->cols();
    int64_t total = 0;
    bool req = false;
    for (const auto& p : parts) {
        if (p->cols() != d) throw std::invalid_argument("concat_rows: column mismatch");
        total += p->rows();
        req = req || p->requires_grad;
    }
    std::vector<double> out;
    out.reserve((size_t)total * d);
    for (const auto& p : parts) out.insert(out.end(), p->values.begin(), p->values.end());

    auto node = make_tensor({total, d}, std::move(out), req);
    if (!req) return node;

    node->parents = parts;
    Tensor* self = node.get();
    std::vector<TensorPtr> held = parts;
    node->backward_fn = [self, held]() {
        size_t off = 0;
        for (const auto& p : held) {
            const size_t n = p->numel();
            if (p->requires_grad) {
                p->ensure_grad();
                for (size_t i = 0; i < n; ++i) p->grad[i] += self->grad[off + i];
            }
            off += n;
        }
    };
    return node;
}

TensorPtr concat_cols(const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    const int64_t m = parts[0]->rows();
    int64_t total = 0;
    bool req = false;
    for (const auto& p : parts) {
        if (p->rows() != m) throw std::invalid_argument("concat_cols: row mismatch");
        total += p->cols();
        req = req || p->requires_grad;
    }
    std::vector<double> out((size_t)m * total);
    int64_t off = 0;
    for (const auto& p : parts) {
        const int64_t d = p->cols();
        for (int64_t i = 0; i < m; ++i) {
            std::copy(p->values.begin() + i * d, p->values.begin() + (i + 1) * d,
                      out.begin() + i * total + off);
        }
        off += d;
    }

    auto node = make_tensor({m, total}, std::move(out), req);
    if (!req) return node;

    node->parents = parts;
    Tensor* self = node.get();
    std::vector<TensorPtr> held = parts;
    node->backward_fn = [self, held, m, total]() {
        int64_t off = 0;
        for (const auto& p : held) {
            const int64_t d = p->cols();
            if (p->requires_grad) {
                p->ensure_grad();
                for (int64_t i = 0; i < m; ++i) {
                    for (int64_t c = 0; c < d; ++c) {
                        p->grad[i * d + c] += self->grad[i * total + off + c];
                    }
                }
            }
            off += d;
        }
    };
    return node;
}

TensorPtr slice_cols(const TensorPtr& x, int64_t c0, int64_t c1) {
    const int64_t m = x->rows(), d = x->cols();
    if (c0 < 0 || c1 > d || c0 >= c1) throw std::invalid_argument("slice_cols: bad range");
    const int64_t w = c1 - c0;
    std::vector<double> out((size_t)m * w);
    for (int64_t i = 0; i < m; ++i) {
        std::copy(x->values.begin() + i * d + c0, x->values.begin() + i * d + c1,
                  out.begin() + i * w);
    }

    auto node = make_tensor({m, w}, std::move(out), x->requires_grad);
    if (!node->requires_grad) return node;

    node->parents = {x};
    Tensor* self = node.get();
    TensorPtr px = x;
    node->backward_fn = [self, px, c0, w, d, m]() {
        px->ensure_grad();
        for (int64_t i = 0; i < m; ++i) {
            for (int64_t c = 0; c < w; ++c) {
                px->grad[i * d + c0 + c] += self->grad[i * w + c];
            }
        }
    };
    return node;
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

void backward(const TensorPtr& root) {
    if (!root->requires_grad) return;  // graph with no learnable leaves: no-op
    if (!root->is_scalar()) throw std::invalid_argument("backward: root must be scalar");

    // iterative post-order DFS; order is fully determined by parent lists
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited;
    std::vector<std::pair<Tensor*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, child] = stack.back();
        if (child < node->parents.size()) {
            Tensor* p = node->parents[child++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Tensor* t : order) {
        t->ensure_grad();
        std::fill(t->grad.begin(), t->grad.end(), 0.0);
    }
    root->grad[0] = 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_fn) (*it)->backward_fn();
    }
}

}  // namespace splitgs
