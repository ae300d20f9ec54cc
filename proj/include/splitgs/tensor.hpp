#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace splitgs {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense row-major f64 tensor participating in a dynamically built reverse-mode
/// graph. Values are immutable once an op has consumed the tensor; `grad` is
/// (re)populated by backward(). Graphs are per-forward-pass and confined to one
/// thread, though individual ops may parallelize internally over elements with
/// a fixed reduction order so results stay bit-reproducible.
class Tensor {
public:
    std::vector<int64_t> shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until backward touches this node
    bool requires_grad = false;

    // graph edges; backward_fn adds into parents' grads using this->grad
    std::vector<TensorPtr> parents;
    std::function<void()> backward_fn;

    Tensor() = default;
    Tensor(std::vector<int64_t> shp, std::vector<double> vals, bool req_grad);

    size_t numel() const { return values.size(); }
    bool is_scalar() const { return values.size() == 1; }
    double scalar() const;

    // 2-D accessors (throw if rank != 2)
    int64_t rows() const;
    int64_t cols() const;

    void ensure_grad();  // allocate zero-filled grad buffer if absent
};

TensorPtr make_tensor(std::vector<int64_t> shape, std::vector<double> values,
                      bool requires_grad = false);
TensorPtr constant(std::vector<int64_t> shape, double fill);
TensorPtr scalar_tensor(double v);
// learnable leaf
TensorPtr param(std::vector<int64_t> shape, std::vector<double> values);

// ---- elementwise ops ---------------------------------------------------
// Broadcasting is restricted to equal shapes and scalar-with-array.
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr div(const TensorPtr& a, const TensorPtr& b);
TensorPtr exp(const TensorPtr& x);
TensorPtr log(const TensorPtr& x);
TensorPtr tanh(const TensorPtr& x);
TensorPtr sigmoid(const TensorPtr& x);
TensorPtr leaky_relu(const TensorPtr& x, double slope = 0.2);
TensorPtr abs(const TensorPtr& x);
// subgradient at 0 is defined as 0 so coincident-point distances stay finite
TensorPtr sqrt(const TensorPtr& x);

/// Dispatch-style entry point mirroring the named wrappers above.
enum class EwOp { add, sub, mul, div, exp, log, tanh, sigmoid, leaky_relu, abs, sqrt };
TensorPtr elementwise(EwOp op, const TensorPtr& a, const TensorPtr& b = nullptr,
                      double slope = 0.2);

// ---- linear algebra / structure ops -------------------------------------
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);

/// Row selection from a 2-D tensor; backward scatter-adds into source rows
/// (duplicated indices accumulate).
TensorPtr gather_rows(const TensorPtr& src, const std::vector<int64_t>& idx);

/// Adjoint of gather_rows: sums value rows into dst rows of an [n_rows, d]
/// output. Accumulation runs in input order, so results are deterministic.
TensorPtr scatter_rows(const TensorPtr& values, const std::vector<int64_t>& dst,
                       int64_t n_rows);

/// Softmax normalized independently within each segment (per-segment max
/// subtraction for stability). `segments[i]` is the destination id of entry i.
TensorPtr segment_softmax(const TensorPtr& logits, const std::vector<int64_t>& segments);

/// Forward pass returns forward_value's values; backward routes the incoming
/// gradient entirely into surrogate's graph (forward_value receives none).
/// Equivalent to surrogate + sg(forward_value - surrogate).
TensorPtr custom_grad(const TensorPtr& forward_value, const TensorPtr& surrogate);

TensorPtr reduce_sum(const TensorPtr& x);
TensorPtr reduce_mean(const TensorPtr& x);
TensorPtr concat_rows(const std::vector<TensorPtr>& parts);
TensorPtr concat_cols(const std::vector<TensorPtr>& parts);
TensorPtr slice_cols(const TensorPtr& x, int64_t c0, int64_t c1);

/// Reverse topological sweep from a scalar root. Zeroes grads of every node in
/// the closure first, then accumulates additively across fan-out. No-op when
/// the root does not require grad.
void backward(const TensorPtr& root);

// throws if any value is NaN/Inf; used by every op on its outputs
void check_finite(const std::vector<double>& v, const char* op_name);

}  // namespace splitgs
