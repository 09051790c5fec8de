#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evt/common.hpp"

namespace evt {

// Dense 64-bit float tensor with row-major storage. Values are immutable once
// an op has consumed the tensor; only the grad buffer mutates during backward.
// Gradients are recorded onto the thread's active Tape (define-by-run).
struct TensorData {
    std::vector<int> shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::optional<std::vector<double>> grad;
};

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                            bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return check().shape; }
    std::size_t size() const { return check().data.size(); }
    bool is_scalar() const { return size() == 1; }
    bool is_matrix() const { return shape().size() == 2; }
    int rows() const;
    int cols() const;

    double value() const;          // scalar tensors only
    double at(int i) const;        // flat index
    double at(int i, int j) const; // 2-D index

    std::span<const double> data() const { return check().data; }
    // Direct mutation is reserved for initialization, optimizers and the
    // finite-difference prober; never mutate a tensor that already fed an op
    // on a live tape.
    std::span<double> mutable_data() { return check().data; }

    bool requires_grad() const { return check().requires_grad; }
    void set_requires_grad(bool v) { check().requires_grad = v; }

    bool has_grad() const { return check().grad.has_value(); }
    std::span<const double> grad() const;
    double grad_at(int i) const { return grad()[static_cast<std::size_t>(i)]; }
    double grad_at(int i, int j) const;
    void zero_grad();
    void accumulate_grad(std::span<const double> g);

    const std::shared_ptr<TensorData>& node() const { return node_; }
    bool same_storage(const Tensor& other) const { return node_ == other.node_; }

private:
    explicit Tensor(std::shared_ptr<TensorData> node) : node_(std::move(node)) {}
    TensorData& check() const;

    std::shared_ptr<TensorData> node_;
};

std::string shape_string(const std::vector<int>& shape);

// Ordered record of executed operations. Constructing a Tape makes it the
// active tape for the current thread; ops whose inputs require grad append a
// backward step. backward() replays the steps in exact reverse execution
// order, which also makes gradient accumulation deterministic.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    void record(std::function<void()> backward_step);
    void backward(const Tensor& output);
    std::size_t recorded_ops() const { return steps_.size(); }

private:
    std::vector<std::function<void()>> steps_;
    Tape* previous_ = nullptr;
};

// ---- differentiable ops -------------------------------------------------
// All ops produce fresh tensors; broadcasting is limited to the explicit
// row-wise forms below.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);
Tensor add_row_bias(const Tensor& x, const Tensor& bias); // [m×n] + [n]
Tensor broadcast_row(const Tensor& v, int rows);          // [n] -> [rows×n]
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& x, int start, int len);
Tensor gather_rows(const Tensor& x, const std::vector<int>& rows);
Tensor select_per_row(const Tensor& x, const std::vector<int>& cols); // -> [m]
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x);
Tensor l2_normalize_rows(const Tensor& x);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

// Elementwise min/max; the subgradient routes to the winning input (ties to a).
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b);

}  // namespace evt
