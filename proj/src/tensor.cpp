#include "evt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace evt {

namespace {

std::size_t shape_numel(const std::vector<int>& shape) {
    if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

thread_local Tape* g_active_tape = nullptr;

bool grad_wanted(const Tensor& t) { return t.requires_grad(); }

// Returns true when the op should register a backward step.
template <typename... Ts>
bool tape_this(const Ts&... inputs) {
    return Tape::active() != nullptr && (grad_wanted(inputs) || ...);
}

std::span<const double> out_grad(const std::shared_ptr<TensorData>& node) {
    if (!node->grad.has_value()) return {};
    return *node->grad;
}

void accumulate(const std::shared_ptr<TensorData>& node, const std::vector<double>& g) {
    if (!node->requires_grad) return;
    if (!node->grad.has_value()) node->grad.emplace(node->data.size(), 0.0);
    auto& dst = *node->grad;
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

}  // namespace

std::string shape_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

// ---- Tensor --------------------------------------------------------------

TensorData& Tensor::check() const {
    if (!node_) throw ContractError("operation on an undefined tensor");
    return *node_;
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    auto node = std::make_shared<TensorData>();
    node->shape = std::move(shape);
    node->data.assign(n, value);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    if (data.size() != n)
        throw DimensionError("data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_string(shape));
    auto node = std::make_shared<TensorData>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

int Tensor::rows() const {
    const auto& s = shape();
    if (s.size() != 2) throw DimensionError("rows() requires a 2-D tensor, got " + shape_string(s));
    return s[0];
}

int Tensor::cols() const {
    const auto& s = shape();
    if (s.size() != 2) throw DimensionError("cols() requires a 2-D tensor, got " + shape_string(s));
    return s[1];
}

double Tensor::value() const {
    if (size() != 1) throw ContractError("value() requires a scalar tensor, got " + shape_string(shape()));
    return check().data[0];
}

double Tensor::at(int i) const { return check().data.at(static_cast<std::size_t>(i)); }

double Tensor::at(int i, int j) const {
    const int c = cols();
    return check().data.at(static_cast<std::size_t>(i) * c + j);
}

std::span<const double> Tensor::grad() const {
    const auto& node = check();
    if (!node.grad.has_value())
        throw ContractError("gradient has not been computed; run Tape::backward first");
    return *node.grad;
}

double Tensor::grad_at(int i, int j) const {
    const int c = cols();
    return grad()[static_cast<std::size_t>(i) * c + j];
}

void Tensor::zero_grad() {
    auto& node = check();
    if (node.grad.has_value()) std::fill(node.grad->begin(), node.grad->end(), 0.0);
}

void Tensor::accumulate_grad(std::span<const double> g) {
    auto& node = check();
    if (g.size() != node.data.size())
        throw DimensionError("gradient length does not match tensor size");
    if (!node.grad.has_value()) node.grad.emplace(node.data.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) (*node.grad)[i] += g[i];
}

// ---- Tape ----------------------------------------------------------------

Tape::Tape() {
    previous_ = g_active_tape;
    if (previous_ != nullptr)
        throw ContractError("nested tapes are not supported; finish the active tape first");
    g_active_tape = this;
}

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::function<void()> backward_step) {
    steps_.push_back(std::move(backward_step));
}

void Tape::backward(const Tensor& output) {
    if (output.size() != 1)
        throw ContractError("backward requires a scalar output, got " + shape_string(output.shape()));
    auto node = output.node();
    if (!node->grad.has_value()) node->grad.emplace(1, 0.0);
    (*node->grad)[0] = 1.0;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

// ---- ops -----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2)
        throw DimensionError("matmul requires 2-D tensors, got " + shape_string(a.shape()) +
                             " and " + shape_string(b.shape()));
    const int m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
    if (k != k2)
        throw DimensionError("matmul inner dimensions disagree: " + shape_string(a.shape()) +
                             " vs " + shape_string(b.shape()));
    Tensor out = Tensor::zeros({m, n});
    {
        const double* pa = a.data().data();
        const double* pb = b.data().data();
        double* po = out.mutable_data().data();
        for (int i = 0; i < m; ++i)
            for (int p = 0; p < k; ++p) {
                const double av = pa[i * k + p];
                if (av == 0.0) continue;
                const double* brow = pb + static_cast<std::size_t>(p) * n;
                double* orow = po + static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
            }
    }
    if (tape_this(a, b)) {
        out.set_requires_grad(true);
        auto an = a.node(), bn = b.node(), on = out.node();
        Tape::active()->record([an, bn, on, m, k, n] {
            auto g = out_grad(on);
            if (g.empty()) return;
            if (an->requires_grad) {
                std::vector<double> ga(an->data.size(), 0.0);
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        double s = 0.0;
                        for (int j = 0; j < n; ++j) s += g[i * n + j] * bn->data[p * n + j];
                        ga[i * k + p] = s;
                    }
                accumulate(an, ga);
            }
            if (bn->requires_grad) {
                std::vector<double> gb(bn->data.size(), 0.0);
                for (int p = 0; p < k; ++p)
                    for (int j = 0; j < n; ++j) {
                        double s = 0.0;
                        for (int i = 0; i < m; ++i) s += an->data[i * k + p] * g[i * n + j];
                        gb[p * n + j] = s;
                    }
                accumulate(bn, gb);
            }
        });
    }
    return out;
}

Tensor transpose(const Tensor& x) {
    const int m = x.rows(), n = x.cols();
    Tensor out = Tensor::zeros({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.mutable_data()[j * m + i] = x.data()[i * n + j];
    if (tape_this(x)) {
        out.set_requires_grad(true);
        auto xn = x.node(), on = out.node();
        Tape::active()->record([xn, on, m, n] {
            auto g = out_grad(on);
            if (g.empty()) return;
            std::vector<double> gx(xn->data.size());
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) gx[i * n + j] = g[j * m + i];
            accumulate(xn, gx);
        });
    }
    return out;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + " requires matching shapes, got " +
                             shape_string(a.shape()) + " and " + shape_string(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.mutable_data()[i] = a.data()[i] + b.data()[i];
    if (tape_this(a, b)) {
        out.set_requires_grad(true);
        auto an = a.node(), bn = b.node(), on = out.node();
        Tape::active()->record([an, bn, on] {
            auto g = out_grad(on);
            if (g.empty()) return;
            accumulate(an, std::vector<double>(g.begin(), g.end()));
            accumulate(bn, std::vector<double>(g.begin(), g.end()));
        });
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.mutable_data()[i] = a.data()[i] - b.data()[i];
    if (tape_this(a, b)) {
        out.set_requires_grad(true);
        auto an = a.node(), bn = b.node(), on = out.node();
        Tape::active()->record([an, bn, on] {
            auto g = out_grad(on);
            if (g.empty()) return;
            accumulate(an, std::vector<double>(g.begin(), g.end()));
            std::vector<double> gb(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] = -g[i];
            accumulate(bn, gb);
        });
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.mutable_data()[i] = a.data()[i] * b.data()[i];
    if (tape_this(a, b)) {
        out.set_requires_grad(true);
        auto an = a.node(), bn = b.node(), on = out.node();
        Tape::active()->record([an, bn, on] {
            auto g = out_grad(on);
            if (g.empty()) return;
            if (an->requires_grad) {
                std::vector<double> ga(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * bn->data[i];
                accumulate(an, ga);
            }
            if (bn->requires_grad) {
                std::vector<double> gb(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] = g[i] * an->data[i];
                accumulate(bn, gb);
            }
        });
    }
    return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "div");
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.mutable_data()[i] = a.data()[i] / b.data()[i];
    if (tape_this(a, b)) {
        out.set_requires_grad(true);
        auto an = a.node(), bn = b.node(), on = out.node();
        Tape::active()->record([an, bn, on] {
            auto g = out_grad(on);
            if (g.empty()) return;
            if (an->requires_grad) {
                std::vector<double> ga(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] / bn->data[i];
                accumulate(an, ga);
            }
            if (bn->requires_grad) {
                std::vector<double> gb(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double d = bn->data[i];
                    gb[i] = -g[i] * an->data[i] / (d * d);
                }
                accumulate(bn, gb);
            }
        });
    }
    return out;
}

Tensor scale(const Tensor& x, double c) {
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out.mutable_data()[i] = x.data()[i] * c;
    if (tape_this(x)) {
        out.set_requires_grad(true);
        auto xn = x.node(), on = out.node();
        Tape::active()->record([xn, on, c] {
            auto g = out_grad(on);
            if (g.empty()) return;
            std::vector<double> gx(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * c;
            accumulate(xn, gx);
        });
    }
    return out;
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
    const int m = x.rows(), n = x.cols();
    if (bias.shape().size() != 1 || bias.shape()[0] != n)
        throw DimensionError("add_row_bias expects bias [" + std::to_string(n) + "], got " +
                             shape_string(bias.shape()));
    Tensor out = Tensor::zeros(x.shape());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out.mutable_data()[i * n + j] = x.data()[i * n + j] + bias.data()[j];
    if (tape_this(x, bias)) {
        out.set_requires_grad(true);
        auto xn = x.node(), bn = bias.node(), on = out.node();
        Tape::active()->record([xn, bn, on, m, n] {
            auto g = out_grad(on);
            if (g.empty()) return;
            accumulate(xn, std::vector<double>(g.begin(), g.end()));
            if (bn->requires_grad) {
                std::vector<double> gb(static_cast<std::size_t>(n), 0.0);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) gb[j] += g[i * n + j];
                accumulate(bn, gb);
            }
        });
    }
    return out;
}

Tensor broadcast_row(const Tensor& v, int rows) {
    if (v.shape().size() != 1)
        throw DimensionError("broadcast_row expects a 1-D tensor, got " + shape_string(v.shape()));
    if (rows <= 0) throw DimensionError("broadcast_row requires rows >= 1");
    const int n = v.shape()[0];
    Tensor out = Tensor::zeros({rows, n});
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < n; ++j) out.mutable_data()[i * n + j] = v.data()[j];
    if (tape_this(v)) {
        out.set_requires_grad(true);
        auto vn = v.node(), on = out.node();
        Tape::active()->record([vn, on, rows, n] {
            auto g = out_grad(on);
            if (g.empty()) return;
            std::vector<double> gv(static_cast<std::size_t>(n), 0.0);
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < n; ++j) gv[j] += g[i * n + j];
            accumulate(vn, gv);
        });
    }
    return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    const int m = a.rows();
    if (b.rows() != m)
        throw DimensionError("concat_cols requires equal row counts, got " +
                             shape_string(a.shape()) + " and " + shape_string(b.shape()));
    const int p = a.cols(), q = b.cols();
    Tensor out = Tensor::zeros({m, p + q});
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < p; ++j) out.mutable_data()[i * (p + q) + j] = a.data()[i * p + j];
        for (int j = 0; j < q; ++j) out.mutable_data()[i * (p + q) + p + j] = b.data()[i * q + j];
    }
    if (tape_this(a, b)) {
        out.set_requires_grad(true);
        auto an = a.node(), bn = b.node(), on = out.node();
        Tape::active()->record([an, bn, on, m, p, q] {
            auto g = out_grad(on);
            if (g.empty()) return;
            if (an->requires_grad) {
                std::vector<double> ga(an->data.size());
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < p; ++j) ga[i * p + j] = g[i * (p + q) + j];
                accumulate(an, ga);
            }
            if (bn->requires_grad) {
                std::vector<double> gb(bn->data.size());
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < q; ++j) gb[i * q + j] = g[i * (p + q) + p + j];
                accumulate(bn, gb);
            }
        });
    }
    return out;
}

Tensor slice_cols(const Tensor& x, int start, int len) {
    const int m = x.rows(), n = x.cols();
    if (start < 0 || len <= 0 || start + len > n)
        throw DimensionError("slice_cols [" + std::to_string(start) + ", " +
                             std::to_string(start + len) + ") out of range for " +
                             shape_string(x.shape()));
    Tensor out = Tensor::zeros({m, len});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < len; ++j)
            out.mutable_data()[i * len + j] = x.data()[i * n + start + j];
    if (tape_this(x)) {
        out.set_requires_grad(true);
        auto xn = x.node(), on = out.node();
        Tape::active()->record([xn, on, m, n, start, len] {
            auto g = out_grad(on);
            if (g.empty()) return;
            std::vector<double> gx(xn->data.size(), 0.0);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < len; ++j) gx[i * n + start + j] = g[i * len + j];
            accumulate(xn, gx);
        });
    }
    return out;
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& rows) {
    const int m = x.rows(), n = x.cols();
    if (rows.empty()) throw DimensionError("gather_rows requires at least one row index");
    for (int r : rows)
        if (r < 0 || r >= m)
            throw DimensionError("gather_rows index " + std::to_string(r) +
                                 " out of range for " + shape_string(x.shape()));
    const int k = static_cast<int>(rows.size());
    Tensor out = Tensor::zeros({k, n});
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < n; ++j)
            out.mutable_data()[i * n + j] = x.data()[rows[i] * n + j];
    if (tape_this(x)) {
        out.set_requires_grad(true);
        auto xn = x.node(), on = out.node();
        auto idx = rows;
        Tape::active()->record([xn, on, idx, n] {
            auto g = out_grad(on);
            if (g.empty()) return;
            std::vector<double> gx(xn->data.size(), 0.0);
            for (std::size_t i = 0; i < idx.size(); ++i)
                for (int j = 0; j < n; ++j) gx[idx[i] * n + j] += g[i * n + j];
            accumulate(xn, gx);
        });
    }
    return out;
}

Tensor select_per_row(const Tensor& x, const std::vector<int>& cols) {
    const int m = x.rows(), n = x.cols();
    if (static_cast<int>(cols.size()) != m)
        throw DimensionError("select_per_row needs one column index per row");
    for (int c : cols)
        if (c < 0 || c >= n)
            throw DimensionError("select_per_row column " + std::to_string(c) +
                                 " out of range for " + shape_string(x.shape()));
    Tensor out = Tensor::zeros({m});
    for (int i = 0; i < m; ++i) out.mutable_data()[i] = x.data()[i * n + cols[i]];
    if (tape_this(x)) {
        out.set_requires_grad(true);
        auto xn = x.node(), on = out.node();
        auto idx = cols;
        Tape::active()->record([xn, on, idx, n] {
            auto g = out_grad(on);
            if (g.empty()) return;
            std::vector<double> gx(xn->data.size(), 0.0);
            for (std::size_t i = 0; i < idx.size(); ++i) gx[i * n + idx[i]] = g[i];
            accumulate(xn, gx);
        });
    }
    return out;
}

namespace {

Tensor unary_op(const Tensor& x, const std::function<double(double)>& fwd,
                const std::function<double(double, double)>& dvalue_dx) {
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out.mutable_data()[i] = fwd(x.data()[i]);
    if (tape_this(x)) {
        out.set_requires_grad(true);
        auto xn = x.node(), on = out.node();
        Tape::active()->record([xn, on, dvalue_dx] {
            auto g = out_grad(on);
            if (g.empty()) return;
            std::vector<double> gx(g.size());
            for (std::size_t i = 0; i < g.size(); ++i)
                gx[i] = g[i] * dvalue_dx(xn->data[i], on->data[i]);
            accumulate(xn, gx);
        });
    }
    return out;
}

double stable_sigmoid(double v) {
    if (v >= 0.0) {
        const double e = std::exp(-v);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(v);
    return e / (1.0 + e);
}

// Rows of a 1-D tensor: the whole vector is one row.
std::pair<int, int> row_view(const Tensor& x) {
    const auto& s = x.shape();
    if (s.size() == 1) return {1, s[0]};
    if (s.size() == 2) return {s[0], s[1]};
    throw DimensionError("row-wise op expects 1-D or 2-D tensor, got " + shape_string(s));
}

}  // namespace

Tensor relu(const Tensor& x) {
    return unary_op(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
    return unary_op(
        x, [](double v) { return stable_sigmoid(v); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& x) {
    return unary_op(
        x,
        [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
        [](double v, double) { return stable_sigmoid(v); });
}

Tensor softmax_rows(const Tensor& x) {
    auto [m, n] = row_view(x);
    Tensor out = Tensor::zeros(x.shape());
    for (int i = 0; i < m; ++i) {
        const double* row = x.data().data() + static_cast<std::size_t>(i) * n;
        double* orow = out.mutable_data().data() + static_cast<std::size_t>(i) * n;
        double mx = row[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        for (int j = 0; j < n; ++j) orow[j] /= sum;
    }
    if (tape_this(x)) {
        out.set_requires_grad(true);
        auto xn = x.node(), on = out.node();
        Tape::active()->record([xn, on, m, n] {
            auto g = out_grad(on);
            if (g.empty()) return;
            std::vector<double> gx(g.size());
            for (int i = 0; i < m; ++i) {
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += g[i * n + j] * on->data[i * n + j];
                for (int j = 0; j < n; ++j)
                    gx[i * n + j] = on->data[i * n + j] * (g[i * n + j] - dot);
            }
            accumulate(xn, gx);
        });
    }
    return out;
}

Tensor log_softmax_rows(const Tensor& x) {
    auto [m, n] = row_view(x);
    Tensor out = Tensor::zeros(x.shape());
    for (int i = 0; i < m; ++i) {
        const double* row = x.data().data() + static_cast<std::size_t>(i) * n;
        double* orow = out.mutable_data().data() + static_cast<std::size_t>(i) * n;
        double mx = row[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < n; ++j) sum += std::exp(row[j] - mx);
        const double lse = mx + std::log(sum);
        for (int j = 0; j < n; ++j) orow[j] = row[j] - lse;
    }
    if (tape_this(x)) {
        out.set_requires_grad(true);
        auto xn = x.node(), on = out.node();
        Tape::active()->record([xn, on, m, n] {
            auto g = out_grad(on);
            if (g.empty()) return;
            std::vector<double> gx(g.size());
            for (int i = 0; i < m; ++i) {
                double gsum = 0.0;
                for (int j = 0; j < n; ++j) gsum += g[i * n + j];
                for (int j = 0; j < n; ++j)
                    gx[i * n + j] = g[i * n + j] - std::exp(on->data[i * n + j]) * gsum;
            }
            accumulate(xn, gx);
        });
    }
    return out;
}

Tensor l2_normalize_rows(const Tensor& x) {
    auto [m, n] = row_view(x);
    constexpr double kEps = 1e-12;
    Tensor out = Tensor::zeros(x.shape());
    std::vector<double> inv_norm(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        double ss = 0.0;
        for (int j = 0; j < n; ++j) {
            const double v = x.data()[i * n + j];
            ss += v * v;
        }
        inv_norm[i] = 1.0 / std::sqrt(ss + kEps);
        for (int j = 0; j < n; ++j)
            out.mutable_data()[i * n + j] = x.data()[i * n + j] * inv_norm[i];
    }
    if (tape_this(x)) {
        out.set_requires_grad(true);
        auto xn = x.node(), on = out.node();
        Tape::active()->record([xn, on, m, n, inv_norm] {
            auto g = out_grad(on);
            if (g.empty()) return;
            std::vector<double> gx(g.size());
            for (int i = 0; i < m; ++i) {
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += g[i * n + j] * on->data[i * n + j];
                for (int j = 0; j < n; ++j)
                    gx[i * n + j] = inv_norm[i] * (g[i * n + j] - on->data[i * n + j] * dot);
            }
            accumulate(xn, gx);
        });
    }
    return out;
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias) {
    auto [m, n] = row_view(x);
    if (gain.shape() != std::vector<int>{n} || bias.shape() != std::vector<int>{n})
        throw DimensionError("layer_norm_rows expects gain/bias of width " + std::to_string(n));
    constexpr double kEps = 1e-5;
    Tensor out = Tensor::zeros(x.shape());
    std::vector<double> inv_std(static_cast<std::size_t>(m));
    std::vector<double> normalized(x.size());
    for (int i = 0; i < m; ++i) {
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += x.data()[i * n + j];
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            const double d = x.data()[i * n + j] - mean;
            var += d * d;
        }
        var /= n;
        inv_std[i] = 1.0 / std::sqrt(var + kEps);
        for (int j = 0; j < n; ++j) {
            const double z = (x.data()[i * n + j] - mean) * inv_std[i];
            normalized[i * n + j] = z;
            out.mutable_data()[i * n + j] = gain.data()[j] * z + bias.data()[j];
        }
    }
    if (tape_this(x, gain, bias)) {
        out.set_requires_grad(true);
        auto xn = x.node(), gn = gain.node(), bn = bias.node(), on = out.node();
        Tape::active()->record([xn, gn, bn, on, m, n, inv_std, normalized] {
            auto g = out_grad(on);
            if (g.empty()) return;
            if (gn->requires_grad) {
                std::vector<double> gg(static_cast<std::size_t>(n), 0.0);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) gg[j] += g[i * n + j] * normalized[i * n + j];
                accumulate(gn, gg);
            }
            if (bn->requires_grad) {
                std::vector<double> gb(static_cast<std::size_t>(n), 0.0);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) gb[j] += g[i * n + j];
                accumulate(bn, gb);
            }
            if (xn->requires_grad) {
                std::vector<double> gx(g.size());
                for (int i = 0; i < m; ++i) {
                    // dL/dz for this row, then the standard layer-norm pullback.
                    double sum_gz = 0.0, sum_gz_z = 0.0;
                    for (int j = 0; j < n; ++j) {
                        const double gz = g[i * n + j] * gn->data[j];
                        sum_gz += gz;
                        sum_gz_z += gz * normalized[i * n + j];
                    }
                    for (int j = 0; j < n; ++j) {
                        const double gz = g[i * n + j] * gn->data[j];
                        gx[i * n + j] = inv_std[i] *
                            (gz - sum_gz / n - normalized[i * n + j] * sum_gz_z / n);
                    }
                }
                accumulate(xn, gx);
            }
        });
    }
    return out;
}

Tensor sum_all(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    Tensor out = Tensor::scalar(s);
    if (tape_this(x)) {
        out.set_requires_grad(true);
        auto xn = x.node(), on = out.node();
        Tape::active()->record([xn, on] {
            auto g = out_grad(on);
            if (g.empty()) return;
            accumulate(xn, std::vector<double>(xn->data.size(), g[0]));
        });
    }
    return out;
}

Tensor mean_all(const Tensor& x) {
    return scale(sum_all(x), 1.0 / static_cast<double>(x.size()));
}

namespace {

// Direct elementwise extremum; the saturated branch copies the winning input
// bit for bit, and the subgradient routes to that input (ties go to a).
Tensor extremum(const Tensor& a, const Tensor& b, bool take_min) {
    require_same_shape(a, b, take_min ? "minimum" : "maximum");
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a.data()[i], y = b.data()[i];
        out.mutable_data()[i] = take_min ? (x <= y ? x : y) : (x >= y ? x : y);
    }
    if (tape_this(a, b)) {
        out.set_requires_grad(true);
        auto an = a.node(), bn = b.node(), on = out.node();
        Tape::active()->record([an, bn, on, take_min] {
            auto g = out_grad(on);
            if (g.empty()) return;
            std::vector<double> ga(g.size(), 0.0), gb(g.size(), 0.0);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double x = an->data[i], y = bn->data[i];
                const bool a_wins = take_min ? x <= y : x >= y;
                (a_wins ? ga : gb)[i] = g[i];
            }
            accumulate(an, ga);
            accumulate(bn, gb);
        });
    }
    return out;
}

}  // namespace

Tensor minimum(const Tensor& a, const Tensor& b) { return extremum(a, b, true); }

Tensor maximum(const Tensor& a, const Tensor& b) { return extremum(a, b, false); }

}  // namespace evt
