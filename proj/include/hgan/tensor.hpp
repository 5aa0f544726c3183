// Dense double-precision tensors with reverse-mode automatic differentiation.
//
// Differentiation is define-by-run: while a Tape is alive on the current
// thread, every op whose inputs are tracked appends a record (op inputs,
// output, backward closure) in construction order, which is already a
// topological order. Tape::backward walks the records once in reverse and
// accumulates gradients into the leaf tensors that were created with
// requires_grad. Intermediate gradients live in per-call scratch buffers, so
// calling backward twice without zeroing doubles the leaf gradients exactly.
//
// Tensors are shared handles; copying a Tensor aliases its storage. A tensor
// produced under one tape and consumed under another is treated as a
// constant there, which is what the training code relies on to detach the
// generator and autoregressive outputs during discriminator updates.
//
// Broadcasting is limited to scalar-vs-tensor; anything else (e.g. adding a
// bias row to a matrix) goes through an explicit tile_rows.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hgan {

using Shape = std::vector<std::size_t>;

class Tape;

namespace detail {

struct TensorData {
    Shape shape;
    std::vector<double> values;
    bool requires_grad = false;
    std::vector<double> grad;     // allocated iff requires_grad
    int node_id = -1;             // record index in owner, -1 for leaves
    Tape* owner = nullptr;        // tape that produced this tensor
};

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) {
        if (e == 0) throw std::invalid_argument("tensor: zero extent");
        n *= e;
    }
    return n;
}

}  // namespace detail

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape) {
        auto d = std::make_shared<detail::TensorData>();
        d->values.assign(detail::shape_numel(shape), 0.0);
        d->shape = std::move(shape);
        return Tensor(std::move(d));
    }

    static Tensor full(Shape shape, double v) {
        Tensor t = zeros(std::move(shape));
        std::ranges::fill(t.values(), v);
        return t;
    }

    static Tensor from(std::vector<double> values, Shape shape) {
        if (values.size() != detail::shape_numel(shape))
            throw std::invalid_argument("tensor: values do not fill shape");
        auto d = std::make_shared<detail::TensorData>();
        d->values = std::move(values);
        d->shape = std::move(shape);
        return Tensor(std::move(d));
    }

    static Tensor scalar(double v) { return from({v}, {1}); }

    bool defined() const { return d_ != nullptr; }
    const Shape& shape() const { return d_->shape; }
    std::size_t rank() const { return d_->shape.size(); }
    std::size_t size() const { return d_->values.size(); }

    std::size_t rows() const {
        if (rank() != 2) throw std::invalid_argument("tensor: rows() needs rank 2");
        return d_->shape[0];
    }
    std::size_t cols() const {
        if (rank() != 2) throw std::invalid_argument("tensor: cols() needs rank 2");
        return d_->shape[1];
    }

    std::vector<double>& values() { return d_->values; }
    const std::vector<double>& values() const { return d_->values; }
    double* data() { return d_->values.data(); }
    const double* data() const { return d_->values.data(); }

    double value() const {
        if (size() != 1) throw std::invalid_argument("tensor: value() needs a scalar");
        return d_->values[0];
    }
    double operator()(std::size_t i) const { return d_->values[i]; }
    double operator()(std::size_t i, std::size_t j) const {
        return d_->values[i * cols() + j];
    }
    double& at(std::size_t i, std::size_t j) { return d_->values[i * cols() + j]; }

    std::span<const double> row(std::size_t i) const {
        return {d_->values.data() + i * cols(), cols()};
    }

    bool requires_grad() const { return d_->requires_grad; }
    Tensor& set_requires_grad(bool on) {
        d_->requires_grad = on;
        if (on)
            d_->grad.assign(d_->values.size(), 0.0);
        else
            d_->grad.clear();
        return *this;
    }
    std::vector<double>& grad() {
        if (!d_->requires_grad) throw std::logic_error("tensor: no grad buffer");
        return d_->grad;
    }
    const std::vector<double>& grad() const {
        if (!d_->requires_grad) throw std::logic_error("tensor: no grad buffer");
        return d_->grad;
    }
    void zero_grad() {
        if (d_->requires_grad) std::ranges::fill(d_->grad, 0.0);
    }

    std::shared_ptr<detail::TensorData> node() const { return d_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorData> d) : d_(std::move(d)) {}
    std::shared_ptr<detail::TensorData> d_;

    friend class Tape;
};

inline bool all_finite(const Tensor& t) {
    for (double v : t.values())
        if (!std::isfinite(v)) return false;
    if (t.requires_grad())
        for (double v : t.grad())
            if (!std::isfinite(v)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Tape

namespace detail {
inline Tape*& active_tape_slot() {
    thread_local Tape* t = nullptr;
    return t;
}
}  // namespace detail

inline Tape* active_tape() { return detail::active_tape_slot(); }

// Suspends recording on the current thread (forward passes made inside are
// constants to any surrounding tape).
class NoTapeGuard {
public:
    NoTapeGuard() : saved_(detail::active_tape_slot()) { detail::active_tape_slot() = nullptr; }
    ~NoTapeGuard() { detail::active_tape_slot() = saved_; }
    NoTapeGuard(const NoTapeGuard&) = delete;
    NoTapeGuard& operator=(const NoTapeGuard&) = delete;

private:
    Tape* saved_;
};

class Tape {
public:
    // A live Tape is the active tape of its thread for its whole lifetime.
    Tape() : prev_(detail::active_tape_slot()) { detail::active_tape_slot() = this; }
    ~Tape() { detail::active_tape_slot() = prev_; }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    using BackwardFn = std::function<void(const std::vector<double>& out_grad,
                                          const std::vector<std::vector<double>*>& in_grads)>;

    bool tracked(const Tensor& t) const {
        const auto& d = *t.node();
        return d.requires_grad || d.owner == this;
    }

    void record(std::vector<std::shared_ptr<detail::TensorData>> inputs, const Tensor& output,
                BackwardFn fn) {
        output.node()->owner = this;
        output.node()->node_id = static_cast<int>(records_.size());
        records_.push_back({std::move(inputs), std::move(fn)});
    }

    std::size_t num_records() const { return records_.size(); }

    // Accumulates d(loss)/d(leaf) into every requires_grad leaf reachable
    // from the scalar loss. Leaf gradients are added to, never overwritten.
    void backward(const Tensor& loss) {
        if (loss.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
        auto& ld = *loss.node();
        if (ld.owner != this || ld.node_id < 0) {
            // Constant or foreign loss: only a direct leaf can receive grad.
            if (ld.requires_grad) ld.grad[0] += 1.0;
            return;
        }
        std::vector<std::vector<double>> scratch(records_.size());
        scratch[ld.node_id].assign(1, 1.0);
        for (int i = ld.node_id; i >= 0; --i) {
            auto& gout = scratch[i];
            if (gout.empty()) continue;
            const auto& rec = records_[i];
            std::vector<std::vector<double>*> gin(rec.inputs.size(), nullptr);
            for (std::size_t k = 0; k < rec.inputs.size(); ++k) {
                auto& in = *rec.inputs[k];
                if (in.owner == this && in.node_id >= 0) {
                    auto& s = scratch[in.node_id];
                    if (s.empty()) s.assign(in.values.size(), 0.0);
                    gin[k] = &s;
                } else if (in.requires_grad) {
                    gin[k] = &in.grad;
                }
            }
            rec.backward(gout, gin);
            gout.clear();
            gout.shrink_to_fit();
        }
    }

private:
    struct Record {
        std::vector<std::shared_ptr<detail::TensorData>> inputs;
        BackwardFn backward;
    };
    std::vector<Record> records_;
    Tape* prev_;
};

inline void backward(const Tensor& loss) {
    auto& d = *loss.node();
    if (d.owner)
        d.owner->backward(loss);
    else if (loss.size() == 1 && d.requires_grad)
        d.grad[0] += 1.0;
    else if (loss.size() != 1)
        throw std::invalid_argument("backward: loss must be scalar");
}

// ---------------------------------------------------------------------------
// Elementwise ops

namespace detail {

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

// dfdx receives (input value, output value) and returns the local derivative.
template <class F, class D>
Tensor unary_op(const Tensor& a, F&& f, D dfdx) {
    Tensor out = Tensor::zeros(a.shape());
    const double* x = a.data();
    double* y = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) y[i] = f(x[i]);
    if (Tape* t = active_tape(); t && t->tracked(a)) {
        auto ad = a.node();
        auto od = out.node();
        t->record({ad}, out, [ad, od, dfdx](const std::vector<double>& g,
                                            const std::vector<std::vector<double>*>& gi) {
            if (!gi[0]) return;
            auto& dst = *gi[0];
            for (std::size_t i = 0; i < g.size(); ++i)
                dst[i] += g[i] * dfdx(ad->values[i], od->values[i]);
        });
    }
    return out;
}

// dfda/dfdb receive the two input values.
template <class F, class DA, class DB>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, F&& f, DA dfda, DB dfdb) {
    check_same_shape(a, b, name);
    Tensor out = Tensor::zeros(a.shape());
    const double* xa = a.data();
    const double* xb = b.data();
    double* y = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) y[i] = f(xa[i], xb[i]);
    if (Tape* t = active_tape(); t && (t->tracked(a) || t->tracked(b))) {
        auto ad = a.node();
        auto bd = b.node();
        t->record({ad, bd}, out, [ad, bd, dfda, dfdb](const std::vector<double>& g,
                                                      const std::vector<std::vector<double>*>& gi) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double va = ad->values[i], vb = bd->values[i];
                if (gi[0]) (*gi[0])[i] += g[i] * dfda(va, vb);
                if (gi[1]) (*gi[1])[i] += g[i] * dfdb(va, vb);
            }
        });
    }
    return out;
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
    return detail::binary_op(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    return detail::binary_op(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    return detail::binary_op(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

// Scalar-vs-tensor broadcasting.
inline Tensor add(const Tensor& a, double c) {
    return detail::unary_op(a, [c](double x) { return x + c; },
                            [](double, double) { return 1.0; });
}
inline Tensor mul(const Tensor& a, double c) {
    return detail::unary_op(a, [c](double x) { return x * c; },
                            [c](double, double) { return c; });
}
inline Tensor sub(const Tensor& a, double c) { return add(a, -c); }
inline Tensor sub(double c, const Tensor& a) {
    return detail::unary_op(a, [c](double x) { return c - x; },
                            [](double, double) { return -1.0; });
}

inline Tensor neg(const Tensor& a) {
    return detail::unary_op(a, [](double x) { return -x; },
                            [](double, double) { return -1.0; });
}

inline Tensor log(const Tensor& a) {
    for (double v : a.values())
        if (!(v > 0.0)) throw std::domain_error("log: non-positive input (clamp first)");
    return detail::unary_op(a, [](double x) { return std::log(x); },
                            [](double x, double) { return 1.0 / x; });
}

inline Tensor exp(const Tensor& a) {
    return detail::unary_op(a, [](double x) { return std::exp(x); },
                            [](double, double y) { return y; });
}

inline Tensor sigmoid(const Tensor& a) {
    return detail::unary_op(a,
                            [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                                           : std::exp(x) / (1.0 + std::exp(x)); },
                            [](double, double y) { return y * (1.0 - y); });
}

inline Tensor tanh(const Tensor& a) {
    return detail::unary_op(a, [](double x) { return std::tanh(x); },
                            [](double, double y) { return 1.0 - y * y; });
}

namespace detail {

// While one is alive on this thread, records the minimum |input| seen by the
// kinked activations (relu, leaky_relu, abs). Finite-difference checks use it
// to reject states whose probe interval straddles a kink.
struct KinkWatch {
    double min_abs = std::numeric_limits<double>::infinity();

    KinkWatch() : prev_(current()) { current() = this; }
    ~KinkWatch() { current() = prev_; }
    KinkWatch(const KinkWatch&) = delete;
    KinkWatch& operator=(const KinkWatch&) = delete;

    static KinkWatch*& current() {
        static thread_local KinkWatch* active = nullptr;
        return active;
    }

    static void observe(const Tensor& a) {
        KinkWatch* w = current();
        if (!w) return;
        const double* x = a.data();
        for (std::size_t i = 0; i < a.size(); ++i) w->min_abs = std::min(w->min_abs, std::abs(x[i]));
    }

private:
    KinkWatch* prev_;
};

}  // namespace detail

inline Tensor relu(const Tensor& a) {
    detail::KinkWatch::observe(a);
    return detail::unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; },
                            [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor leaky_relu(const Tensor& a, double slope = 0.2) {
    detail::KinkWatch::observe(a);
    return detail::unary_op(a, [slope](double x) { return x > 0.0 ? x : slope * x; },
                            [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

inline Tensor abs(const Tensor& a) {
    // Subgradient at 0 is taken as 0.
    detail::KinkWatch::observe(a);
    return detail::unary_op(a, [](double x) { return std::abs(x); },
                            [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

// Gradient passes through points inside [lo, hi] (boundary included).
inline Tensor clip(const Tensor& a, double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("clip: lo > hi");
    return detail::unary_op(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
                            [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

// log of a value clamped away from zero; the uniform guard for all
// discriminator log terms.
inline Tensor clamped_log(const Tensor& a, double eps = 1e-12) {
    return log(clip(a, eps, std::numeric_limits<double>::infinity()));
}

// ---------------------------------------------------------------------------
// Matrix product

namespace detail {

// C[m x n] += A[m x k] * B[k x n]
inline void mm_nn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// C[m x n] += A[m x k] * B[n x k]^T
inline void mm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
            ci[j] += s;
        }
    }
}

// C[k x n] += A[m x k]^T * B[m x n]
inline void mm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n) {
    for (std::size_t p = 0; p < m; ++p) {
        const double* ap = a + p * k;
        const double* bp = b + p * n;
        for (std::size_t i = 0; i < k; ++i) {
            const double av = ap[i];
            double* ci = c + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

}  // namespace detail

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw std::invalid_argument("matmul: rank-2 only");
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner extents disagree");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = Tensor::zeros({m, n});
    detail::mm_nn_acc(a.data(), b.data(), out.data(), m, k, n);
    if (Tape* t = active_tape(); t && (t->tracked(a) || t->tracked(b))) {
        auto ad = a.node();
        auto bd = b.node();
        t->record({ad, bd}, out, [ad, bd, m, k, n](const std::vector<double>& g,
                                                   const std::vector<std::vector<double>*>& gi) {
            if (gi[0]) detail::mm_nt_acc(g.data(), bd->values.data(), gi[0]->data(), m, n, k);
            if (gi[1]) detail::mm_tn_acc(ad->values.data(), g.data(), gi[1]->data(), m, k, n);
        });
    }
    return out;
}

// Repeats a length-c row (shape [c] or [1 x c]) n times into an [n x c]
// matrix; the explicit tiling used to add biases.
inline Tensor tile_rows(const Tensor& row, std::size_t n) {
    std::size_t c;
    if (row.rank() == 1)
        c = row.shape()[0];
    else if (row.rank() == 2 && row.rows() == 1)
        c = row.cols();
    else
        throw std::invalid_argument("tile_rows: expected a single row");
    Tensor out = Tensor::zeros({n, c});
    for (std::size_t i = 0; i < n; ++i)
        std::copy_n(row.data(), c, out.data() + i * c);
    if (Tape* t = active_tape(); t && t->tracked(row)) {
        t->record({row.node()}, out, [n, c](const std::vector<double>& g,
                                            const std::vector<std::vector<double>*>& gi) {
            if (!gi[0]) return;
            auto& dst = *gi[0];
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < c; ++j) dst[j] += g[i * c + j];
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reductions

namespace detail {

inline Tensor full_reduce(const Tensor& a, bool take_mean) {
    const std::size_t n = a.size();
    double s = 0.0;
    for (double v : a.values()) s += v;
    Tensor out = Tensor::scalar(take_mean ? s / static_cast<double>(n) : s);
    if (Tape* t = active_tape(); t && t->tracked(a)) {
        const double w = take_mean ? 1.0 / static_cast<double>(n) : 1.0;
        t->record({a.node()}, out, [w](const std::vector<double>& g,
                                       const std::vector<std::vector<double>*>& gi) {
            if (!gi[0]) return;
            for (double& d : *gi[0]) d += g[0] * w;
        });
    }
    return out;
}

inline Tensor axis_reduce(const Tensor& a, std::size_t axis, bool take_mean) {
    if (a.rank() != 2) throw std::invalid_argument("reduce: axis form needs rank 2");
    if (axis >= 2) throw std::invalid_argument("reduce: axis out of range");
    const std::size_t r = a.rows(), c = a.cols();
    const std::size_t out_len = axis == 0 ? c : r;
    const std::size_t count = axis == 0 ? r : c;
    Tensor out = Tensor::zeros({out_len});
    const double* x = a.data();
    double* y = out.data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) y[axis == 0 ? j : i] += x[i * c + j];
    const double w = take_mean ? 1.0 / static_cast<double>(count) : 1.0;
    if (take_mean)
        for (std::size_t i = 0; i < out_len; ++i) y[i] *= w;
    if (Tape* t = active_tape(); t && t->tracked(a)) {
        t->record({a.node()}, out, [r, c, axis, w](const std::vector<double>& g,
                                                   const std::vector<std::vector<double>*>& gi) {
            if (!gi[0]) return;
            auto& dst = *gi[0];
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) dst[i * c + j] += g[axis == 0 ? j : i] * w;
        });
    }
    return out;
}

}  // namespace detail

inline Tensor sum(const Tensor& a) { return detail::full_reduce(a, false); }
inline Tensor mean(const Tensor& a) { return detail::full_reduce(a, true); }
inline Tensor sum(const Tensor& a, std::size_t axis) { return detail::axis_reduce(a, axis, false); }
inline Tensor mean(const Tensor& a, std::size_t axis) { return detail::axis_reduce(a, axis, true); }

// ---------------------------------------------------------------------------
// Softmax cross-entropy (fused, numerically stable)

// Mean cross-entropy of row-wise softmax(logits) against integer labels.
inline Tensor softmax_xent(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) throw std::invalid_argument("softmax_xent: logits must be rank 2");
    const std::size_t b = logits.rows(), c = logits.cols();
    if (labels.size() != b) throw std::invalid_argument("softmax_xent: label count mismatch");
    auto probs = std::make_shared<std::vector<double>>(b * c);
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const double* x = logits.data() + i * c;
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c)
            throw std::invalid_argument("softmax_xent: label out of range");
        double mx = x[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, x[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(x[j] - mx);
        for (std::size_t j = 0; j < c; ++j) (*probs)[i * c + j] = std::exp(x[j] - mx) / z;
        loss += mx + std::log(z) - x[labels[i]];
    }
    Tensor out = Tensor::scalar(loss / static_cast<double>(b));
    if (Tape* t = active_tape(); t && t->tracked(logits)) {
        auto lbl = std::make_shared<std::vector<int>>(labels);
        t->record({logits.node()}, out,
                  [probs, lbl, b, c](const std::vector<double>& g,
                                     const std::vector<std::vector<double>*>& gi) {
                      if (!gi[0]) return;
                      auto& dst = *gi[0];
                      const double w = g[0] / static_cast<double>(b);
                      for (std::size_t i = 0; i < b; ++i)
                          for (std::size_t j = 0; j < c; ++j) {
                              double d = (*probs)[i * c + j] - ((*lbl)[i] == static_cast<int>(j));
                              dst[i * c + j] += w * d;
                          }
                  });
    }
    return out;
}

// Row-wise softmax probabilities. Forward only; never recorded.
inline Tensor softmax_rows(const Tensor& logits) {
    const std::size_t b = logits.rows(), c = logits.cols();
    Tensor out = Tensor::zeros({b, c});
    for (std::size_t i = 0; i < b; ++i) {
        const double* x = logits.data() + i * c;
        double* y = out.data() + i * c;
        double mx = x[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, x[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(x[j] - mx);
        for (std::size_t j = 0; j < c; ++j) y[j] = std::exp(x[j] - mx) / z;
    }
    if (Tape* t = active_tape(); t && t->tracked(logits)) {
        auto ad = logits.node();
        auto od = out.node();
        t->record({ad}, out, [od, b, c](const std::vector<double>& g,
                                        const std::vector<std::vector<double>*>& gi) {
            if (!gi[0]) return;
            auto& dst = *gi[0];
            for (std::size_t i = 0; i < b; ++i) {
                const double* y = od->values.data() + i * c;
                const double* gr = g.data() + i * c;
                double dot = 0.0;
                for (std::size_t j = 0; j < c; ++j) dot += gr[j] * y[j];
                for (std::size_t j = 0; j < c; ++j) dst[i * c + j] += y[j] * (gr[j] - dot);
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Finite-difference oracle

// Max over coordinates of |analytic - central difference| normalized by
// max(1, |analytic|, |numeric|). Any NaN makes the coordinate report +inf.
// x is restored on exit; its grad buffer and flag are saved and restored.
template <class F>
double gradient_check(F&& f, Tensor x, double h = 1e-5) {
    const bool was_rg = x.requires_grad();
    std::vector<double> saved_grad = was_rg ? x.grad() : std::vector<double>{};
    x.set_requires_grad(true);
    {
        Tape tape;
        Tensor loss = f(x);
        tape.backward(loss);
    }
    std::vector<double> analytic = x.grad();

    double max_err = 0.0;
    {
        NoTapeGuard ng;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double xi = x.values()[i];
            x.values()[i] = xi + h;
            const double fp = f(x).value();
            x.values()[i] = xi - h;
            const double fm = f(x).value();
            x.values()[i] = xi;
            const double numeric = (fp - fm) / (2.0 * h);
            double err;
            if (std::isnan(analytic[i]) || std::isnan(numeric)) {
                err = std::numeric_limits<double>::infinity();
            } else {
                const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
                err = std::abs(analytic[i] - numeric) / denom;
            }
            max_err = std::max(max_err, err);
        }
    }
    if (was_rg) {
        x.grad() = std::move(saved_grad);
    } else {
        x.set_requires_grad(false);
    }
    return max_err;
}

}  // namespace hgan
