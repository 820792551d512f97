#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ')';
    return os.str();
}

namespace detail {

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;  // empty until the backward pass touches it

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

}  // namespace detail

/// Dense n-dimensional array of doubles participating in the active
/// gradient tape. Copying a Tensor aliases the same storage.
class Tensor {
public:
    Tensor() : impl_(std::make_shared<detail::TensorImpl>()) {}

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        Tensor t;
        t.impl_->shape = std::move(shape);
        t.impl_->data.assign(shape_size(t.impl_->shape), 0.0);
        t.impl_->requires_grad = requires_grad;
        return t;
    }

    static Tensor full(Shape shape, double v, bool requires_grad = false) {
        Tensor t = zeros(std::move(shape), requires_grad);
        std::fill(t.impl_->data.begin(), t.impl_->data.end(), v);
        return t;
    }

    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false) {
        if (shape_size(shape) != values.size())
            throw std::invalid_argument("tensor data length " + std::to_string(values.size()) +
                                        " does not match shape " + shape_str(shape));
        Tensor t;
        t.impl_->shape = std::move(shape);
        t.impl_->data = std::move(values);
        t.impl_->requires_grad = requires_grad;
        return t;
    }

    static Tensor scalar(double v, bool requires_grad = false) {
        return from({}, {v}, requires_grad);
    }

    const Shape& shape() const { return impl_->shape; }
    std::size_t size() const { return impl_->data.size(); }
    std::size_t dim(std::size_t i) const { return impl_->shape.at(i); }
    std::size_t rank() const { return impl_->shape.size(); }

    std::vector<double>& data() { return impl_->data; }
    const std::vector<double>& data() const { return impl_->data; }
    double& at(std::size_t i) { return impl_->data[i]; }
    double at(std::size_t i) const { return impl_->data[i]; }

    double value() const {
        if (size() != 1) throw std::invalid_argument("value() requires a scalar tensor, got shape " + shape_str(shape()));
        return impl_->data[0];
    }

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool rg) { impl_->requires_grad = rg; }

    bool has_grad() const { return !impl_->grad.empty(); }
    std::vector<double>& grad() {
        impl_->ensure_grad();
        return impl_->grad;
    }
    const std::vector<double>& grad_view() const { return impl_->grad; }
    void zero_grad() { impl_->grad.clear(); }

    std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }

    bool same_storage(const Tensor& o) const { return impl_ == o.impl_; }

private:
    std::shared_ptr<detail::TensorImpl> impl_;
};

/// Append-only record of differentiable operations. One tape is active at a
/// time; ops record a node when any input requires grad. backward() replays
/// the nodes once, in reverse append order, then clears the tape.
class Tape {
public:
    Tape() : prev_(current()) { current() = this; }
    ~Tape() { current() = prev_; }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active() { return current(); }

    void record(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }

    std::size_t node_count() const { return nodes_.size(); }

    void backward(const Tensor& loss) {
        if (loss.size() != 1)
            throw std::invalid_argument("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
        loss.impl()->ensure_grad();
        loss.impl()->grad[0] = 1.0;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
        nodes_.clear();
    }

private:
    static Tape*& current() {
        thread_local Tape* cur = nullptr;
        return cur;
    }
    std::vector<std::function<void()>> nodes_;
    Tape* prev_;
};

namespace detail {

inline bool should_record(bool requires_grad) {
    return requires_grad && Tape::active() != nullptr;
}

inline Shape broadcast_shape(const Shape& a, const Shape& b) {
    std::size_t r = std::max(a.size(), b.size());
    Shape out(r, 1);
    for (std::size_t i = 0; i < r; ++i) {
        std::size_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
        std::size_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
        if (da != db && da != 1 && db != 1)
            throw std::invalid_argument("shapes " + shape_str(a) + " and " + shape_str(b) +
                                        " are not broadcast-compatible");
        out[r - 1 - i] = std::max(da, db);
    }
    return out;
}

// Strides of `in` padded to the rank of `out`, with 0 on broadcast axes.
inline std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
    std::vector<std::size_t> st(out.size(), 0);
    std::size_t stride = 1;
    for (std::size_t i = 0; i < in.size(); ++i) {
        std::size_t axis_in = in.size() - 1 - i;
        std::size_t axis_out = out.size() - 1 - i;
        st[axis_out] = (in[axis_in] == 1 && out[axis_out] != 1) ? 0 : stride;
        stride *= in[axis_in];
    }
    return st;
}

// Walks every position of `out_shape`, reporting the linear offsets into the
// two (possibly broadcast) operands.
template <typename F>
inline void for_each_broadcast(const Shape& out_shape, const Shape& a, const Shape& b, F&& f) {
    std::size_t n = shape_size(out_shape);
    auto sa = broadcast_strides(a, out_shape);
    auto sb = broadcast_strides(b, out_shape);
    std::vector<std::size_t> idx(out_shape.size(), 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < n; ++i) {
        f(i, ia, ib);
        for (std::size_t ax = out_shape.size(); ax-- > 0;) {
            idx[ax]++;
            ia += sa[ax];
            ib += sb[ax];
            if (idx[ax] < out_shape[ax]) break;
            ia -= sa[ax] * out_shape[ax];
            ib -= sb[ax] * out_shape[ax];
            idx[ax] = 0;
        }
    }
}

// Accumulates `grad` (shaped like out_shape) into target's grad buffer,
// reduce-summing over the axes target was broadcast along.
inline void accumulate_broadcast_grad(const std::shared_ptr<TensorImpl>& target,
                                      const std::vector<double>& grad, const Shape& out_shape) {
    target->ensure_grad();
    auto st = broadcast_strides(target->shape, out_shape);
    std::vector<std::size_t> idx(out_shape.size(), 0);
    std::size_t it = 0;
    std::size_t n = grad.size();
    for (std::size_t i = 0; i < n; ++i) {
        target->grad[it] += grad[i];
        for (std::size_t ax = out_shape.size(); ax-- > 0;) {
            idx[ax]++;
            it += st[ax];
            if (idx[ax] < out_shape[ax]) break;
            it -= st[ax] * out_shape[ax];
            idx[ax] = 0;
        }
    }
}

}  // namespace detail

// ---- elementwise binary ops (trailing-dimension broadcast) ----

namespace detail {

template <typename Fwd, typename Bwd>
inline Tensor binary_op(const Tensor& a, const Tensor& b, Fwd fwd, Bwd bwd) {
    Shape os = broadcast_shape(a.shape(), b.shape());
    Tensor out = Tensor::zeros(os);
    for_each_broadcast(os, a.shape(), b.shape(), [&](std::size_t i, std::size_t ia, std::size_t ib) {
        out.at(i) = fwd(a.at(ia), b.at(ib));
    });
    bool rg = a.requires_grad() || b.requires_grad();
    out.set_requires_grad(rg);
    if (should_record(rg)) {
        Tape::active()->record([ai = a.impl(), bi = b.impl(), oi = out.impl(), os, bwd]() {
            if (oi->grad.empty()) return;
            std::size_t n = oi->grad.size();
            std::vector<double> ga, gb;
            if (ai->requires_grad) ga.assign(n, 0.0);
            if (bi->requires_grad) gb.assign(n, 0.0);
            Shape sa = ai->shape, sb = bi->shape;
            for_each_broadcast(os, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
                double g = oi->grad[i];
                double da, db;
                bwd(ai->data[ia], bi->data[ib], g, da, db);
                if (!ga.empty()) ga[i] = da;
                if (!gb.empty()) gb[i] = db;
            });
            if (!ga.empty()) accumulate_broadcast_grad(ai, ga, os);
            if (!gb.empty()) accumulate_broadcast_grad(bi, gb, os);
        });
    }
    return out;
}

template <typename Fwd, typename Bwd>
inline Tensor unary_op(const Tensor& a, Fwd fwd, Bwd bwd) {
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.at(i) = fwd(a.at(i));
    out.set_requires_grad(a.requires_grad());
    if (should_record(a.requires_grad())) {
        Tape::active()->record([ai = a.impl(), oi = out.impl(), bwd]() {
            if (oi->grad.empty()) return;
            ai->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i)
                ai->grad[i] += bwd(ai->data[i], oi->data[i]) * oi->grad[i];
        });
    }
    return out;
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
    return detail::binary_op(
        a, b, [](double x, double y) { return x + y; },
        [](double, double, double g, double& da, double& db) { da = g; db = g; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    return detail::binary_op(
        a, b, [](double x, double y) { return x - y; },
        [](double, double, double g, double& da, double& db) { da = g; db = -g; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    return detail::binary_op(
        a, b, [](double x, double y) { return x * y; },
        [](double x, double y, double g, double& da, double& db) { da = g * y; db = g * x; });
}

inline Tensor div(const Tensor& a, const Tensor& b) {
    return detail::binary_op(
        a, b, [](double x, double y) { return x / y; },
        [](double x, double y, double g, double& da, double& db) {
            da = g / y;
            db = -g * x / (y * y);
        });
}

inline Tensor neg(const Tensor& a) {
    return detail::unary_op(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

inline Tensor exp_t(const Tensor& a) {
    return detail::unary_op(a, [](double x) { return std::exp(x); },
                            [](double, double y) { return y; });
}

inline Tensor log_t(const Tensor& a) {
    for (double v : a.data())
        if (v <= 0.0) throw std::domain_error("log of non-positive entry " + std::to_string(v));
    return detail::unary_op(a, [](double x) { return std::log(x); },
                            [](double x, double) { return 1.0 / x; });
}

inline Tensor sigmoid(const Tensor& a) {
    return detail::unary_op(
        a,
        [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
        [](double, double y) { return y * (1.0 - y); });
}

inline Tensor relu(const Tensor& a) {
    return detail::unary_op(a, [](double x) { return x > 0 ? x : 0.0; },
                            [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

inline Tensor square(const Tensor& a) {
    return detail::unary_op(a, [](double x) { return x * x; },
                            [](double x, double) { return 2.0 * x; });
}

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

// ---- matmul ----

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw std::invalid_argument("matmul requires rank-2 tensors, got " + shape_str(a.shape()) +
                                    " and " + shape_str(b.shape()));
    std::size_t r = a.dim(0), k = a.dim(1), k2 = b.dim(0), c = b.dim(1);
    if (k != k2)
        throw std::invalid_argument("matmul inner dimensions differ: " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
    Tensor out = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t l = 0; l < k; ++l) {
            double av = a.at(i * k + l);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < c; ++j) out.at(i * c + j) += av * b.at(l * c + j);
        }
    bool rg = a.requires_grad() || b.requires_grad();
    out.set_requires_grad(rg);
    if (detail::should_record(rg)) {
        Tape::active()->record([ai = a.impl(), bi = b.impl(), oi = out.impl(), r, k, c]() {
            if (oi->grad.empty()) return;
            const auto& g = oi->grad;
            if (ai->requires_grad) {
                ai->ensure_grad();
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t l = 0; l < k; ++l) {
                        double s = 0;
                        for (std::size_t j = 0; j < c; ++j) s += g[i * c + j] * bi->data[l * c + j];
                        ai->grad[i * k + l] += s;
                    }
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                for (std::size_t l = 0; l < k; ++l)
                    for (std::size_t j = 0; j < c; ++j) {
                        double s = 0;
                        for (std::size_t i = 0; i < r; ++i) s += ai->data[i * k + l] * g[i * c + j];
                        bi->grad[l * c + j] += s;
                    }
            }
        });
    }
    return out;
}

// ---- reductions ----

inline Tensor sum(const Tensor& a) {
    double s = std::accumulate(a.data().begin(), a.data().end(), 0.0);
    Tensor out = Tensor::scalar(s);
    out.set_requires_grad(a.requires_grad());
    if (detail::should_record(a.requires_grad())) {
        Tape::active()->record([ai = a.impl(), oi = out.impl()]() {
            if (oi->grad.empty()) return;
            ai->ensure_grad();
            for (auto& g : ai->grad) g += oi->grad[0];
        });
    }
    return out;
}

inline Tensor mean(const Tensor& a) {
    std::size_t n = a.size();
    if (n == 0) throw std::invalid_argument("mean of empty tensor");
    Tensor s = sum(a);
    return div(s, Tensor::scalar(static_cast<double>(n)));
}

namespace detail {

inline void check_axis(const Tensor& a, std::size_t axis) {
    if (axis >= a.rank())
        throw std::invalid_argument("axis " + std::to_string(axis) + " invalid for shape " +
                                    shape_str(a.shape()));
}

}  // namespace detail

/// Sum over one axis. keep_dims leaves a size-1 axis in place so the result
/// broadcasts back against the input.
inline Tensor sum(const Tensor& a, std::size_t axis, bool keep_dims = false) {
    detail::check_axis(a, axis);
    const Shape& s = a.shape();
    std::size_t outer = 1, axis_n = s[axis], inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    Shape os;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i == axis) {
            if (keep_dims) os.push_back(1);
        } else {
            os.push_back(s[i]);
        }
    }
    Tensor out = Tensor::zeros(os);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t x = 0; x < axis_n; ++x)
            for (std::size_t in = 0; in < inner; ++in)
                out.at(o * inner + in) += a.at((o * axis_n + x) * inner + in);
    out.set_requires_grad(a.requires_grad());
    if (detail::should_record(a.requires_grad())) {
        Tape::active()->record([ai = a.impl(), oi = out.impl(), outer, axis_n, inner]() {
            if (oi->grad.empty()) return;
            ai->ensure_grad();
            for (std::size_t o = 0; o < outer; ++o)
                for (std::size_t x = 0; x < axis_n; ++x)
                    for (std::size_t in = 0; in < inner; ++in)
                        ai->grad[(o * axis_n + x) * inner + in] += oi->grad[o * inner + in];
        });
    }
    return out;
}

inline Tensor mean(const Tensor& a, std::size_t axis, bool keep_dims = false) {
    detail::check_axis(a, axis);
    Tensor s = sum(a, axis, keep_dims);
    return div(s, Tensor::scalar(static_cast<double>(a.shape()[axis])));
}

// ---- reshape ----

inline Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_size(shape) != a.size())
        throw std::invalid_argument("cannot reshape " + shape_str(a.shape()) + " to " +
                                    shape_str(shape));
    Tensor out = Tensor::from(std::move(shape), a.data());
    out.set_requires_grad(a.requires_grad());
    if (detail::should_record(a.requires_grad())) {
        Tape::active()->record([ai = a.impl(), oi = out.impl()]() {
            if (oi->grad.empty()) return;
            ai->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i];
        });
    }
    return out;
}

inline Tensor transpose(const Tensor& a) {
    if (a.rank() != 2)
        throw std::invalid_argument("transpose requires a rank-2 tensor, got " + shape_str(a.shape()));
    std::size_t r = a.dim(0), c = a.dim(1);
    Tensor out = Tensor::zeros({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(j * r + i) = a.at(i * c + j);
    out.set_requires_grad(a.requires_grad());
    if (detail::should_record(a.requires_grad())) {
        Tape::active()->record([ai = a.impl(), oi = out.impl(), r, c]() {
            if (oi->grad.empty()) return;
            ai->ensure_grad();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) ai->grad[i * c + j] += oi->grad[j * r + i];
        });
    }
    return out;
}

// ---- top level backward / grad check ----

inline void backward(const Tensor& loss) {
    Tape* t = Tape::active();
    if (!t) throw std::runtime_error("backward called with no active tape");
    t->backward(loss);
}

/// Max over all leaf entries of |analytic - central difference| /
/// (|central difference| + 1e-8). `f` must be deterministic in the leaves.
inline double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> leaves,
                         double h = 1e-5) {
    std::vector<std::vector<double>> analytic;
    {
        Tape tape;
        Tensor loss = f();
        tape.backward(loss);
        for (auto& leaf : leaves) {
            analytic.push_back(leaf.has_grad() ? leaf.grad() : std::vector<double>(leaf.size(), 0.0));
            leaf.zero_grad();
        }
    }
    double worst = 0.0;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        Tensor& leaf = leaves[li];
        for (std::size_t i = 0; i < leaf.size(); ++i) {
            double saved = leaf.at(i);
            leaf.at(i) = saved + h;
            double up = f().value();
            leaf.at(i) = saved - h;
            double down = f().value();
            leaf.at(i) = saved;
            double cd = (up - down) / (2 * h);
            double err = std::abs(analytic[li][i] - cd) / (std::abs(cd) + 1e-8);
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace stn
