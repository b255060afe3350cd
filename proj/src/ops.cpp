#include "jan/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "backprop.hpp"
#include "jan/error.hpp"

namespace jan {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
    }
}

struct ConvGeometry {
    std::size_t cin, h, w, cout, kh, kw, oh, ow, stride, pad_top, pad_left;
};

// TF-style "same" padding: total padding split with the extra cell at the end.
ConvGeometry conv_geometry(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
                           Padding padding) {
    require_rank(input, 3, "conv2d", "input");
    require_rank(kernel, 4, "conv2d", "kernel");
    require_rank(bias, 1, "conv2d", "bias");
    ConvGeometry g{};
    g.cin = input.dim(0);
    g.h = input.dim(1);
    g.w = input.dim(2);
    g.cout = kernel.dim(0);
    g.kh = kernel.dim(2);
    g.kw = kernel.dim(3);
    g.stride = stride;
    if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
    if (kernel.dim(1) != g.cin) {
        throw ShapeError("conv2d: input " + shape_string(input.shape()) + " does not match kernel " +
                         shape_string(kernel.shape()));
    }
    if (bias.dim(0) != g.cout) {
        throw ShapeError("conv2d: bias " + shape_string(bias.shape()) + " does not match kernel " +
                         shape_string(kernel.shape()));
    }
    if (padding == Padding::Same) {
        if (g.kh % 2 == 0 || g.kw % 2 == 0) {
            throw ShapeError("conv2d: same padding needs odd kernel extents, got kernel " +
                             shape_string(kernel.shape()));
        }
        g.oh = (g.h + stride - 1) / stride;
        g.ow = (g.w + stride - 1) / stride;
        std::size_t need_h = (g.oh - 1) * stride + g.kh;
        std::size_t need_w = (g.ow - 1) * stride + g.kw;
        g.pad_top = need_h > g.h ? (need_h - g.h) / 2 : 0;
        g.pad_left = need_w > g.w ? (need_w - g.w) / 2 : 0;
    } else {
        if (g.kh > g.h || g.kw > g.w) {
            throw ShapeError("conv2d: kernel " + shape_string(kernel.shape()) + " larger than input " +
                             shape_string(input.shape()) + " with valid padding");
        }
        g.oh = (g.h - g.kh) / stride + 1;
        g.ow = (g.w - g.kw) / stride + 1;
        g.pad_top = g.pad_left = 0;
    }
    return g;
}

// Output column range [lo, hi) whose input column ow*stride + kx - pad_left lies in [0, w).
inline void column_range(const ConvGeometry& g, std::size_t kx, std::size_t& lo, std::size_t& hi) {
    // iw = ow*s + kx - pl >= 0  <=>  ow >= ceil((pl - kx) / s)
    long s = static_cast<long>(g.stride);
    long off = static_cast<long>(kx) - static_cast<long>(g.pad_left);
    long first = off >= 0 ? 0 : (-off + s - 1) / s;
    // iw <= w-1  <=>  ow <= (w-1-off)/s
    long last_excl = (static_cast<long>(g.w) - 1 - off) < 0 ? 0 : (static_cast<long>(g.w) - 1 - off) / s + 1;
    last_excl = std::min<long>(last_excl, static_cast<long>(g.ow));
    lo = static_cast<std::size_t>(std::max<long>(first, 0));
    hi = static_cast<std::size_t>(std::max<long>(last_excl, static_cast<long>(lo)));
}

inline bool input_row(const ConvGeometry& g, std::size_t oy, std::size_t ky, std::size_t& iy) {
    long y = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad_top);
    if (y < 0 || y >= static_cast<long>(g.h)) return false;
    iy = static_cast<std::size_t>(y);
    return true;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias, const ConvGeometry& g) {
    Tensor out(Shape{g.cout, g.oh, g.ow});
    const double* in = input.data().data();
    const double* k = kernel.data().data();
    double* o = out.data().data();
    for (std::size_t co = 0; co < g.cout; ++co) {
        double* oplane = o + co * g.oh * g.ow;
        std::fill(oplane, oplane + g.oh * g.ow, bias[co]);
        for (std::size_t ci = 0; ci < g.cin; ++ci) {
            const double* iplane = in + ci * g.h * g.w;
            for (std::size_t ky = 0; ky < g.kh; ++ky) {
                for (std::size_t kx = 0; kx < g.kw; ++kx) {
                    const double wv = k[((co * g.cin + ci) * g.kh + ky) * g.kw + kx];
                    std::size_t lo, hi;
                    column_range(g, kx, lo, hi);
                    for (std::size_t oy = 0; oy < g.oh; ++oy) {
                        std::size_t iy;
                        if (!input_row(g, oy, ky, iy)) continue;
                        if (lo >= hi) continue;
                        double* orow = oplane + oy * g.ow + lo;
                        const double* irow = iplane + iy * g.w + (lo * g.stride + kx - g.pad_left);
                        const std::size_t n = hi - lo;
                        if (g.stride == 1) {
                            for (std::size_t j = 0; j < n; ++j) orow[j] += wv * irow[j];
                        } else {
                            for (std::size_t j = 0; j < n; ++j) orow[j] += wv * irow[j * g.stride];
                        }
                    }
                }
            }
        }
    }
    return out;
}

void conv2d_backward(const Tensor& input, const Tensor& kernel, const ConvGeometry& g, const Tensor& grad_out,
                     Tensor* grad_input, Tensor* grad_kernel, Tensor* grad_bias) {
    const double* in = input.data().data();
    const double* k = kernel.data().data();
    const double* go = grad_out.data().data();
    double* gi = grad_input ? grad_input->data().data() : nullptr;
    double* gk = grad_kernel ? grad_kernel->data().data() : nullptr;
    for (std::size_t co = 0; co < g.cout; ++co) {
        const double* gplane = go + co * g.oh * g.ow;
        if (grad_bias) {
            double s = 0.0;
            for (std::size_t i = 0; i < g.oh * g.ow; ++i) s += gplane[i];
            (*grad_bias)[co] += s;
        }
        for (std::size_t ci = 0; ci < g.cin; ++ci) {
            const double* iplane = in + ci * g.h * g.w;
            double* giplane = gi ? gi + ci * g.h * g.w : nullptr;
            for (std::size_t ky = 0; ky < g.kh; ++ky) {
                for (std::size_t kx = 0; kx < g.kw; ++kx) {
                    const std::size_t kidx = ((co * g.cin + ci) * g.kh + ky) * g.kw + kx;
                    const double wv = k[kidx];
                    std::size_t lo, hi;
                    column_range(g, kx, lo, hi);
                    double acc = 0.0;
                    for (std::size_t oy = 0; oy < g.oh; ++oy) {
                        std::size_t iy;
                        if (!input_row(g, oy, ky, iy)) continue;
                        if (lo >= hi) continue;
                        const double* grow = gplane + oy * g.ow + lo;
                        const std::size_t base = iy * g.w + (lo * g.stride + kx - g.pad_left);
                        const std::size_t n = hi - lo;
                        if (gk) {
                            const double* irow = iplane + base;
                            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * irow[j * g.stride];
                        }
                        if (giplane) {
                            double* girow = giplane + base;
                            for (std::size_t j = 0; j < n; ++j) girow[j * g.stride] += wv * grow[j];
                        }
                    }
                    if (gk) gk[kidx] += acc;
                }
            }
        }
    }
}

void check_input(const Tensor& t, const char* op) {
    if (!t.all_finite()) throw NumericError(std::string(op) + ": non-finite input");
}

Tensor maxpool_forward(const Tensor& input, std::vector<std::size_t>* argmax) {
    require_rank(input, 3, "maxpool2x2", "input");
    const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (h % 2 || w % 2) {
        throw ShapeError("maxpool2x2: spatial extents must be even, got " + shape_string(input.shape()));
    }
    Tensor out(Shape{c, h / 2, w / 2});
    if (argmax) argmax->resize(out.size());
    std::size_t o = 0;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < h / 2; ++y) {
            for (std::size_t x = 0; x < w / 2; ++x, ++o) {
                // Scan order is row-major inside the window; strict '>' keeps the first maximum.
                std::size_t best = (ch * h + 2 * y) * w + 2 * x;
                const std::size_t cand[3] = {best + 1, best + w, best + w + 1};
                for (std::size_t idx : cand) {
                    if (input[idx] > input[best]) best = idx;
                }
                out[o] = input[best];
                if (argmax) (*argmax)[o] = best;
            }
        }
    }
    return out;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require_rank(input, 1, "dense", "input");
    require_rank(weights, 2, "dense", "weights");
    require_rank(bias, 1, "dense", "bias");
    const std::size_t k = weights.dim(0), d = weights.dim(1);
    if (input.dim(0) != d) {
        throw ShapeError("dense: input " + shape_string(input.shape()) + " does not match weights " +
                         shape_string(weights.shape()));
    }
    if (bias.dim(0) != k) {
        throw ShapeError("dense: bias " + shape_string(bias.shape()) + " does not match weights " +
                         shape_string(weights.shape()));
    }
    Tensor out(Shape{k});
    for (std::size_t r = 0; r < k; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += weights[r * d + j] * input[j];
        out[r] = s + bias[r];
    }
    return out;
}

Tensor softmax_forward(const Tensor& input) {
    require_rank(input, 1, "softmax", "input");
    double mx = input[0];
    for (double v : input.data()) mx = std::max(mx, v);
    Tensor out(input.shape());
    double z = 0.0;
    for (std::size_t i = 0; i < input.size(); ++i) {
        out[i] = std::exp(input[i] - mx);
        z += out[i];
    }
    for (double& v : out.data()) v /= z;
    return out;
}

Tensor gap_forward(const Tensor& input) {
    require_rank(input, 3, "global_avg_pool", "input");
    const std::size_t c = input.dim(0), plane = input.dim(1) * input.dim(2);
    Tensor out(Shape{c});
    for (std::size_t ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) s += input[ch * plane + i];
        out[ch] = s / static_cast<double>(plane);
    }
    return out;
}

template <typename F>
Tensor map(const Tensor& input, F f) {
    Tensor out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = f(input[i]);
    return out;
}

double sigmoid_scalar(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor finite_or_throw(Tensor t, const char* op) {
    require_finite(t, op);
    return t;
}

} // namespace

// ---- eager forms -----------------------------------------------------------

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride, Padding padding) {
    const auto g = conv_geometry(input, kernel, bias, stride, padding);
    check_input(input, "conv2d");
    return finite_or_throw(conv2d_forward(input, kernel, bias, g), "conv2d");
}

Tensor maxpool2x2(const Tensor& input) {
    check_input(input, "maxpool2x2");
    return maxpool_forward(input, nullptr);
}

Tensor upsample2x2(const Tensor& input) {
    require_rank(input, 3, "upsample2x2", "input");
    check_input(input, "upsample2x2");
    const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
    Tensor out(Shape{c, 2 * h, 2 * w});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < 2 * h; ++y)
            for (std::size_t x = 0; x < 2 * w; ++x) out.at(ch, y, x) = input.at(ch, y / 2, x / 2);
    return out;
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    check_input(input, "dense");
    return finite_or_throw(dense_forward(input, weights, bias), "dense");
}

Tensor relu(const Tensor& input) {
    check_input(input, "relu");
    return map(input, [](double x) { return x > 0.0 ? x : 0.0; });
}

Tensor sigmoid(const Tensor& input) {
    check_input(input, "sigmoid");
    return map(input, sigmoid_scalar);
}

Tensor softmax(const Tensor& input) {
    check_input(input, "softmax");
    return finite_or_throw(softmax_forward(input), "softmax");
}

Tensor global_avg_pool(const Tensor& input) {
    check_input(input, "global_avg_pool");
    return gap_forward(input);
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return finite_or_throw(std::move(out), "add");
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return finite_or_throw(std::move(out), "mul");
}

Tensor scale(const Tensor& a, double factor) {
    return finite_or_throw(map(a, [factor](double x) { return factor * x; }), "scale");
}

Tensor sum(const Tensor& a) { return finite_or_throw(Tensor::scalar(a.sum()), "sum"); }

Tensor cross_entropy_raw(const Tensor& onehot, const Tensor& probs) {
    require_same_shape(onehot, probs, "cross_entropy");
    double s = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (onehot[i] != 0.0) s -= onehot[i] * std::log(std::max(probs[i], kProbFloor));
    }
    return finite_or_throw(Tensor::scalar(s), "cross_entropy");
}

Tensor mse_raw(const Tensor& target, const Tensor& predicted) {
    require_same_shape(target, predicted, "mse");
    double s = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = target[i] - predicted[i];
        s += d * d;
    }
    return finite_or_throw(Tensor::scalar(s / static_cast<double>(target.size())), "mse");
}

// ---- recording forms -------------------------------------------------------

Var conv2d(Var input, Var kernel, Var bias, std::size_t stride, Padding padding) {
    const auto g = conv_geometry(input.value(), kernel.value(), bias.value(), stride, padding);
    NodeState st;
    st.stride = stride;
    st.pad_top = g.pad_top;
    st.pad_left = g.pad_left;
    return input.tape().record(OpKind::Conv2d, {input, kernel, bias},
                               conv2d_forward(input.value(), kernel.value(), bias.value(), g), std::move(st));
}

Var maxpool2x2(Var input) {
    NodeState st;
    Tensor out = maxpool_forward(input.value(), &st.indices);
    return input.tape().record(OpKind::MaxPool2x2, {input}, std::move(out), std::move(st));
}

Var upsample2x2(Var input) { return input.tape().record(OpKind::Upsample2x2, {input}, upsample2x2(input.value())); }

Var dense(Var input, Var weights, Var bias) {
    return input.tape().record(OpKind::Dense, {input, weights, bias},
                               dense_forward(input.value(), weights.value(), bias.value()));
}

Var relu(Var input) { return input.tape().record(OpKind::Relu, {input}, relu(input.value())); }
Var sigmoid(Var input) { return input.tape().record(OpKind::Sigmoid, {input}, sigmoid(input.value())); }
Var softmax(Var input) { return input.tape().record(OpKind::Softmax, {input}, softmax_forward(input.value())); }
Var global_avg_pool(Var input) {
    return input.tape().record(OpKind::GlobalAvgPool, {input}, gap_forward(input.value()));
}
Var add(Var a, Var b) { return a.tape().record(OpKind::Add, {a, b}, add(a.value(), b.value())); }
Var mul(Var a, Var b) { return a.tape().record(OpKind::Mul, {a, b}, mul(a.value(), b.value())); }

Var scale(Var a, double factor) {
    NodeState st;
    st.factor = factor;
    return a.tape().record(OpKind::Scale, {a}, scale(a.value(), factor), std::move(st));
}

Var sum(Var a) { return a.tape().record(OpKind::Sum, {a}, sum(a.value())); }

Var cross_entropy_raw(Var onehot, Var probs) {
    return onehot.tape().record(OpKind::CrossEntropy, {onehot, probs},
                                cross_entropy_raw(onehot.value(), probs.value()));
}

Var mse_raw(Var target, Var predicted) {
    return target.tape().record(OpKind::Mse, {target, predicted}, mse_raw(target.value(), predicted.value()));
}

// ---- backward --------------------------------------------------------------

namespace detail {

void backprop(const Tape& tape, const Node& node, const Tensor& grad_out, std::span<Tensor* const> grad_in) {
    auto input = [&](std::size_t slot) -> const Tensor& { return tape.node(node.inputs[slot]).value; };
    const Tensor& y = node.value;

    switch (node.kind) {
    case OpKind::Constant:
    case OpKind::Parameter:
        return;

    case OpKind::Conv2d: {
        const Tensor& x = input(0);
        const Tensor& k = input(1);
        ConvGeometry g{};
        g.cin = x.dim(0);
        g.h = x.dim(1);
        g.w = x.dim(2);
        g.cout = k.dim(0);
        g.kh = k.dim(2);
        g.kw = k.dim(3);
        g.oh = y.dim(1);
        g.ow = y.dim(2);
        g.stride = node.state.stride;
        g.pad_top = node.state.pad_top;
        g.pad_left = node.state.pad_left;
        conv2d_backward(x, k, g, grad_out, grad_in[0], grad_in[1], grad_in[2]);
        return;
    }

    case OpKind::MaxPool2x2: {
        if (!grad_in[0]) return;
        Tensor& gi = *grad_in[0];
        for (std::size_t o = 0; o < grad_out.size(); ++o) gi[node.state.indices[o]] += grad_out[o];
        return;
    }

    case OpKind::Upsample2x2: {
        if (!grad_in[0]) return;
        Tensor& gi = *grad_in[0];
        const std::size_t c = gi.dim(0), h = gi.dim(1), w = gi.dim(2);
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t yy = 0; yy < 2 * h; ++yy)
                for (std::size_t xx = 0; xx < 2 * w; ++xx) gi.at(ch, yy / 2, xx / 2) += grad_out.at(ch, yy, xx);
        return;
    }

    case OpKind::Dense: {
        const Tensor& x = input(0);
        const Tensor& wt = input(1);
        const std::size_t k = wt.dim(0), d = wt.dim(1);
        if (grad_in[0]) {
            Tensor& gx = *grad_in[0];
            for (std::size_t r = 0; r < k; ++r)
                for (std::size_t j = 0; j < d; ++j) gx[j] += wt[r * d + j] * grad_out[r];
        }
        if (grad_in[1]) {
            Tensor& gw = *grad_in[1];
            for (std::size_t r = 0; r < k; ++r)
                for (std::size_t j = 0; j < d; ++j) gw[r * d + j] += grad_out[r] * x[j];
        }
        if (grad_in[2]) {
            Tensor& gb = *grad_in[2];
            for (std::size_t r = 0; r < k; ++r) gb[r] += grad_out[r];
        }
        return;
    }

    case OpKind::Relu: {
        if (!grad_in[0]) return;
        Tensor& gi = *grad_in[0];
        const Tensor& x = input(0);
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] > 0.0) gi[i] += grad_out[i];
        return;
    }

    case OpKind::Sigmoid: {
        if (!grad_in[0]) return;
        Tensor& gi = *grad_in[0];
        for (std::size_t i = 0; i < y.size(); ++i) gi[i] += grad_out[i] * y[i] * (1.0 - y[i]);
        return;
    }

    case OpKind::Softmax: {
        if (!grad_in[0]) return;
        Tensor& gi = *grad_in[0];
        double dot = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * grad_out[i];
        for (std::size_t i = 0; i < y.size(); ++i) gi[i] += y[i] * (grad_out[i] - dot);
        return;
    }

    case OpKind::GlobalAvgPool: {
        if (!grad_in[0]) return;
        Tensor& gi = *grad_in[0];
        const std::size_t plane = gi.dim(1) * gi.dim(2);
        const double inv = 1.0 / static_cast<double>(plane);
        for (std::size_t ch = 0; ch < gi.dim(0); ++ch)
            for (std::size_t i = 0; i < plane; ++i) gi[ch * plane + i] += grad_out[ch] * inv;
        return;
    }

    case OpKind::Add: {
        for (std::size_t s = 0; s < 2; ++s) {
            if (!grad_in[s]) continue;
            Tensor& gi = *grad_in[s];
            for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += grad_out[i];
        }
        return;
    }

    case OpKind::Mul: {
        const Tensor& a = input(0);
        const Tensor& b = input(1);
        if (grad_in[0])
            for (std::size_t i = 0; i < a.size(); ++i) (*grad_in[0])[i] += grad_out[i] * b[i];
        if (grad_in[1])
            for (std::size_t i = 0; i < b.size(); ++i) (*grad_in[1])[i] += grad_out[i] * a[i];
        return;
    }

    case OpKind::Scale: {
        if (!grad_in[0]) return;
        Tensor& gi = *grad_in[0];
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += node.state.factor * grad_out[i];
        return;
    }

    case OpKind::Sum: {
        if (!grad_in[0]) return;
        Tensor& gi = *grad_in[0];
        const double g = grad_out[0];
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g;
        return;
    }

    case OpKind::CrossEntropy: {
        const Tensor& t = input(0);
        const Tensor& p = input(1);
        const double g = grad_out[0];
        if (grad_in[0])
            for (std::size_t i = 0; i < t.size(); ++i) (*grad_in[0])[i] -= g * std::log(std::max(p[i], kProbFloor));
        if (grad_in[1])
            for (std::size_t i = 0; i < p.size(); ++i)
                if (t[i] != 0.0 && p[i] > kProbFloor) (*grad_in[1])[i] -= g * t[i] / p[i];
        return;
    }

    case OpKind::Mse: {
        const Tensor& t = input(0);
        const Tensor& p = input(1);
        const double c = 2.0 * grad_out[0] / static_cast<double>(t.size());
        if (grad_in[0])
            for (std::size_t i = 0; i < t.size(); ++i) (*grad_in[0])[i] += c * (t[i] - p[i]);
        if (grad_in[1])
            for (std::size_t i = 0; i < t.size(); ++i) (*grad_in[1])[i] -= c * (t[i] - p[i]);
        return;
    }
    }
}

} // namespace detail

} // namespace jan
