#include "addaforge/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "addaforge/ops.hpp"

namespace addaforge {

namespace {

struct ConvGeometry {
    std::size_t out_h = 0, out_w = 0;
    std::ptrdiff_t pad_top = 0, pad_left = 0;
};

ConvGeometry conv_geometry(const Conv2dLayer& c, std::size_t h, std::size_t w) {
    ConvGeometry g;
    if (c.padding == ConvPadding::Same) {
        g.out_h = (h + c.stride - 1) / c.stride;
        g.out_w = (w + c.stride - 1) / c.stride;
        const std::ptrdiff_t pad_h = std::max<std::ptrdiff_t>(
            0, static_cast<std::ptrdiff_t>((g.out_h - 1) * c.stride + c.kernel) - static_cast<std::ptrdiff_t>(h));
        const std::ptrdiff_t pad_w = std::max<std::ptrdiff_t>(
            0, static_cast<std::ptrdiff_t>((g.out_w - 1) * c.stride + c.kernel) - static_cast<std::ptrdiff_t>(w));
        g.pad_top = pad_h / 2;
        g.pad_left = pad_w / 2;
    } else {
        if (h < c.kernel || w < c.kernel) {
            throw std::invalid_argument("conv2d: input smaller than kernel under valid padding");
        }
        g.out_h = (h - c.kernel) / c.stride + 1;
        g.out_w = (w - c.kernel) / c.stride + 1;
    }
    return g;
}

Tensor affine_forward(const AffineLayer& a, const Tensor& input) {
    const std::size_t n = input.dim(0);
    const std::size_t flat = input.size() / n;
    if (flat != a.in) {
        throw std::invalid_argument("affine: expected input width " + std::to_string(a.in) + ", got " +
                                    shape_str(input.shape));
    }
    Tensor out({n, a.out});
    for (std::size_t r = 0; r < n; ++r) {
        const double* x = input.values.data() + r * a.in;
        double* y = out.values.data() + r * a.out;
        for (std::size_t o = 0; o < a.out; ++o) {
            const double* w = a.weight.values.data() + o * a.in;
            double acc = a.bias.values[o];
            for (std::size_t i = 0; i < a.in; ++i) acc += w[i] * x[i];
            y[o] = acc;
        }
    }
    return out;
}

Tensor conv_forward(const Conv2dLayer& c, const Tensor& input) {
    if (input.rank() != 4 || input.dim(1) != c.in_channels) {
        throw std::invalid_argument("conv2d: expected [n, " + std::to_string(c.in_channels) +
                                    ", h, w] input, got " + shape_str(input.shape));
    }
    const std::size_t n = input.dim(0), h = input.dim(2), w = input.dim(3);
    const ConvGeometry g = conv_geometry(c, h, w);
    Tensor out({n, c.out_channels, g.out_h, g.out_w});
    const std::size_t k = c.kernel;
    for (std::size_t img = 0; img < n; ++img) {
        for (std::size_t oc = 0; oc < c.out_channels; ++oc) {
            double* dst = out.values.data() + ((img * c.out_channels + oc) * g.out_h) * g.out_w;
            const double bias = c.bias.values[oc];
            for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                    double acc = bias;
                    const std::ptrdiff_t base_y = static_cast<std::ptrdiff_t>(oy * c.stride) - g.pad_top;
                    const std::ptrdiff_t base_x = static_cast<std::ptrdiff_t>(ox * c.stride) - g.pad_left;
                    for (std::size_t ic = 0; ic < c.in_channels; ++ic) {
                        const double* src = input.values.data() + ((img * c.in_channels + ic) * h) * w;
                        const double* ker = c.weight.values.data() + ((oc * c.in_channels + ic) * k) * k;
                        for (std::size_t ky = 0; ky < k; ++ky) {
                            const std::ptrdiff_t y = base_y + static_cast<std::ptrdiff_t>(ky);
                            if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
                            for (std::size_t kx = 0; kx < k; ++kx) {
                                const std::ptrdiff_t x = base_x + static_cast<std::ptrdiff_t>(kx);
                                if (x < 0 || x >= static_cast<std::ptrdiff_t>(w)) continue;
                                acc += ker[ky * k + kx] * src[y * static_cast<std::ptrdiff_t>(w) + x];
                            }
                        }
                    }
                    dst[oy * g.out_w + ox] = acc;
                }
            }
        }
    }
    return out;
}

}  // namespace

ForwardTrace forward(const LayerStack& stack, const Tensor& input, Mode mode, Rng* rng) {
    ForwardTrace trace;
    trace.activations.reserve(stack.layers.size() + 1);
    trace.activations.push_back(input);
    trace.dropout_masks.resize(stack.layers.size());
    trace.pool_argmax.resize(stack.layers.size());

    for (std::size_t li = 0; li < stack.layers.size(); ++li) {
        const Layer& layer = stack.layers[li];
        const Tensor& x = trace.activations.back();
        if (const auto* a = std::get_if<AffineLayer>(&layer)) {
            trace.activations.push_back(affine_forward(*a, x));
        } else if (std::holds_alternative<ReluLayer>(layer)) {
            Tensor y = x;
            for (double& v : y.values) v = v > 0.0 ? v : 0.0;
            trace.activations.push_back(std::move(y));
        } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
            trace.activations.push_back(conv_forward(*c, x));
        } else if (const auto* p = std::get_if<MaxPoolLayer>(&layer)) {
            if (x.rank() != 4) throw std::invalid_argument("maxpool: expected [n, c, h, w] input");
            const std::size_t n = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
            if (h < p->window || w < p->window) {
                throw std::invalid_argument("maxpool: window larger than input " + shape_str(x.shape));
            }
            const std::size_t oh = (h - p->window) / p->stride + 1;
            const std::size_t ow = (w - p->window) / p->stride + 1;
            Tensor y({n, ch, oh, ow});
            auto& argmax = trace.pool_argmax[li];
            argmax.resize(y.size());
            std::size_t oi = 0;
            for (std::size_t img = 0; img < n; ++img) {
                for (std::size_t cc = 0; cc < ch; ++cc) {
                    const double* src = x.values.data() + ((img * ch + cc) * h) * w;
                    const std::size_t plane = (img * ch + cc) * h * w;
                    for (std::size_t oy = 0; oy < oh; ++oy) {
                        for (std::size_t ox = 0; ox < ow; ++ox, ++oi) {
                            std::size_t best = (oy * p->stride) * w + ox * p->stride;
                            double best_v = src[best];
                            for (std::size_t ky = 0; ky < p->window; ++ky) {
                                for (std::size_t kx = 0; kx < p->window; ++kx) {
                                    const std::size_t idx = (oy * p->stride + ky) * w + ox * p->stride + kx;
                                    if (src[idx] > best_v) {
                                        best_v = src[idx];
                                        best = idx;
                                    }
                                }
                            }
                            y.values[oi] = best_v;
                            argmax[oi] = plane + best;
                        }
                    }
                }
            }
            trace.activations.push_back(std::move(y));
        } else if (const auto* d = std::get_if<DropoutLayer>(&layer)) {
            if (mode == Mode::Eval) {
                trace.activations.push_back(x);
            } else {
                if (rng == nullptr) {
                    throw std::invalid_argument("forward: dropout layer in train mode requires an rng");
                }
                Tensor mask = dropout_mask(x.shape, d->keep_prob, *rng);
                Tensor y = x;
                for (std::size_t i = 0; i < y.size(); ++i) y.values[i] *= mask.values[i];
                trace.dropout_masks[li] = std::move(mask);
                trace.activations.push_back(std::move(y));
            }
        } else if (std::holds_alternative<SoftmaxLayer>(layer)) {
            trace.activations.push_back(softmax(x));
        }
    }
    return trace;
}

GradTape zero_tape(const LayerStack& stack, const std::vector<std::size_t>& input_shape) {
    GradTape tape;
    for (const Tensor* p : stack.params()) tape.param_grads.emplace_back(p->shape);
    tape.input_grad = Tensor(input_shape);
    return tape;
}

GradTape backward_from(const LayerStack& stack, const ForwardTrace& trace, std::size_t end,
                       const Tensor& grad_at) {
    if (trace.activations.size() != stack.layers.size() + 1) {
        throw std::invalid_argument("backward: trace does not match stack (stale or missing activations)");
    }
    if (end > stack.layers.size()) throw std::invalid_argument("backward: end index out of range");
    if (grad_at.shape != trace.activations[end].shape) {
        throw std::invalid_argument("backward: gradient shape " + shape_str(grad_at.shape) +
                                    " does not match activation shape " +
                                    shape_str(trace.activations[end].shape));
    }

    GradTape tape = zero_tape(stack, trace.activations.front().shape);

    // Map layer index -> position of its first param grad.
    std::vector<std::size_t> param_base(stack.layers.size(), 0);
    std::size_t pi = 0;
    for (std::size_t li = 0; li < stack.layers.size(); ++li) {
        param_base[li] = pi;
        if (std::holds_alternative<AffineLayer>(stack.layers[li]) ||
            std::holds_alternative<Conv2dLayer>(stack.layers[li])) {
            pi += 2;
        }
    }

    Tensor grad = grad_at;
    for (std::size_t step = end; step-- > 0;) {
        const Layer& layer = stack.layers[step];
        const Tensor& x = trace.activations[step];
        if (const auto* a = std::get_if<AffineLayer>(&layer)) {
            const std::size_t n = x.dim(0);
            Tensor& dw = tape.param_grads[param_base[step]];
            Tensor& db = tape.param_grads[param_base[step] + 1];
            Tensor dx(x.shape);
            for (std::size_t r = 0; r < n; ++r) {
                const double* xr = x.values.data() + r * a->in;
                const double* g = grad.values.data() + r * a->out;
                double* dxr = dx.values.data() + r * a->in;
                for (std::size_t o = 0; o < a->out; ++o) {
                    const double go = g[o];
                    db.values[o] += go;
                    double* dwo = dw.values.data() + o * a->in;
                    const double* wo = a->weight.values.data() + o * a->in;
                    for (std::size_t i = 0; i < a->in; ++i) {
                        dwo[i] += go * xr[i];
                        dxr[i] += go * wo[i];
                    }
                }
            }
            grad = std::move(dx);
        } else if (std::holds_alternative<ReluLayer>(layer)) {
            Tensor dx = grad;
            for (std::size_t i = 0; i < dx.size(); ++i) {
                if (x.values[i] <= 0.0) dx.values[i] = 0.0;
            }
            grad = std::move(dx);
        } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
            const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
            const ConvGeometry geo = conv_geometry(*c, h, w);
            const std::size_t k = c->kernel;
            Tensor& dw = tape.param_grads[param_base[step]];
            Tensor& db = tape.param_grads[param_base[step] + 1];
            Tensor dx(x.shape);
            for (std::size_t img = 0; img < n; ++img) {
                for (std::size_t oc = 0; oc < c->out_channels; ++oc) {
                    const double* g = grad.values.data() + ((img * c->out_channels + oc) * geo.out_h) * geo.out_w;
                    for (std::size_t oy = 0; oy < geo.out_h; ++oy) {
                        for (std::size_t ox = 0; ox < geo.out_w; ++ox) {
                            const double go = g[oy * geo.out_w + ox];
                            if (go == 0.0) continue;
                            db.values[oc] += go;
                            const std::ptrdiff_t base_y = static_cast<std::ptrdiff_t>(oy * c->stride) - geo.pad_top;
                            const std::ptrdiff_t base_x = static_cast<std::ptrdiff_t>(ox * c->stride) - geo.pad_left;
                            for (std::size_t ic = 0; ic < c->in_channels; ++ic) {
                                const double* src = x.values.data() + ((img * c->in_channels + ic) * h) * w;
                                double* dsrc = dx.values.data() + ((img * c->in_channels + ic) * h) * w;
                                const double* ker = c->weight.values.data() + ((oc * c->in_channels + ic) * k) * k;
                                double* dker = dw.values.data() + ((oc * c->in_channels + ic) * k) * k;
                                for (std::size_t ky = 0; ky < k; ++ky) {
                                    const std::ptrdiff_t y = base_y + static_cast<std::ptrdiff_t>(ky);
                                    if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
                                    for (std::size_t kx = 0; kx < k; ++kx) {
                                        const std::ptrdiff_t xx = base_x + static_cast<std::ptrdiff_t>(kx);
                                        if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
                                        const std::size_t si = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(xx);
                                        dker[ky * k + kx] += go * src[si];
                                        dsrc[si] += go * ker[ky * k + kx];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            grad = std::move(dx);
        } else if (std::holds_alternative<MaxPoolLayer>(layer)) {
            const auto& argmax = trace.pool_argmax[step];
            if (argmax.size() != grad.size()) {
                throw std::invalid_argument("backward: maxpool trace missing or stale");
            }
            Tensor dx(x.shape);
            for (std::size_t i = 0; i < grad.size(); ++i) dx.values[argmax[i]] += grad.values[i];
            grad = std::move(dx);
        } else if (std::holds_alternative<DropoutLayer>(layer)) {
            const Tensor& mask = trace.dropout_masks[step];
            if (mask.size() == 0) {
                // eval-mode trace: identity
            } else {
                for (std::size_t i = 0; i < grad.size(); ++i) grad.values[i] *= mask.values[i];
            }
        } else if (std::holds_alternative<SoftmaxLayer>(layer)) {
            grad = softmax_backward(trace.activations[step + 1], grad);
        }
    }
    tape.input_grad = std::move(grad);
    return tape;
}

GradTape backward(const LayerStack& stack, const ForwardTrace& trace, const Tensor& output_grad) {
    return backward_from(stack, trace, stack.layers.size(), output_grad);
}

void accumulate(std::vector<Tensor>& into, const std::vector<Tensor>& from, double scale) {
    if (into.size() != from.size()) throw std::invalid_argument("accumulate: tape size mismatch");
    for (std::size_t i = 0; i < into.size(); ++i) {
        if (!into[i].same_shape(from[i])) throw std::invalid_argument("accumulate: gradient shape mismatch");
        for (std::size_t j = 0; j < into[i].size(); ++j) into[i].values[j] += scale * from[i].values[j];
    }
}

}  // namespace addaforge
