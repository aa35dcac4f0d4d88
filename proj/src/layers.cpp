#include "addaforge/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace addaforge {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, ConvPadding padding) {
    if (padding == ConvPadding::Same) {
        return (in + stride - 1) / stride;
    }
    if (in < kernel) throw std::invalid_argument("conv input smaller than kernel under valid padding");
    return (in - kernel) / stride + 1;
}

}  // namespace

const char* layer_name(const Layer& layer) {
    return std::visit(Overloaded{[](const AffineLayer&) { return "affine"; },
                                 [](const ReluLayer&) { return "relu"; },
                                 [](const Conv2dLayer&) { return "conv2d"; },
                                 [](const MaxPoolLayer&) { return "maxpool"; },
                                 [](const DropoutLayer&) { return "dropout"; },
                                 [](const SoftmaxLayer&) { return "softmax"; }},
                      layer);
}

std::vector<Tensor*> LayerStack::params() {
    std::vector<Tensor*> out;
    for (Layer& layer : layers) {
        if (auto* a = std::get_if<AffineLayer>(&layer)) {
            out.push_back(&a->weight);
            out.push_back(&a->bias);
        } else if (auto* c = std::get_if<Conv2dLayer>(&layer)) {
            out.push_back(&c->weight);
            out.push_back(&c->bias);
        }
    }
    return out;
}

std::vector<const Tensor*> LayerStack::params() const {
    std::vector<const Tensor*> out;
    for (const Layer& layer : layers) {
        if (const auto* a = std::get_if<AffineLayer>(&layer)) {
            out.push_back(&a->weight);
            out.push_back(&a->bias);
        } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
            out.push_back(&c->weight);
            out.push_back(&c->bias);
        }
    }
    return out;
}

std::vector<const Tensor*> LayerStack::weight_matrices() const {
    std::vector<const Tensor*> out;
    for (const Layer& layer : layers) {
        if (const auto* a = std::get_if<AffineLayer>(&layer)) {
            out.push_back(&a->weight);
        } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
            out.push_back(&c->weight);
        }
    }
    return out;
}

std::size_t LayerStack::param_count() const {
    std::size_t n = 0;
    for (const Tensor* p : params()) n += p->size();
    return n;
}

LayerStack make_affine(std::size_t in, std::size_t out) {
    AffineLayer a;
    a.in = in;
    a.out = out;
    a.weight = Tensor({out, in});
    a.bias = Tensor({out});
    LayerStack stack;
    stack.layers.emplace_back(std::move(a));
    return stack;
}

LayerStack make_mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
    LayerStack stack;
    std::size_t width = in;
    for (std::size_t h : hidden) {
        AffineLayer a;
        a.in = width;
        a.out = h;
        a.weight = Tensor({h, width});
        a.bias = Tensor({h});
        stack.layers.emplace_back(std::move(a));
        stack.layers.emplace_back(ReluLayer{});
        width = h;
    }
    AffineLayer last;
    last.in = width;
    last.out = out;
    last.weight = Tensor({out, width});
    last.bias = Tensor({out});
    stack.layers.emplace_back(std::move(last));
    return stack;
}

void init_params(LayerStack& stack, Rng& rng) {
    for (Layer& layer : stack.layers) {
        if (auto* a = std::get_if<AffineLayer>(&layer)) {
            const double limit = std::sqrt(6.0 / static_cast<double>(a->in));
            for (double& w : a->weight.values) w = uniform(rng, -limit, limit);
            for (double& b : a->bias.values) b = 0.0;
        } else if (auto* c = std::get_if<Conv2dLayer>(&layer)) {
            const double fan_in = static_cast<double>(c->in_channels * c->kernel * c->kernel);
            const double limit = std::sqrt(6.0 / fan_in);
            for (double& w : c->weight.values) w = uniform(rng, -limit, limit);
            for (double& b : c->bias.values) b = 0.0;
        }
    }
}

std::vector<std::size_t> output_shape(const LayerStack& stack, std::vector<std::size_t> shape) {
    for (std::size_t li = 0; li < stack.layers.size(); ++li) {
        const Layer& layer = stack.layers[li];
        const std::string where = "layer " + std::to_string(li) + " (" + layer_name(layer) + ")";
        if (const auto* a = std::get_if<AffineLayer>(&layer)) {
            const std::size_t flat = shape_numel(shape) / shape[0];
            if (flat != a->in) {
                throw std::invalid_argument(where + ": expected input width " + std::to_string(a->in) +
                                            ", got " + shape_str(shape));
            }
            shape = {shape[0], a->out};
        } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
            if (shape.size() != 4 || shape[1] != c->in_channels) {
                throw std::invalid_argument(where + ": expected [n, " + std::to_string(c->in_channels) +
                                            ", h, w] input, got " + shape_str(shape));
            }
            shape = {shape[0], c->out_channels, conv_out_extent(shape[2], c->kernel, c->stride, c->padding),
                     conv_out_extent(shape[3], c->kernel, c->stride, c->padding)};
        } else if (const auto* p = std::get_if<MaxPoolLayer>(&layer)) {
            if (shape.size() != 4 || shape[2] < p->window || shape[3] < p->window) {
                throw std::invalid_argument(where + ": expected [n, c, h, w] input with h, w >= window, got " +
                                            shape_str(shape));
            }
            shape = {shape[0], shape[1], (shape[2] - p->window) / p->stride + 1,
                     (shape[3] - p->window) / p->stride + 1};
        }
        // relu/dropout/softmax preserve shape
    }
    return shape;
}

bool params_equal(const LayerStack& a, const LayerStack& b) {
    const auto pa = a.params();
    const auto pb = b.params();
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (pa[i]->shape != pb[i]->shape || pa[i]->values != pb[i]->values) return false;
    }
    return true;
}

}  // namespace addaforge
