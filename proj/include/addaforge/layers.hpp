#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "addaforge/rng.hpp"
#include "addaforge/tensor.hpp"

namespace addaforge {

enum class ConvPadding : std::uint8_t { Valid = 0, Same = 1 };

// weight is [out, in]; y = x W^T + b on [n, in] inputs (trailing dims of the
// input are flattened).
struct AffineLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    Tensor weight;
    Tensor bias;
};

struct ReluLayer {};

// weight is [out_channels, in_channels, kernel, kernel]; acts on
// [n, in_channels, h, w] inputs.
struct Conv2dLayer {
    std::size_t kernel = 0;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t stride = 1;
    ConvPadding padding = ConvPadding::Same;
    Tensor weight;
    Tensor bias;
};

struct MaxPoolLayer {
    std::size_t window = 0;
    std::size_t stride = 0;
};

// Corruption site inside a stack; identity in eval mode, inverted dropout in
// train mode.
struct DropoutLayer {
    double keep_prob = 1.0;
};

struct SoftmaxLayer {};

using Layer = std::variant<AffineLayer, ReluLayer, Conv2dLayer, MaxPoolLayer, DropoutLayer, SoftmaxLayer>;

const char* layer_name(const Layer& layer);

struct LayerStack {
    std::vector<Layer> layers;

    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
    // Weight matrices only (affine/conv), excluding biases; the L1 penalty
    // applies to these.
    std::vector<const Tensor*> weight_matrices() const;
    std::size_t param_count() const;
};

LayerStack make_affine(std::size_t in, std::size_t out);

// Stack in -> hidden[0] -> ReLU -> ... -> out with a ReLU after every hidden
// affine and none after the last.
LayerStack make_mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out);

// He-style init: weights uniform in +-sqrt(6/fan_in), biases zero.
void init_params(LayerStack& stack, Rng& rng);

// Shape of the stack's output for the given input shape; throws a
// descriptive error if adjacent layers do not compose.
std::vector<std::size_t> output_shape(const LayerStack& stack, std::vector<std::size_t> input_shape);

bool params_equal(const LayerStack& a, const LayerStack& b);

}  // namespace addaforge
