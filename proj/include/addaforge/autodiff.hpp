#pragma once

#include "addaforge/layers.hpp"
#include "addaforge/tensor.hpp"

namespace addaforge {

enum class Mode { Train, Eval };

// Everything recorded during a forward pass that backward needs:
// activations[0] is the input, activations[i + 1] the output of layer i.
// Dropout masks and pool argmax indices are recorded per layer (empty for
// layers without them, and for dropout in eval mode).
struct ForwardTrace {
    std::vector<Tensor> activations;
    std::vector<Tensor> dropout_masks;
    std::vector<std::vector<std::size_t>> pool_argmax;

    const Tensor& output() const { return activations.back(); }
};

// rng may be null unless the stack contains a dropout layer and mode is
// Train. Deterministic given (params, input, rng state).
ForwardTrace forward(const LayerStack& stack, const Tensor& input, Mode mode, Rng* rng = nullptr);

// Reverse-mode gradients for a scalar whose gradient w.r.t. the stack output
// is output_grad. param_grads aligns with stack.params().
struct GradTape {
    std::vector<Tensor> param_grads;
    Tensor input_grad;
};

GradTape backward(const LayerStack& stack, const ForwardTrace& trace, const Tensor& output_grad);

// Backward from an intermediate activation: grad_at is dL/d activations[end],
// propagated down to the input. Layers at or above `end` receive zero
// parameter gradients.
GradTape backward_from(const LayerStack& stack, const ForwardTrace& trace, std::size_t end,
                       const Tensor& grad_at);

// Elementwise AXPY into existing gradients; shapes must match.
void accumulate(std::vector<Tensor>& into, const std::vector<Tensor>& from, double scale = 1.0);

GradTape zero_tape(const LayerStack& stack, const std::vector<std::size_t>& input_shape);

}  // namespace addaforge
