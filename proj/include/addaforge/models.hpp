#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "addaforge/autodiff.hpp"
#include "addaforge/layers.hpp"
#include "addaforge/tensor.hpp"

namespace addaforge {

enum class ArchPreset { MlpSynthetic, DigitsSmall };

ArchPreset arch_preset_from_string(const std::string& name);
std::string to_string(ArchPreset preset);

struct ArchSpec {
    ArchPreset preset = ArchPreset::MlpSynthetic;
    // mlp-synthetic: input width and hidden widths (the K-way output affine
    // is appended by the builder).
    std::size_t input_dim = 2;
    std::vector<std::size_t> hidden = {32};
    // digits-small: Conv(5,32) -> Pool(2,2) -> Conv(5,48) -> FC(100) -> FC(K)
    // on single-channel image_size x image_size inputs.
    std::size_t image_size = 28;
    std::size_t image_channels = 1;
};

// Encoder mapping inputs to K-way logits; the classifier on top is plain
// softmax.
struct EncoderModel {
    LayerStack stack;
    bool frozen = false;
    std::size_t num_classes = 0;
    ArchSpec arch;
};

EncoderModel build_encoder(const ArchSpec& arch, std::size_t num_classes, std::uint64_t seed);

// Deep copy with theta_t := theta_s; the clone is unfrozen and later updates
// to it leave the source untouched.
EncoderModel clone_into_target(const EncoderModel& source);

// Inserts the channel axis for [n, h, w] batches fed to conv stacks.
Tensor prepare_input(const LayerStack& stack, const Tensor& batch);

// Eval-mode logits (dropout sites are identity).
Tensor encoder_logits(const EncoderModel& model, const Tensor& batch);

// Per-row argmax of the logits; ties break toward the lowest class index.
std::vector<int> predict(const EncoderModel& model, const Tensor& batch);

// [n x K] posteriors -> [n x K+1] with an exact zero appended; rows must sum
// to 1 within 1e-9.
Tensor zero_concat(const Tensor& posteriors);

// Discriminator D = C_d(E_d): K logits -> hidden stack -> K+1 logits, softmax
// on top. The task (K-way) and domain (2-way) heads attach at the last hidden
// activation f(h) and are used by the MULTI / ADDA loss variants only.
struct DiscriminatorModel {
    LayerStack stack;
    LayerStack task_head;
    LayerStack domain_head;
    std::size_t feature_index = 0;  // activation index of f(h) in a stack trace
    double l1_lambda = 0.0;
    std::size_t num_classes = 0;

    std::vector<Tensor*> all_params();
    std::vector<const Tensor*> all_params() const;
};

DiscriminatorModel build_discriminator(std::size_t num_classes, const std::vector<std::size_t>& hidden,
                                       double l1_lambda, std::uint64_t seed);

struct DiscriminatorOutputs {
    Tensor q;         // [n x K+1] softmax posteriors
    Tensor features;  // f(h), the last hidden activation
    Tensor logits;    // h_d, pre-softmax [n x K+1]
};

// Runs the discriminator on logits corrupted by dropout with the given keep
// probability; seed fixes the corruption mask.
DiscriminatorOutputs discriminator_posteriors(const DiscriminatorModel& disc, const Tensor& encoder_logits,
                                              double keep_prob, std::uint64_t seed);

}  // namespace addaforge
