#pragma once

#include <cstdint>
#include <vector>

#include "addaforge/losses.hpp"
#include "addaforge/models.hpp"

namespace addaforge {

// One discriminator-step evaluation: the configured loss on a source batch
// and a target batch, with gradients for every discriminator parameter
// (stack, task head, domain head; heads unused by the variant get zeros).
// Encoders are treated as fixed feature extractors here.
struct DiscEval {
    double loss = 0.0;
    std::vector<Tensor> stack_grads;
    std::vector<Tensor> task_head_grads;
    std::vector<Tensor> domain_head_grads;
};

// mask_seed fixes the dropout corruption for REC; clean-logit variants ignore
// it. keep_prob is the corruption keep probability z.
DiscEval eval_disc_loss(DiscLossKind kind, const EncoderModel& source_enc, const EncoderModel& target_enc,
                        const DiscriminatorModel& disc, const Tensor& x_s, const std::vector<int>& y_s,
                        const Tensor& x_t, double keep_prob, std::uint64_t mask_seed,
                        bool scaled_dropout = true);

// One encoder-step evaluation: the configured loss with gradients for the
// target encoder parameters only; discriminator parameters are constant.
// x_enc is the (possibly source-regularized) batch fed through the target
// encoder; x_src feeds the frozen source encoder for the reference side.
struct EncEval {
    double loss = 0.0;
    std::vector<Tensor> encoder_grads;
};

EncEval eval_enc_loss(EncLossKind kind, DiscLossKind disc_kind, const EncoderModel& source_enc,
                      const EncoderModel& target_enc, const DiscriminatorModel& disc, const Tensor& x_src,
                      const Tensor& x_enc, double keep_prob, const KernelSpec& kernel,
                      std::uint64_t mask_seed, bool scaled_dropout = true);

}  // namespace addaforge
