#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "addaforge/adam.hpp"
#include "addaforge/adversarial.hpp"
#include "addaforge/datasets.hpp"
#include "addaforge/kernels.hpp"
#include "addaforge/losses.hpp"
#include "addaforge/models.hpp"

namespace addaforge {

struct PretrainConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    std::size_t iters = 10000;
    std::size_t batch = 128;
};

struct AdaptSettings {
    double lr = 0.0002;
    double beta1 = 0.5;
    double beta2 = 0.999;
    std::size_t iters = 10000;
    std::size_t batch_per_domain = 128;
    double keep_prob = 0.7;      // dropout keep probability z
    bool dropout_scaled = true;  // inverted dropout; false keeps units unscaled
    double l1_lambda = 0.001;    // L1 coefficient on discriminator weights
    KernelSpec kernel;
    DiscLossKind disc_loss = DiscLossKind::Rec;
    EncLossKind enc_loss = EncLossKind::MmdPq;
    bool target_reg = false;
    double val_fraction = 0.05;
    std::size_t val_every = 100;
    std::size_t disc_updates = 1;  // update ratio disc:enc per iteration
    std::size_t enc_updates = 1;
    std::vector<std::size_t> disc_hidden = {500, 500};
};

// Step 1: supervised cross-entropy training of encoder + softmax classifier;
// the result is frozen. loss_curve, when given, receives the per-iteration
// training loss.
EncoderModel pretrain_source(const PretrainConfig& config, const ArchSpec& arch, std::size_t num_classes,
                             const LabeledSet& source, std::uint64_t seed,
                             std::vector<double>* loss_curve = nullptr);

// Target-regularized batch composition: with reg off the target batch passes
// through unchanged; with reg on the result is floor(B/2) source rows
// followed by ceil(B/2) target rows, all destined for the target encoder.
Tensor compose_encoder_batch(const Tensor& source_batch, const Tensor& target_batch, bool target_reg);

struct SplitResult {
    LabeledSet adapt_split;
    LabeledSet val_split;
};

// Disjoint, exhaustive, seed-deterministic split; the validation side keeps
// its labels for tuning-time accuracy only.
SplitResult validation_split(const LabeledSet& target, double fraction, std::uint64_t seed);

struct MetricsRow {
    std::size_t iteration = 0;
    double disc_loss = 0.0;
    double enc_loss = 0.0;
    std::optional<double> val_accuracy;
    double wall_ms = 0.0;  // cumulative since the start of adaptation
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);

struct AdaptResult {
    EncoderModel target_encoder;
    DiscriminatorModel discriminator;
    std::vector<MetricsRow> metrics;
};

// Step 2: alternating adversarial updates. Per iteration, disc_updates
// discriminator steps on fresh batches (encoder fixed) then enc_updates
// target-encoder steps on fresh batches (discriminator fixed). The source
// encoder must be frozen. Aborts with a diagnostic on non-finite losses.
AdaptResult adapt_target(const AdaptSettings& settings, const EncoderModel& source_enc,
                         const LabeledSet& source, const LabeledSet& target_adapt,
                         const LabeledSet* val_set, std::uint64_t seed,
                         std::ostream* metrics_out = nullptr);

struct InferResult {
    std::vector<int> predictions;
    std::optional<double> accuracy;
};

// Step 3: eval-mode argmax inference on the encoder output.
InferResult infer(const EncoderModel& model, const LabeledSet& eval_set);

// Confidence-weighted logit bagging of the with-reg and without-reg models.
struct BaggedModel {
    EncoderModel model_reg;
    EncoderModel model_noreg;
};

// w_m = c_m / (c_reg + c_noreg) with c_m the max softmax entry per example.
std::pair<double, double> bagging_weights(double confidence_reg, double confidence_noreg);

std::vector<int> bagged_infer(const BaggedModel& bag, const Tensor& features);
InferResult bagged_infer(const BaggedModel& bag, const LabeledSet& eval_set);

}  // namespace addaforge
