#include "addaforge/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "addaforge/autodiff.hpp"
#include "addaforge/ops.hpp"

namespace addaforge {

namespace {

std::vector<std::size_t> sample_with_replacement(Rng& rng, std::size_t set_size, std::size_t count) {
    std::vector<std::size_t> idx(count);
    for (auto& i : idx) i = uniform_index(rng, set_size);
    return idx;
}

std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<std::size_t>& idx) {
    std::vector<int> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
    return out;
}

}  // namespace

EncoderModel pretrain_source(const PretrainConfig& config, const ArchSpec& arch, std::size_t num_classes,
                             const LabeledSet& source, std::uint64_t seed,
                             std::vector<double>* loss_curve) {
    if (source.size() == 0) throw std::invalid_argument("pretrain_source: empty source dataset");
    EncoderModel model = build_encoder(arch, num_classes, seed);
    AdamState adam = make_adam(model.stack.params(), {config.lr, config.beta1, config.beta2, 1e-8});
    Rng batch_rng = make_rng(seed, 0x703162);  // pretrain batch stream
    if (loss_curve != nullptr) loss_curve->clear();
    for (std::size_t iter = 0; iter < config.iters; ++iter) {
        const auto idx = sample_with_replacement(batch_rng, source.size(), config.batch);
        const Tensor x = prepare_input(model.stack, take_rows(source.features, idx));
        const std::vector<int> y = gather_labels(source.labels, idx);
        const ForwardTrace trace = forward(model.stack, x, Mode::Eval);
        const Tensor p = softmax(trace.output());
        Tensor grad_p;
        const double loss = loss_source_ce(p, y, &grad_p);
        if (!std::isfinite(loss)) {
            throw std::runtime_error("pretrain_source: non-finite loss at iteration " + std::to_string(iter));
        }
        GradTape tape = backward(model.stack, trace, softmax_backward(p, grad_p));
        adam_step(model.stack.params(), tape.param_grads, adam);
        if (loss_curve != nullptr) loss_curve->push_back(loss);
    }
    model.frozen = true;
    return model;
}

Tensor compose_encoder_batch(const Tensor& source_batch, const Tensor& target_batch, bool target_reg) {
    if (!target_reg) return target_batch;
    if (source_batch.shape != target_batch.shape) {
        throw std::invalid_argument("compose_encoder_batch: source and target batches must match, got " +
                                    shape_str(source_batch.shape) + " vs " + shape_str(target_batch.shape));
    }
    const std::size_t batch = target_batch.dim(0);
    const std::size_t n_source = batch / 2;          // floor
    const std::size_t n_target = batch - n_source;   // ceil
    std::vector<std::size_t> src_idx(n_source);
    std::iota(src_idx.begin(), src_idx.end(), 0);
    std::vector<std::size_t> tgt_idx(n_target);
    std::iota(tgt_idx.begin(), tgt_idx.end(), 0);
    return concat_rows(take_rows(source_batch, src_idx), take_rows(target_batch, tgt_idx));
}

SplitResult validation_split(const LabeledSet& target, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0) || !(fraction < 1.0)) {
        throw std::invalid_argument("validation_split: fraction must lie in (0, 1)");
    }
    const std::size_t n = target.size();
    const auto val_n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    if (val_n == 0 || val_n == n) {
        throw std::invalid_argument("validation_split: fraction " + std::to_string(fraction) + " of " +
                                    std::to_string(n) + " items yields an empty split");
    }
    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), 0);
    Rng rng = make_rng(seed, 0x76616c);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t j = i + uniform_index(rng, n - i);
        std::swap(indices[i], indices[j]);
    }
    const std::vector<std::size_t> val_idx(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(val_n));
    const std::vector<std::size_t> adapt_idx(indices.begin() + static_cast<std::ptrdiff_t>(val_n), indices.end());
    SplitResult out;
    out.val_split.domain = target.domain;
    out.val_split.features = take_rows(target.features, val_idx);
    out.val_split.labels = gather_labels(target.labels, val_idx);
    out.adapt_split.domain = target.domain;
    out.adapt_split.features = take_rows(target.features, adapt_idx);
    out.adapt_split.labels = gather_labels(target.labels, adapt_idx);
    return out;
}

void write_metrics_header(std::ostream& out) { out << "iteration,disc_loss,enc_loss,val_accuracy,wall_ms\n"; }

void write_metrics_row(std::ostream& out, const MetricsRow& row) {
    out << row.iteration << "," << row.disc_loss << "," << row.enc_loss << ",";
    if (row.val_accuracy.has_value()) out << *row.val_accuracy;
    out << "," << row.wall_ms << "\n";
}

AdaptResult adapt_target(const AdaptSettings& settings, const EncoderModel& source_enc,
                         const LabeledSet& source, const LabeledSet& target_adapt,
                         const LabeledSet* val_set, std::uint64_t seed, std::ostream* metrics_out) {
    if (!source_enc.frozen) {
        throw std::invalid_argument("adapt_target: the source encoder must be frozen before adaptation");
    }
    if (source.size() == 0 || target_adapt.size() == 0) {
        throw std::invalid_argument("adapt_target: empty source or target dataset");
    }
    if (!valid_pairing(settings.disc_loss, settings.enc_loss)) {
        throw std::invalid_argument("adapt_target: invalid loss pairing " + to_string(settings.disc_loss) +
                                    " x " + to_string(settings.enc_loss));
    }
    validate(settings.kernel);

    AdaptResult result;
    result.target_encoder = clone_into_target(source_enc);
    result.discriminator = build_discriminator(source_enc.num_classes, settings.disc_hidden,
                                               settings.l1_lambda, seed);

    AdamState disc_adam = make_adam(result.discriminator.all_params(),
                                    {settings.lr, settings.beta1, settings.beta2, 1e-8});
    AdamState enc_adam = make_adam(result.target_encoder.stack.params(),
                                   {settings.lr, settings.beta1, settings.beta2, 1e-8});

    Rng batch_rng = make_rng(seed, 0x626174);  // one stream for all batch draws
    std::uint64_t mask_counter = 0;
    const auto t0 = std::chrono::steady_clock::now();

    if (metrics_out != nullptr) write_metrics_header(*metrics_out);

    for (std::size_t iter = 0; iter < settings.iters; ++iter) {
        double disc_loss = 0.0;
        for (std::size_t u = 0; u < settings.disc_updates; ++u) {
            const auto src_idx = sample_with_replacement(batch_rng, source.size(), settings.batch_per_domain);
            const auto tgt_idx =
                sample_with_replacement(batch_rng, target_adapt.size(), settings.batch_per_domain);
            const Tensor x_s = take_rows(source.features, src_idx);
            const Tensor x_t = take_rows(target_adapt.features, tgt_idx);
            const std::vector<int> y_s = gather_labels(source.labels, src_idx);
            DiscEval eval = eval_disc_loss(settings.disc_loss, source_enc, result.target_encoder,
                                           result.discriminator, x_s, y_s, x_t, settings.keep_prob,
                                           mix_seed(seed, 0x6d000000 + mask_counter++),
                                           settings.dropout_scaled);
            disc_loss = eval.loss;
            std::vector<Tensor> grads = std::move(eval.stack_grads);
            for (Tensor& g : eval.task_head_grads) grads.push_back(std::move(g));
            for (Tensor& g : eval.domain_head_grads) grads.push_back(std::move(g));
            adam_step(result.discriminator.all_params(), grads, disc_adam);
        }

        double enc_loss = 0.0;
        for (std::size_t u = 0; u < settings.enc_updates; ++u) {
            const auto src_idx = sample_with_replacement(batch_rng, source.size(), settings.batch_per_domain);
            const auto tgt_idx =
                sample_with_replacement(batch_rng, target_adapt.size(), settings.batch_per_domain);
            const Tensor x_s = take_rows(source.features, src_idx);
            const Tensor x_t = take_rows(target_adapt.features, tgt_idx);
            const Tensor x_enc = compose_encoder_batch(x_s, x_t, settings.target_reg);
            EncEval eval = eval_enc_loss(settings.enc_loss, settings.disc_loss, source_enc,
                                         result.target_encoder, result.discriminator, x_s, x_enc,
                                         settings.keep_prob, settings.kernel,
                                         mix_seed(seed, 0x6d000000 + mask_counter++),
                                         settings.dropout_scaled);
            enc_loss = eval.loss;
            adam_step(result.target_encoder.stack.params(), eval.encoder_grads, enc_adam);
        }

        if (!std::isfinite(disc_loss) || !std::isfinite(enc_loss)) {
            throw std::runtime_error("adapt_target: non-finite loss at iteration " + std::to_string(iter) +
                                     " (disc " + std::to_string(disc_loss) + ", enc " +
                                     std::to_string(enc_loss) + "; run seed " + std::to_string(seed) + ")");
        }

        MetricsRow row;
        row.iteration = iter;
        row.disc_loss = disc_loss;
        row.enc_loss = enc_loss;
        const bool measure = val_set != nullptr && ((iter + 1) % settings.val_every == 0 ||
                                                    iter + 1 == settings.iters);
        if (measure) {
            row.val_accuracy = infer(result.target_encoder, *val_set).accuracy;
        }
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        if (metrics_out != nullptr) write_metrics_row(*metrics_out, row);
        result.metrics.push_back(std::move(row));
    }
    return result;
}

InferResult infer(const EncoderModel& model, const LabeledSet& eval_set) {
    InferResult out;
    out.predictions = predict(model, eval_set.features);
    if (!eval_set.labels.empty()) out.accuracy = accuracy(out.predictions, eval_set.labels);
    return out;
}

std::pair<double, double> bagging_weights(double confidence_reg, double confidence_noreg) {
    const double total = confidence_reg + confidence_noreg;
    if (!(total > 0.0)) throw std::invalid_argument("bagging_weights: confidences must be positive");
    return {confidence_reg / total, confidence_noreg / total};
}

std::vector<int> bagged_infer(const BaggedModel& bag, const Tensor& features) {
    if (bag.model_reg.num_classes != bag.model_noreg.num_classes) {
        throw std::invalid_argument("bagged_infer: the two models disagree on the number of classes");
    }
    const Tensor h_reg = encoder_logits(bag.model_reg, features);
    const Tensor h_noreg = encoder_logits(bag.model_noreg, features);
    const Tensor p_reg = softmax(h_reg);
    const Tensor p_noreg = softmax(h_noreg);
    const std::size_t n = h_reg.rows();
    const std::size_t k = h_reg.cols();
    Tensor blended({n, k});
    for (std::size_t i = 0; i < n; ++i) {
        double c_reg = 0.0, c_noreg = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            c_reg = std::max(c_reg, p_reg.at(i, j));
            c_noreg = std::max(c_noreg, p_noreg.at(i, j));
        }
        const auto [w_reg, w_noreg] = bagging_weights(c_reg, c_noreg);
        for (std::size_t j = 0; j < k; ++j) {
            blended.at(i, j) = w_reg * h_reg.at(i, j) + w_noreg * h_noreg.at(i, j);
        }
    }
    return argmax_rows(blended);
}

InferResult bagged_infer(const BaggedModel& bag, const LabeledSet& eval_set) {
    InferResult out;
    out.predictions = bagged_infer(bag, eval_set.features);
    if (!eval_set.labels.empty()) out.accuracy = accuracy(out.predictions, eval_set.labels);
    return out;
}

}  // namespace addaforge
