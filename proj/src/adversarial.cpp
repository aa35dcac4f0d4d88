#include "addaforge/adversarial.hpp"

#include <cmath>
#include <stdexcept>

#include "addaforge/autodiff.hpp"
#include "addaforge/ops.hpp"

namespace addaforge {

namespace {

Tensor mul_elementwise(const Tensor& a, const Tensor& mask) {
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= mask.values[i];
    return out;
}

std::vector<Tensor> zero_grads(const LayerStack& stack) {
    std::vector<Tensor> out;
    for (const Tensor* p : stack.params()) out.emplace_back(p->shape);
    return out;
}

// Source-domain probability from the 2-way domain head: softmax column 0.
std::vector<double> domain_probability(const Tensor& head_posteriors) {
    std::vector<double> q1(head_posteriors.rows());
    for (std::size_t i = 0; i < q1.size(); ++i) q1[i] = head_posteriors.at(i, 0);
    return q1;
}

// Marginalized source-domain probability from a K+1 posterior: the sum of
// the first K entries.
std::vector<double> marginalized_probability(const Tensor& q) {
    const std::size_t kp1 = q.cols();
    std::vector<double> q1(q.rows(), 0.0);
    for (std::size_t i = 0; i < q.rows(); ++i) {
        for (std::size_t j = 0; j + 1 < kp1; ++j) q1[i] += q.at(i, j);
    }
    return q1;
}

}  // namespace

DiscEval eval_disc_loss(DiscLossKind kind, const EncoderModel& source_enc, const EncoderModel& target_enc,
                        const DiscriminatorModel& disc, const Tensor& x_s, const std::vector<int>& y_s,
                        const Tensor& x_t, double keep_prob, std::uint64_t mask_seed,
                        bool scaled_dropout) {
    const Tensor h_s = encoder_logits(source_enc, x_s);
    const Tensor h_t = encoder_logits(target_enc, x_t);

    DiscEval out;
    out.stack_grads = zero_grads(disc.stack);
    out.task_head_grads = zero_grads(disc.task_head);
    out.domain_head_grads = zero_grads(disc.domain_head);

    if (kind == DiscLossKind::Rec) {
        const Tensor p_hat = zero_concat(softmax(h_s));
        Rng rng = make_rng(mask_seed);
        const Tensor mask_s = dropout_mask(h_s.shape, keep_prob, rng, scaled_dropout);
        const Tensor mask_t = dropout_mask(h_t.shape, keep_prob, rng, scaled_dropout);
        const ForwardTrace tr_s = forward(disc.stack, mul_elementwise(h_s, mask_s), Mode::Eval);
        const ForwardTrace tr_t = forward(disc.stack, mul_elementwise(h_t, mask_t), Mode::Eval);
        const Tensor q_s = softmax(tr_s.output());
        const Tensor q_t = softmax(tr_t.output());
        Tensor grad_q_s, grad_q_t;
        out.loss = loss_disc_rec(p_hat, q_s, q_t, disc.stack.weight_matrices(), disc.l1_lambda, &grad_q_s,
                                 &grad_q_t);
        accumulate(out.stack_grads, backward(disc.stack, tr_s, softmax_backward(q_s, grad_q_s)).param_grads);
        accumulate(out.stack_grads, backward(disc.stack, tr_t, softmax_backward(q_t, grad_q_t)).param_grads);
        // L1 subgradient on the weight matrices (biases exempt).
        const std::vector<const Tensor*> params = disc.stack.params();
        std::size_t pi = 0;
        for (const Layer& layer : disc.stack.layers) {
            if (std::holds_alternative<AffineLayer>(layer) || std::holds_alternative<Conv2dLayer>(layer)) {
                const Tensor* w = params[pi];
                Tensor& gw = out.stack_grads[pi];
                for (std::size_t i = 0; i < w->size(); ++i) {
                    const double v = w->values[i];
                    gw.values[i] += disc.l1_lambda * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
                }
                pi += 2;
            }
        }
        return out;
    }

    if (kind == DiscLossKind::Joint) {
        const ForwardTrace tr_s = forward(disc.stack, h_s, Mode::Eval);
        const ForwardTrace tr_t = forward(disc.stack, h_t, Mode::Eval);
        const Tensor q_s = softmax(tr_s.output());
        const Tensor q_t = softmax(tr_t.output());
        Tensor grad_q_s, grad_q_t;
        out.loss = loss_disc_joint(q_s, y_s, q_t, &grad_q_s, &grad_q_t);
        accumulate(out.stack_grads, backward(disc.stack, tr_s, softmax_backward(q_s, grad_q_s)).param_grads);
        accumulate(out.stack_grads, backward(disc.stack, tr_t, softmax_backward(q_t, grad_q_t)).param_grads);
        return out;
    }

    // ADDA / MULTI: shared trunk, binary domain head, and for MULTI the
    // source-only task head.
    const ForwardTrace tr_s = forward(disc.stack, h_s, Mode::Eval);
    const ForwardTrace tr_t = forward(disc.stack, h_t, Mode::Eval);
    const Tensor& f_s = tr_s.activations[disc.feature_index];
    const Tensor& f_t = tr_t.activations[disc.feature_index];
    const ForwardTrace trd_s = forward(disc.domain_head, f_s, Mode::Eval);
    const ForwardTrace trd_t = forward(disc.domain_head, f_t, Mode::Eval);
    const Tensor p2_s = softmax(trd_s.output());
    const Tensor p2_t = softmax(trd_t.output());
    const std::vector<double> q1_s = domain_probability(p2_s);
    const std::vector<double> q1_t = domain_probability(p2_t);

    std::vector<double> g1_s, g1_t;
    Tensor grad_p_task;
    ForwardTrace trt_s;
    Tensor p_task;
    if (kind == DiscLossKind::Multi) {
        trt_s = forward(disc.task_head, f_s, Mode::Eval);
        p_task = softmax(trt_s.output());
        out.loss = loss_disc_multi(p_task, y_s, q1_s, q1_t, &grad_p_task, &g1_s, &g1_t);
    } else {
        out.loss = loss_disc_adda(q1_s, q1_t, &g1_s, &g1_t);
    }

    // Domain head backward on both halves.
    Tensor gp2_s(p2_s.shape);
    for (std::size_t i = 0; i < g1_s.size(); ++i) gp2_s.at(i, 0) = g1_s[i];
    Tensor gp2_t(p2_t.shape);
    for (std::size_t i = 0; i < g1_t.size(); ++i) gp2_t.at(i, 0) = g1_t[i];
    GradTape head_s = backward(disc.domain_head, trd_s, softmax_backward(p2_s, gp2_s));
    GradTape head_t = backward(disc.domain_head, trd_t, softmax_backward(p2_t, gp2_t));
    accumulate(out.domain_head_grads, head_s.param_grads);
    accumulate(out.domain_head_grads, head_t.param_grads);

    Tensor df_s = std::move(head_s.input_grad);
    const Tensor& df_t = head_t.input_grad;
    if (kind == DiscLossKind::Multi) {
        GradTape task_tape = backward(disc.task_head, trt_s, softmax_backward(p_task, grad_p_task));
        accumulate(out.task_head_grads, task_tape.param_grads);
        for (std::size_t i = 0; i < df_s.size(); ++i) df_s.values[i] += task_tape.input_grad.values[i];
    }

    accumulate(out.stack_grads, backward_from(disc.stack, tr_s, disc.feature_index, df_s).param_grads);
    accumulate(out.stack_grads, backward_from(disc.stack, tr_t, disc.feature_index, df_t).param_grads);
    return out;
}

EncEval eval_enc_loss(EncLossKind kind, DiscLossKind disc_kind, const EncoderModel& source_enc,
                      const EncoderModel& target_enc, const DiscriminatorModel& disc, const Tensor& x_src,
                      const Tensor& x_enc, double keep_prob, const KernelSpec& kernel,
                      std::uint64_t mask_seed, bool scaled_dropout) {
    const ForwardTrace tr_enc = forward(target_enc.stack, prepare_input(target_enc.stack, x_enc), Mode::Eval);
    const Tensor& h_t = tr_enc.output();

    EncEval out;
    Tensor grad_h_t;  // dL/d target-encoder logits

    if (kind == EncLossKind::MmdPq || kind == EncLossKind::MmdQq) {
        const Tensor h_s = encoder_logits(source_enc, x_src);
        Rng rng = make_rng(mask_seed);
        Tensor reference_p, reference_q;
        if (kind == EncLossKind::MmdQq) {
            const Tensor mask_s = dropout_mask(h_s.shape, keep_prob, rng, scaled_dropout);
            reference_q = softmax(forward(disc.stack, mul_elementwise(h_s, mask_s), Mode::Eval).output());
        } else {
            reference_p = softmax(h_s);
        }
        const Tensor mask_t = dropout_mask(h_t.shape, keep_prob, rng, scaled_dropout);
        const ForwardTrace tr_d = forward(disc.stack, mul_elementwise(h_t, mask_t), Mode::Eval);
        const Tensor q_t = softmax(tr_d.output());
        Tensor grad_q_t;
        out.loss = loss_tgt_mmd(kind, reference_p, reference_q, q_t, kernel, &grad_q_t);
        GradTape disc_tape = backward(disc.stack, tr_d, softmax_backward(q_t, grad_q_t));
        grad_h_t = mul_elementwise(disc_tape.input_grad, mask_t);
    } else if (kind == EncLossKind::Feat) {
        const Tensor h_s = encoder_logits(source_enc, x_src);
        const ForwardTrace tr_ds = forward(disc.stack, h_s, Mode::Eval);
        const ForwardTrace tr_dt = forward(disc.stack, h_t, Mode::Eval);
        Tensor grad_f_t;
        out.loss = loss_tgt_feat(tr_ds.activations[disc.feature_index],
                                 tr_dt.activations[disc.feature_index], &grad_f_t);
        grad_h_t = backward_from(disc.stack, tr_dt, disc.feature_index, grad_f_t).input_grad;
    } else if (kind == EncLossKind::Pseudo) {
        const ForwardTrace tr_d = forward(disc.stack, h_t, Mode::Eval);
        const Tensor q_t = softmax(tr_d.output());
        Tensor grad_q_t;
        out.loss = loss_tgt_pseudo(tr_d.output(), q_t, &grad_q_t);
        grad_h_t = backward(disc.stack, tr_d, softmax_backward(q_t, grad_q_t)).input_grad;
    } else {
        // INV / MAX need a source-domain probability: the trained domain head
        // under ADDA/MULTI, the marginalized K+1 head under JOINT/REC.
        if (disc_kind == DiscLossKind::Adda || disc_kind == DiscLossKind::Multi) {
            const ForwardTrace tr_d = forward(disc.stack, h_t, Mode::Eval);
            const Tensor& f_t = tr_d.activations[disc.feature_index];
            const ForwardTrace tr_head = forward(disc.domain_head, f_t, Mode::Eval);
            const Tensor p2 = softmax(tr_head.output());
            std::vector<double> grad_q1;
            out.loss = loss_tgt_domain(kind, domain_probability(p2), &grad_q1);
            Tensor gp2(p2.shape);
            for (std::size_t i = 0; i < grad_q1.size(); ++i) gp2.at(i, 0) = grad_q1[i];
            GradTape head_tape = backward(disc.domain_head, tr_head, softmax_backward(p2, gp2));
            grad_h_t = backward_from(disc.stack, tr_d, disc.feature_index, head_tape.input_grad).input_grad;
        } else {
            const ForwardTrace tr_d = forward(disc.stack, h_t, Mode::Eval);
            const Tensor q_t = softmax(tr_d.output());
            std::vector<double> grad_q1;
            out.loss = loss_tgt_domain(kind, marginalized_probability(q_t), &grad_q1);
            Tensor grad_q(q_t.shape);
            const std::size_t kp1 = q_t.cols();
            for (std::size_t i = 0; i < grad_q1.size(); ++i) {
                for (std::size_t j = 0; j + 1 < kp1; ++j) grad_q.at(i, j) = grad_q1[i];
            }
            grad_h_t = backward(disc.stack, tr_d, softmax_backward(q_t, grad_q)).input_grad;
        }
    }

    out.encoder_grads = backward(target_enc.stack, tr_enc, grad_h_t).param_grads;
    return out;
}

}  // namespace addaforge
