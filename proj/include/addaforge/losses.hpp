#pragma once

#include <span>
#include <string>
#include <vector>

#include "addaforge/kernels.hpp"
#include "addaforge/tensor.hpp"

namespace addaforge {

enum class DiscLossKind { Adda, Multi, Joint, Rec };
enum class EncLossKind { Inv, Max, Feat, Pseudo, MmdQq, MmdPq };

DiscLossKind disc_loss_from_string(const std::string& name);
EncLossKind enc_loss_from_string(const std::string& name);
std::string to_string(DiscLossKind kind);
std::string to_string(EncLossKind kind);

// The runnable discriminator/encoder pairings. ADDA and MULTI provide a
// binary domain probability, so they pair with INV and MAX; JOINT and REC
// provide the K+1 head needed by FEAT, PSEUDO and the MMD alignments.
bool valid_pairing(DiscLossKind disc, EncLossKind enc);

// Mean over the batch of -log p[i, y_i]. grad_p, when given, receives the
// gradient w.r.t. the posterior matrix.
double loss_source_ce(const Tensor& posteriors, const std::vector<int>& labels, Tensor* grad_p = nullptr);

// Reconstruction discriminator loss: cross entropy of q_s against the
// zero-concatenated clean source posteriors, plus the target-domain term on
// q_t and the L1 penalty on the discriminator weight matrices.
double loss_disc_rec(const Tensor& p_hat_s, const Tensor& q_s, const Tensor& q_t,
                     const std::vector<const Tensor*>& disc_weights, double l1_lambda,
                     Tensor* grad_q_s = nullptr, Tensor* grad_q_t = nullptr);

// mean[-log q1_s] + mean[-log(1 - q1_t)] on the source-domain probabilities.
double loss_disc_adda(std::span<const double> q1_s, std::span<const double> q1_t,
                      std::vector<double>* grad_q1_s = nullptr, std::vector<double>* grad_q1_t = nullptr);

// INV: mean[-log q1_t]; MAX: mean[log(1 - q1_t)].
double loss_tgt_domain(EncLossKind kind, std::span<const double> q1_t, std::vector<double>* grad = nullptr);

// Two-head discriminator loss: task cross entropy on source rows plus the
// ADDA domain loss.
double loss_disc_multi(const Tensor& p_task_s, const std::vector<int>& labels_s,
                       std::span<const double> q1_s, std::span<const double> q1_t,
                       Tensor* grad_p_task = nullptr, std::vector<double>* grad_q1_s = nullptr,
                       std::vector<double>* grad_q1_t = nullptr);

// Single K+1 head: mean[-log q_s[i, y_i]] + mean[-log q_t[j, K]].
double loss_disc_joint(const Tensor& q_s, const std::vector<int>& labels_s, const Tensor& q_t,
                       Tensor* grad_q_s = nullptr, Tensor* grad_q_t = nullptr);

// Squared L2 distance between the mean rows of the two feature matrices.
double loss_tgt_feat(const Tensor& f_s, const Tensor& f_t, Tensor* grad_f_t = nullptr);

// Pseudo-label loss: labels are the argmax of the first K entries of each
// pre-softmax h_d row (no gradient through the assignment), then
// mean[-log q_t[j, label_j]].
double loss_tgt_pseudo(const Tensor& h_d, const Tensor& q_t, Tensor* grad_q_t = nullptr,
                       std::vector<int>* labels_out = nullptr);

// MMD^2 encoder loss. MmdPq compares zero_concat(p_s) against q_t; MmdQq
// compares q_s against q_t. The source side is constant: gradients flow only
// into q_t.
double loss_tgt_mmd(EncLossKind kind, const Tensor& p_s, const Tensor& q_s, const Tensor& q_t,
                    const KernelSpec& kernel, Tensor* grad_q_t = nullptr);

}  // namespace addaforge
