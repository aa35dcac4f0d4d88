#include "addaforge/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "addaforge/models.hpp"
#include "addaforge/ops.hpp"

namespace addaforge {

DiscLossKind disc_loss_from_string(const std::string& name) {
    if (name == "ADDA") return DiscLossKind::Adda;
    if (name == "MULTI") return DiscLossKind::Multi;
    if (name == "JOINT") return DiscLossKind::Joint;
    if (name == "REC") return DiscLossKind::Rec;
    throw std::invalid_argument("unknown discriminator loss '" + name +
                                "' (expected ADDA, MULTI, JOINT or REC)");
}

EncLossKind enc_loss_from_string(const std::string& name) {
    if (name == "INV") return EncLossKind::Inv;
    if (name == "MAX") return EncLossKind::Max;
    if (name == "FEAT") return EncLossKind::Feat;
    if (name == "PSEUDO") return EncLossKind::Pseudo;
    if (name == "MMD_QQ") return EncLossKind::MmdQq;
    if (name == "MMD_PQ") return EncLossKind::MmdPq;
    throw std::invalid_argument("unknown encoder loss '" + name +
                                "' (expected INV, MAX, FEAT, PSEUDO, MMD_QQ or MMD_PQ)");
}

std::string to_string(DiscLossKind kind) {
    switch (kind) {
        case DiscLossKind::Adda: return "ADDA";
        case DiscLossKind::Multi: return "MULTI";
        case DiscLossKind::Joint: return "JOINT";
        case DiscLossKind::Rec: return "REC";
    }
    return "?";
}

std::string to_string(EncLossKind kind) {
    switch (kind) {
        case EncLossKind::Inv: return "INV";
        case EncLossKind::Max: return "MAX";
        case EncLossKind::Feat: return "FEAT";
        case EncLossKind::Pseudo: return "PSEUDO";
        case EncLossKind::MmdQq: return "MMD_QQ";
        case EncLossKind::MmdPq: return "MMD_PQ";
    }
    return "?";
}

bool valid_pairing(DiscLossKind disc, EncLossKind enc) {
    switch (disc) {
        case DiscLossKind::Adda:
        case DiscLossKind::Multi:
            return enc == EncLossKind::Inv || enc == EncLossKind::Max;
        case DiscLossKind::Joint:
            return enc == EncLossKind::Max || enc == EncLossKind::Feat || enc == EncLossKind::Pseudo ||
                   enc == EncLossKind::MmdPq || enc == EncLossKind::MmdQq;
        case DiscLossKind::Rec:
            return enc == EncLossKind::MmdPq || enc == EncLossKind::MmdQq;
    }
    return false;
}

namespace {

void check_posterior_matrix(const Tensor& p, const char* what) {
    if (p.rank() != 2) throw std::invalid_argument(std::string(what) + " must be a rank-2 tensor");
    if (p.rows() == 0) throw std::invalid_argument(std::string(what) + " must have at least one row");
}

}  // namespace

double loss_source_ce(const Tensor& posteriors, const std::vector<int>& labels, Tensor* grad_p) {
    check_posterior_matrix(posteriors, "posteriors");
    const std::size_t n = posteriors.rows();
    const std::size_t k = posteriors.cols();
    if (labels.size() != n) throw std::invalid_argument("loss_source_ce: label count mismatch");
    if (grad_p != nullptr) *grad_p = Tensor(posteriors.shape);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= k) {
            throw std::out_of_range("loss_source_ce: label " + std::to_string(y) + " out of range for " +
                                    std::to_string(k) + " classes");
        }
        const double p = posteriors.at(i, static_cast<std::size_t>(y));
        acc -= log_clamped(p);
        if (grad_p != nullptr) {
            grad_p->at(i, static_cast<std::size_t>(y)) = -dlog_clamped(p) / static_cast<double>(n);
        }
    }
    return acc / static_cast<double>(n);
}

double loss_disc_rec(const Tensor& p_hat_s, const Tensor& q_s, const Tensor& q_t,
                     const std::vector<const Tensor*>& disc_weights, double l1_lambda, Tensor* grad_q_s,
                     Tensor* grad_q_t) {
    check_posterior_matrix(p_hat_s, "p_hat_s");
    check_posterior_matrix(q_s, "q_s");
    check_posterior_matrix(q_t, "q_t");
    if (!p_hat_s.same_shape(q_s)) {
        throw std::invalid_argument("loss_disc_rec: p_hat_s and q_s shapes differ");
    }
    const std::size_t n = q_s.rows();
    const std::size_t m = q_t.rows();
    const std::size_t kp1 = q_s.cols();
    if (q_t.cols() != kp1) throw std::invalid_argument("loss_disc_rec: q_t width mismatch");
    if (grad_q_s != nullptr) *grad_q_s = Tensor(q_s.shape);
    if (grad_q_t != nullptr) *grad_q_t = Tensor(q_t.shape);

    // Reconstruction term: cross entropy of q_s against the soft target
    // p_hat_s (its K+1-th entry is exactly zero).
    double source_term = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < kp1; ++j) {
            const double target = p_hat_s.at(i, j);
            if (target == 0.0) continue;
            const double q = q_s.at(i, j);
            source_term -= target * log_clamped(q);
            if (grad_q_s != nullptr) {
                grad_q_s->at(i, j) -= target * dlog_clamped(q) / static_cast<double>(n);
            }
        }
    }
    source_term /= static_cast<double>(n);

    double target_term = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double q = q_t.at(j, kp1 - 1);
        target_term -= log_clamped(q);
        if (grad_q_t != nullptr) {
            grad_q_t->at(j, kp1 - 1) = -dlog_clamped(q) / static_cast<double>(m);
        }
    }
    target_term /= static_cast<double>(m);

    double penalty = 0.0;
    for (const Tensor* w : disc_weights) {
        for (double v : w->values) penalty += std::fabs(v);
    }
    return source_term + target_term + l1_lambda * penalty;
}

double loss_disc_adda(std::span<const double> q1_s, std::span<const double> q1_t,
                      std::vector<double>* grad_q1_s, std::vector<double>* grad_q1_t) {
    if (q1_s.empty() || q1_t.empty()) throw std::invalid_argument("loss_disc_adda: empty batch");
    const double n = static_cast<double>(q1_s.size());
    const double m = static_cast<double>(q1_t.size());
    if (grad_q1_s != nullptr) grad_q1_s->assign(q1_s.size(), 0.0);
    if (grad_q1_t != nullptr) grad_q1_t->assign(q1_t.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < q1_s.size(); ++i) {
        acc -= log_clamped(q1_s[i]) / n;
        if (grad_q1_s != nullptr) (*grad_q1_s)[i] = -dlog_clamped(q1_s[i]) / n;
    }
    for (std::size_t j = 0; j < q1_t.size(); ++j) {
        acc -= log_clamped(1.0 - q1_t[j]) / m;
        if (grad_q1_t != nullptr) (*grad_q1_t)[j] = dlog_clamped(1.0 - q1_t[j]) / m;
    }
    return acc;
}

double loss_tgt_domain(EncLossKind kind, std::span<const double> q1_t, std::vector<double>* grad) {
    if (kind != EncLossKind::Inv && kind != EncLossKind::Max) {
        throw std::invalid_argument("loss_tgt_domain expects INV or MAX");
    }
    if (q1_t.empty()) throw std::invalid_argument("loss_tgt_domain: empty batch");
    const double m = static_cast<double>(q1_t.size());
    if (grad != nullptr) grad->assign(q1_t.size(), 0.0);
    double acc = 0.0;
    for (std::size_t j = 0; j < q1_t.size(); ++j) {
        if (kind == EncLossKind::Inv) {
            acc -= log_clamped(q1_t[j]) / m;
            if (grad != nullptr) (*grad)[j] = -dlog_clamped(q1_t[j]) / m;
        } else {
            acc += log_clamped(1.0 - q1_t[j]) / m;
            if (grad != nullptr) (*grad)[j] = -dlog_clamped(1.0 - q1_t[j]) / m;
        }
    }
    return acc;
}

double loss_disc_multi(const Tensor& p_task_s, const std::vector<int>& labels_s,
                       std::span<const double> q1_s, std::span<const double> q1_t, Tensor* grad_p_task,
                       std::vector<double>* grad_q1_s, std::vector<double>* grad_q1_t) {
    return loss_source_ce(p_task_s, labels_s, grad_p_task) +
           loss_disc_adda(q1_s, q1_t, grad_q1_s, grad_q1_t);
}

double loss_disc_joint(const Tensor& q_s, const std::vector<int>& labels_s, const Tensor& q_t,
                       Tensor* grad_q_s, Tensor* grad_q_t) {
    check_posterior_matrix(q_s, "q_s");
    check_posterior_matrix(q_t, "q_t");
    const std::size_t kp1 = q_s.cols();
    if (q_t.cols() != kp1) throw std::invalid_argument("loss_disc_joint: posterior width mismatch");
    const std::size_t m = q_t.rows();
    const double source_term = loss_source_ce(q_s, labels_s, grad_q_s);
    if (grad_q_t != nullptr) *grad_q_t = Tensor(q_t.shape);
    double target_term = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double q = q_t.at(j, kp1 - 1);
        target_term -= log_clamped(q);
        if (grad_q_t != nullptr) {
            grad_q_t->at(j, kp1 - 1) = -dlog_clamped(q) / static_cast<double>(m);
        }
    }
    return source_term + target_term / static_cast<double>(m);
}

double loss_tgt_feat(const Tensor& f_s, const Tensor& f_t, Tensor* grad_f_t) {
    check_posterior_matrix(f_s, "f_s");
    check_posterior_matrix(f_t, "f_t");
    if (f_s.cols() != f_t.cols()) throw std::invalid_argument("loss_tgt_feat: feature width mismatch");
    const std::size_t d = f_s.cols();
    const std::size_t n = f_s.rows();
    const std::size_t m = f_t.rows();
    std::vector<double> diff(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) diff[j] += f_s.at(i, j) / static_cast<double>(n);
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) diff[j] -= f_t.at(i, j) / static_cast<double>(m);
    }
    double acc = 0.0;
    for (double v : diff) acc += v * v;
    if (grad_f_t != nullptr) {
        *grad_f_t = Tensor(f_t.shape);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                grad_f_t->at(i, j) = -2.0 * diff[j] / static_cast<double>(m);
            }
        }
    }
    return acc;
}

double loss_tgt_pseudo(const Tensor& h_d, const Tensor& q_t, Tensor* grad_q_t,
                       std::vector<int>* labels_out) {
    check_posterior_matrix(h_d, "h_d");
    check_posterior_matrix(q_t, "q_t");
    if (!h_d.same_shape(q_t)) throw std::invalid_argument("loss_tgt_pseudo: h_d and q_t shapes differ");
    const std::size_t kp1 = h_d.cols();
    if (kp1 < 2) throw std::invalid_argument("loss_tgt_pseudo: need at least 2 columns");
    const std::size_t m = h_d.rows();
    const std::vector<int> labels = argmax_rows(h_d, kp1 - 1);
    if (labels_out != nullptr) *labels_out = labels;
    if (grad_q_t != nullptr) *grad_q_t = Tensor(q_t.shape);
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const auto y = static_cast<std::size_t>(labels[j]);
        const double q = q_t.at(j, y);
        acc -= log_clamped(q);
        if (grad_q_t != nullptr) grad_q_t->at(j, y) = -dlog_clamped(q) / static_cast<double>(m);
    }
    return acc / static_cast<double>(m);
}

double loss_tgt_mmd(EncLossKind kind, const Tensor& p_s, const Tensor& q_s, const Tensor& q_t,
                    const KernelSpec& kernel, Tensor* grad_q_t) {
    if (kind != EncLossKind::MmdPq && kind != EncLossKind::MmdQq) {
        throw std::invalid_argument("loss_tgt_mmd expects MMD_PQ or MMD_QQ");
    }
    const Tensor reference = kind == EncLossKind::MmdPq ? zero_concat(p_s) : q_s;
    const double loss = mmd2_biased(kernel, reference, q_t);
    if (grad_q_t != nullptr) *grad_q_t = mmd2_grad_b(kernel, reference, q_t);
    return loss;
}

}  // namespace addaforge
