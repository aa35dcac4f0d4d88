#include "addaforge/verify.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

#include "addaforge/adversarial.hpp"
#include "addaforge/checkpoint.hpp"
#include "addaforge/kernels.hpp"
#include "addaforge/ops.hpp"

namespace addaforge {

namespace {

Tensor random_matrix(Rng& rng, std::size_t n, std::size_t d) {
    Tensor t({n, d});
    for (double& v : t.values) v = normal01(rng);
    return t;
}

Tensor random_posteriors(Rng& rng, std::size_t n, std::size_t d) {
    return softmax(random_matrix(rng, n, d));
}

struct GradCheckSetup {
    EncoderModel source_enc;
    EncoderModel target_enc;
    DiscriminatorModel disc;
    Tensor x_s;
    Tensor x_t;
    std::vector<int> y_s;
    KernelSpec kernel;
    double keep_prob = 0.7;
    std::uint64_t mask_seed = 12345;
};

// Zero-initialized biases sit exactly on the ReLU kink whenever dropout
// zeroes a whole logit row, and central differences are invalid at a kink.
// Checks run at a generic point instead: all biases jittered.
void jitter_biases(LayerStack& stack, Rng& rng) {
    for (Tensor* p : stack.params()) {
        if (p->rank() == 1) {
            for (double& v : p->values) v = uniform(rng, -0.2, 0.2);
        }
    }
}

GradCheckSetup make_grad_check_setup() {
    GradCheckSetup s;
    constexpr std::size_t kClasses = 3;
    constexpr std::size_t kBatch = 8;
    ArchSpec arch;
    arch.preset = ArchPreset::MlpSynthetic;
    arch.input_dim = 4;
    arch.hidden = {8};
    s.source_enc = build_encoder(arch, kClasses, 11);
    s.source_enc.frozen = true;
    s.target_enc = build_encoder(arch, kClasses, 12);
    s.disc = build_discriminator(kClasses, {16}, 0.001, 13);
    Rng rng = make_rng(14);
    jitter_biases(s.source_enc.stack, rng);
    jitter_biases(s.target_enc.stack, rng);
    jitter_biases(s.disc.stack, rng);
    jitter_biases(s.disc.task_head, rng);
    jitter_biases(s.disc.domain_head, rng);
    s.x_s = random_matrix(rng, kBatch, arch.input_dim);
    s.x_t = random_matrix(rng, kBatch, arch.input_dim);
    s.y_s.resize(kBatch);
    for (int& y : s.y_s) y = static_cast<int>(uniform_index(rng, kClasses));
    return s;
}

std::vector<Tensor> disc_grads_flat(DiscEval&& eval) {
    std::vector<Tensor> grads = std::move(eval.stack_grads);
    for (Tensor& g : eval.task_head_grads) grads.push_back(std::move(g));
    for (Tensor& g : eval.domain_head_grads) grads.push_back(std::move(g));
    return grads;
}

}  // namespace

std::vector<LossGradCase> run_loss_gradient_checks(double h, double tolerance, int sabotage_loss) {
    GradCheckSetup s = make_grad_check_setup();
    std::vector<LossGradCase> out;

    struct Case {
        std::string name;
        std::function<double(GradCheckSetup&)> loss;
        std::function<std::vector<Tensor>(GradCheckSetup&)> grads;
        bool wrt_disc = false;   // otherwise w.r.t. the target encoder
        bool wrt_source = false; // source cross entropy only
    };

    const auto disc_loss_case = [](const std::string& name, DiscLossKind kind) {
        return Case{
            name,
            [kind](GradCheckSetup& st) {
                return eval_disc_loss(kind, st.source_enc, st.target_enc, st.disc, st.x_s, st.y_s, st.x_t,
                                      st.keep_prob, st.mask_seed)
                    .loss;
            },
            [kind](GradCheckSetup& st) {
                return disc_grads_flat(eval_disc_loss(kind, st.source_enc, st.target_enc, st.disc, st.x_s,
                                                      st.y_s, st.x_t, st.keep_prob, st.mask_seed));
            },
            true, false};
    };
    const auto enc_loss_case = [](const std::string& name, EncLossKind kind, DiscLossKind context) {
        return Case{
            name,
            [kind, context](GradCheckSetup& st) {
                return eval_enc_loss(kind, context, st.source_enc, st.target_enc, st.disc, st.x_s, st.x_t,
                                     st.keep_prob, st.kernel, st.mask_seed)
                    .loss;
            },
            [kind, context](GradCheckSetup& st) {
                return eval_enc_loss(kind, context, st.source_enc, st.target_enc, st.disc, st.x_s, st.x_t,
                                     st.keep_prob, st.kernel, st.mask_seed)
                    .encoder_grads;
            },
            false, false};
    };

    std::vector<Case> cases;
    cases.push_back(Case{"source-ce",
                         [](GradCheckSetup& st) {
                             const ForwardTrace tr = forward(st.source_enc.stack, st.x_s, Mode::Eval);
                             return loss_source_ce(softmax(tr.output()), st.y_s);
                         },
                         [](GradCheckSetup& st) {
                             const ForwardTrace tr = forward(st.source_enc.stack, st.x_s, Mode::Eval);
                             const Tensor p = softmax(tr.output());
                             Tensor grad_p;
                             loss_source_ce(p, st.y_s, &grad_p);
                             return backward(st.source_enc.stack, tr, softmax_backward(p, grad_p)).param_grads;
                         },
                         false, true});
    cases.push_back(disc_loss_case("disc-rec", DiscLossKind::Rec));
    cases.push_back(disc_loss_case("disc-adda", DiscLossKind::Adda));
    cases.push_back(disc_loss_case("disc-multi", DiscLossKind::Multi));
    cases.push_back(disc_loss_case("disc-joint", DiscLossKind::Joint));
    cases.push_back(enc_loss_case("enc-mmd-pq", EncLossKind::MmdPq, DiscLossKind::Rec));
    cases.push_back(enc_loss_case("enc-mmd-qq", EncLossKind::MmdQq, DiscLossKind::Rec));
    cases.push_back(enc_loss_case("enc-feat", EncLossKind::Feat, DiscLossKind::Joint));
    cases.push_back(enc_loss_case("enc-pseudo", EncLossKind::Pseudo, DiscLossKind::Joint));
    cases.push_back(enc_loss_case("enc-inv", EncLossKind::Inv, DiscLossKind::Adda));
    cases.push_back(enc_loss_case("enc-max", EncLossKind::Max, DiscLossKind::Adda));
    cases.push_back(enc_loss_case("enc-max-marginal", EncLossKind::Max, DiscLossKind::Joint));

    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        Case& c = cases[ci];
        std::vector<Tensor*> params;
        if (c.wrt_disc) {
            params = s.disc.all_params();
        } else if (c.wrt_source) {
            params = s.source_enc.stack.params();
        } else {
            params = s.target_enc.stack.params();
        }
        std::vector<Tensor> analytic = c.grads(s);
        if (static_cast<int>(ci) == sabotage_loss && !analytic.empty() && analytic[0].size() > 0) {
            analytic[0].values[0] += 0.5;
        }
        const auto loss_fn = [&]() { return c.loss(s); };
        LossGradCase result;
        result.name = c.name;
        result.report = finite_diff_check(params, analytic, loss_fn, h, tolerance);
        out.push_back(std::move(result));
    }
    return out;
}

namespace {

VerifyCheck check_mmd_oracle() {
    VerifyCheck check{"mmd-oracle-equivalence", true, ""};
    Rng rng = make_rng(101);
    double worst = 0.0;
    for (KernelFamily family : {KernelFamily::SqEuclidean, KernelFamily::ChiSquared,
                                KernelFamily::SqHellinger, KernelFamily::L1}) {
        KernelSpec spec = default_kernel_spec();
        spec.family = family;
        const bool posterior = family == KernelFamily::ChiSquared || family == KernelFamily::SqHellinger;
        for (int rep = 0; rep < 20; ++rep) {
            const std::size_t n = 1 + uniform_index(rng, 32);
            const std::size_t m = 1 + uniform_index(rng, 32);
            const std::size_t d = 2 + uniform_index(rng, 7);
            const Tensor a = posterior ? random_posteriors(rng, n, d) : random_matrix(rng, n, d);
            const Tensor b = posterior ? random_posteriors(rng, m, d) : random_matrix(rng, m, d);
            worst = std::max(worst, std::fabs(mmd2_biased(spec, a, b) - mmd2_oracle(spec, a, b)));
        }
    }
    std::ostringstream os;
    os << "max |biased - oracle| = " << worst;
    check.detail = os.str();
    check.passed = worst < 1e-12;
    return check;
}

VerifyCheck check_marginalization() {
    VerifyCheck check{"joint-adda-marginalization", true, ""};
    Rng rng = make_rng(102);
    const std::size_t rows = 1000;
    const Tensor q = random_posteriors(rng, rows, 4);  // K = 3 plus the target class
    std::vector<double> q1(rows);
    double joint_form = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < 3; ++k) sum += q.at(i, k);
        q1[i] = sum;
        // marginalized JOINT: -log sum_k<K q_k on the source side and
        // -log q_{K+1} on the target side
        joint_form += (-log_clamped(sum) - log_clamped(q.at(i, 3))) / static_cast<double>(rows);
    }
    const double adda_form = loss_disc_adda(q1, q1);
    const double diff = std::fabs(adda_form - joint_form);
    std::ostringstream os;
    os << "|adda - marginalized joint| = " << diff << " over " << rows << " rows";
    check.detail = os.str();
    check.passed = diff < 1e-12;
    return check;
}

VerifyCheck check_softmax() {
    VerifyCheck check{"softmax-properties", true, ""};
    Rng rng = make_rng(103);
    Tensor logits = random_matrix(rng, 64, 7);
    const Tensor p = softmax(logits);
    double worst_sum = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < p.cols(); ++j) sum += p.at(i, j);
        worst_sum = std::max(worst_sum, std::fabs(sum - 1.0));
    }
    Tensor shifted = logits;
    for (std::size_t i = 0; i < shifted.rows(); ++i) {
        for (std::size_t j = 0; j < shifted.cols(); ++j) shifted.at(i, j) += 17.25;
    }
    const Tensor p2 = softmax(shifted);
    double worst_shift = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        worst_shift = std::max(worst_shift, std::fabs(p.values[i] - p2.values[i]));
    }
    const Tensor extreme = softmax(Tensor({1, 2}, {1000.0, 0.0}));
    const bool extreme_ok = std::fabs(extreme.values[0] - 1.0) < 1e-12 && extreme.values[1] < 1e-12 &&
                            all_finite(extreme);
    std::ostringstream os;
    os << "max |row sum - 1| = " << worst_sum << ", max shift deviation = " << worst_shift;
    check.detail = os.str();
    check.passed = worst_sum < 1e-12 && worst_shift < 1e-12 && extreme_ok;
    return check;
}

VerifyCheck check_zero_concat() {
    VerifyCheck check{"zero-concat", true, ""};
    Rng rng = make_rng(104);
    const Tensor p = random_posteriors(rng, 32, 5);
    const Tensor z = zero_concat(p);
    bool ok = z.cols() == 6;
    for (std::size_t i = 0; i < p.rows() && ok; ++i) {
        double sum_p = 0.0, sum_z = 0.0;
        for (std::size_t j = 0; j < 5; ++j) {
            sum_p += p.at(i, j);
            ok = ok && z.at(i, j) == p.at(i, j);
        }
        for (std::size_t j = 0; j < 6; ++j) sum_z += z.at(i, j);
        ok = ok && z.at(i, 5) == 0.0 && sum_p == sum_z;
    }
    bool rejected = false;
    try {
        zero_concat(Tensor({1, 3}, {0.5, 0.2, 0.2}));
    } catch (const std::invalid_argument&) {
        rejected = true;
    }
    check.passed = ok && rejected;
    check.detail = ok ? "first K entries, row sums and the zero column preserved" : "entry mismatch";
    if (!rejected) check.detail += "; non-normalized input was not rejected";
    return check;
}

VerifyCheck check_checkpoint_roundtrip() {
    VerifyCheck check{"checkpoint-roundtrip", true, ""};
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "addaforge_verify";
    fs::create_directories(dir);
    const std::string path = (dir / "roundtrip.addf").string();
    ArchSpec arch;
    arch.input_dim = 5;
    arch.hidden = {9};
    const EncoderModel model = build_encoder(arch, 4, 77);
    save_encoder(path, model);
    const EncoderModel loaded = load_encoder(path);
    bool ok = params_equal(model.stack, loaded.stack) && loaded.num_classes == 4;

    // flip a magic byte
    std::string corrupt = (dir / "corrupt.addf").string();
    fs::copy_file(path, corrupt, fs::copy_options::overwrite_existing);
    {
        std::fstream f(corrupt, std::ios::in | std::ios::out | std::ios::binary);
        f.put('X');
    }
    bool magic_rejected = false;
    try {
        load_checkpoint(corrupt);
    } catch (const std::runtime_error& e) {
        magic_rejected = std::string(e.what()).find("magic") != std::string::npos;
    }
    check.passed = ok && magic_rejected;
    check.detail = ok ? "bit-identical round trip" : "parameters differ after reload";
    if (!magic_rejected) check.detail += "; corrupted magic not rejected";
    return check;
}

}  // namespace

std::vector<VerifyCheck> run_verify_battery(const VerifyOptions& options) {
    std::vector<VerifyCheck> checks;
    checks.push_back(check_mmd_oracle());
    for (const LossGradCase& c : run_loss_gradient_checks(1e-5, 1e-4, options.sabotage_loss)) {
        VerifyCheck check;
        check.name = "gradient/" + c.name;
        check.passed = c.report.passed();
        check.detail = c.report.summary();
        checks.push_back(std::move(check));
    }
    checks.push_back(check_marginalization());
    checks.push_back(check_softmax());
    checks.push_back(check_zero_concat());
    checks.push_back(check_checkpoint_roundtrip());
    return checks;
}

int report_checks(std::ostream& out, const std::vector<VerifyCheck>& checks) {
    int failures = 0;
    for (const VerifyCheck& check : checks) {
        out << (check.passed ? "[PASS] " : "[FAIL] ") << check.name << ": " << check.detail << "\n";
        if (!check.passed) ++failures;
    }
    out << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed") << "\n";
    return failures;
}

}  // namespace addaforge
