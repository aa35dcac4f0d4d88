#include <stdexcept>
#include "addaforge/adversarial.hpp"
#include "addaforge/verify.hpp"
#include "doctest.h"

using namespace addaforge;

TEST_CASE("every loss variant passes the end-to-end gradient check") {
    const auto cases = run_loss_gradient_checks(1e-5, 1e-4);
    CHECK(cases.size() >= 12);
    for (const auto& c : cases) {
        CHECK_MESSAGE(c.report.passed(), c.name << ": " << c.report.summary());
    }
}

TEST_CASE("a sabotaged gradient is caught and named") {
    const int victim = 3;
    const auto cases = run_loss_gradient_checks(1e-5, 1e-4, victim);
    for (std::size_t i = 0; i < cases.size(); ++i) {
        if (static_cast<int>(i) == victim) {
            CHECK_FALSE(cases[i].report.passed());
        } else {
            CHECK_MESSAGE(cases[i].report.passed(), cases[i].name);
        }
    }
}

TEST_CASE("corruption masks are frozen per seed in both evaluators") {
    ArchSpec arch;
    arch.input_dim = 4;
    arch.hidden = {8};
    EncoderModel source = build_encoder(arch, 3, 1);
    source.frozen = true;
    const EncoderModel target = clone_into_target(source);
    const DiscriminatorModel disc = build_discriminator(3, {16}, 0.001, 2);
    Rng rng = make_rng(3);
    Tensor x_s({8, 4});
    Tensor x_t({8, 4});
    for (double& v : x_s.values) v = normal01(rng);
    for (double& v : x_t.values) v = normal01(rng);
    const std::vector<int> y_s{0, 1, 2, 0, 1, 2, 0, 1};

    const DiscEval d1 = eval_disc_loss(DiscLossKind::Rec, source, target, disc, x_s, y_s, x_t, 0.7, 42);
    const DiscEval d2 = eval_disc_loss(DiscLossKind::Rec, source, target, disc, x_s, y_s, x_t, 0.7, 42);
    const DiscEval d3 = eval_disc_loss(DiscLossKind::Rec, source, target, disc, x_s, y_s, x_t, 0.7, 43);
    CHECK(d1.loss == d2.loss);
    CHECK(d1.loss != d3.loss);

    const EncEval e1 = eval_enc_loss(EncLossKind::MmdPq, DiscLossKind::Rec, source, target, disc, x_s, x_t,
                                     0.7, default_kernel_spec(), 7);
    const EncEval e2 = eval_enc_loss(EncLossKind::MmdPq, DiscLossKind::Rec, source, target, disc, x_s, x_t,
                                     0.7, default_kernel_spec(), 7);
    CHECK(e1.loss == e2.loss);
}

TEST_CASE("enc eval leaves discriminator untouched and vice versa") {
    // the evaluators only read the models; returned gradients are the only
    // mutation channel
    ArchSpec arch;
    arch.input_dim = 4;
    arch.hidden = {8};
    EncoderModel source = build_encoder(arch, 3, 10);
    source.frozen = true;
    EncoderModel target = clone_into_target(source);
    DiscriminatorModel disc = build_discriminator(3, {16}, 0.001, 11);
    Rng rng = make_rng(12);
    Tensor x_s({4, 4});
    Tensor x_t({4, 4});
    for (double& v : x_s.values) v = normal01(rng);
    for (double& v : x_t.values) v = normal01(rng);

    const DiscriminatorModel disc_before = disc;
    const EncoderModel target_before = target;
    (void)eval_disc_loss(DiscLossKind::Joint, source, target, disc, x_s, {0, 1, 2, 0}, x_t, 0.7, 1);
    (void)eval_enc_loss(EncLossKind::MmdPq, DiscLossKind::Joint, source, target, disc, x_s, x_t, 0.7,
                        default_kernel_spec(), 1);
    CHECK(params_equal(disc.stack, disc_before.stack));
    CHECK(params_equal(target.stack, target_before.stack));
}
