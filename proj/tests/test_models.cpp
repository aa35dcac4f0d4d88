#include <stdexcept>
#include <cmath>

#include "addaforge/models.hpp"
#include "addaforge/ops.hpp"
#include "doctest.h"

using namespace addaforge;

TEST_CASE("digits-small encoder ends in K logits") {
    ArchSpec arch;
    arch.preset = ArchPreset::DigitsSmall;
    const EncoderModel model = build_encoder(arch, 10, 1);
    CHECK(output_shape(model.stack, {2, 1, 28, 28}) == std::vector<std::size_t>{2, 10});
    // Conv(5,32) -> Pool(2,2) -> Conv(5,48) -> FC(100) -> FC(K) with ReLUs
    CHECK(model.stack.layers.size() == 8);
}

TEST_CASE("mlp encoder parameter count matches shape arithmetic") {
    ArchSpec arch;
    arch.input_dim = 2;
    arch.hidden = {16};
    const EncoderModel model = build_encoder(arch, 3, 1);
    CHECK(model.stack.param_count() == 2 * 16 + 16 + 16 * 3 + 3);  // 99
}

TEST_CASE("build_encoder is deterministic per seed") {
    ArchSpec arch;
    arch.input_dim = 4;
    arch.hidden = {8};
    const EncoderModel a = build_encoder(arch, 3, 42);
    const EncoderModel b = build_encoder(arch, 3, 42);
    const EncoderModel c = build_encoder(arch, 3, 43);
    CHECK(params_equal(a.stack, b.stack));
    CHECK_FALSE(params_equal(a.stack, c.stack));
    CHECK_THROWS_AS(build_encoder(arch, 1, 1), std::invalid_argument);
}

TEST_CASE("clone_into_target copies and isolates") {
    ArchSpec arch;
    arch.input_dim = 3;
    arch.hidden = {6};
    EncoderModel source = build_encoder(arch, 3, 5);
    source.frozen = true;
    EncoderModel target = clone_into_target(source);
    CHECK_FALSE(target.frozen);
    CHECK(source.frozen);

    Rng rng = make_rng(8);
    Tensor x({4, 3});
    for (double& v : x.values) v = normal01(rng);
    const Tensor hs = encoder_logits(source, x);
    const Tensor ht = encoder_logits(target, x);
    for (std::size_t i = 0; i < hs.size(); ++i) CHECK(std::fabs(hs.values[i] - ht.values[i]) <= 1e-15);

    // mutate the clone; the source must not move
    const std::vector<double> before = std::get<AffineLayer>(source.stack.layers[0]).weight.values;
    std::get<AffineLayer>(target.stack.layers[0]).weight.values[0] += 1.0;
    CHECK(std::get<AffineLayer>(source.stack.layers[0]).weight.values == before);
}

TEST_CASE("zero_concat appends an exact zero and validates rows") {
    const Tensor p({2, 2}, {0.3, 0.7, 1.0, 0.0});
    const Tensor z = zero_concat(p);
    CHECK(z.shape == std::vector<std::size_t>{2, 3});
    CHECK(z.at(0, 0) == 0.3);
    CHECK(z.at(0, 1) == 0.7);
    CHECK(z.at(0, 2) == 0.0);
    CHECK(z.at(1, 0) == 1.0);
    CHECK(z.at(1, 2) == 0.0);

    const Tensor uniform({1, 4}, {0.25, 0.25, 0.25, 0.25});
    const Tensor zu = zero_concat(uniform);
    double sum = 0.0;
    for (double v : zu.values) sum += v;
    CHECK(sum == 1.0);

    CHECK_THROWS_AS(zero_concat(Tensor({1, 2}, {0.6, 0.6})), std::invalid_argument);
}

TEST_CASE("predict breaks ties toward the lowest index") {
    ArchSpec arch;
    arch.input_dim = 2;
    arch.hidden = {4};
    EncoderModel model = build_encoder(arch, 3, 2);
    // overwrite the final affine so the logits are the raw input mapped
    // through known rows
    CHECK(argmax_rows(Tensor({1, 3}, {0.1, 2.0, -1.0}))[0] == 1);
    CHECK(argmax_rows(Tensor({1, 3}, {1.0, 1.0, 0.0}))[0] == 0);

    Rng rng = make_rng(4);
    Tensor logits({16, 3});
    for (double& v : logits.values) v = normal01(rng);
    const auto direct = argmax_rows(logits);
    const auto via_softmax = argmax_rows(softmax(logits));
    CHECK(direct == via_softmax);
    (void)model;
}

TEST_CASE("discriminator posteriors expose q, f and pre-softmax logits") {
    DiscriminatorModel disc = build_discriminator(3, {16, 16}, 0.001, 7);
    Rng rng = make_rng(11);
    Tensor h({5, 3});
    for (double& v : h.values) v = normal01(rng);

    const DiscriminatorOutputs clean = discriminator_posteriors(disc, h, 1.0, 99);
    CHECK(clean.q.shape == std::vector<std::size_t>{5, 4});
    CHECK(clean.features.shape == std::vector<std::size_t>{5, 16});
    CHECK(clean.logits.shape == std::vector<std::size_t>{5, 4});
    // z = 1: q equals softmax of the clean forward pass
    const Tensor expected = softmax(forward(disc.stack, h, Mode::Eval).output());
    CHECK(clean.q.values == expected.values);

    for (std::size_t r = 0; r < clean.q.rows(); ++r) {
        double sum = 0.0;
        for (std::size_t j = 0; j < clean.q.cols(); ++j) sum += clean.q.at(r, j);
        CHECK(std::fabs(sum - 1.0) < 1e-12);
    }

    const DiscriminatorOutputs a = discriminator_posteriors(disc, h, 0.6, 1234);
    const DiscriminatorOutputs b = discriminator_posteriors(disc, h, 0.6, 1234);
    CHECK(a.q.values == b.q.values);  // identical corruption masks per seed

    CHECK_THROWS_AS(discriminator_posteriors(disc, Tensor({2, 5}), 1.0, 0), std::invalid_argument);
}

TEST_CASE("build_discriminator validates its configuration") {
    CHECK_THROWS_AS(build_discriminator(1, {8}, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_discriminator(3, {}, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_discriminator(3, {8}, -0.5, 1), std::invalid_argument);
    const DiscriminatorModel disc = build_discriminator(4, {32, 32}, 0.001, 9);
    CHECK(output_shape(disc.stack, {2, 4}) == std::vector<std::size_t>{2, 5});
    CHECK(disc.all_params().size() == disc.stack.params().size() + 4);
}
