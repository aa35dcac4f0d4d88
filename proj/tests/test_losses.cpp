#include <stdexcept>
#include <algorithm>
#include <cmath>

#include "addaforge/losses.hpp"
#include "addaforge/models.hpp"
#include "addaforge/ops.hpp"
#include "doctest.h"

using namespace addaforge;

namespace {
const double kLn2 = std::log(2.0);
}

TEST_CASE("source cross entropy values") {
    CHECK(loss_source_ce(Tensor({1, 3}, {0.0, 1.0, 0.0}), {1}) == 0.0);
    CHECK(loss_source_ce(Tensor({1, 2}, {0.5, 0.5}), {0}) == doctest::Approx(kLn2));
    // batch of two rows with per-row losses 0 and ln 2
    const double two_rows = loss_source_ce(Tensor({2, 2}, {1.0, 0.0, 0.5, 0.5}), {0, 1});
    CHECK(two_rows == doctest::Approx(0.346574).epsilon(1e-5));
    CHECK_THROWS_AS(loss_source_ce(Tensor({1, 2}, {0.5, 0.5}), {2}), std::out_of_range);
    // clamp keeps a zero posterior finite
    CHECK(std::isfinite(loss_source_ce(Tensor({1, 2}, {0.0, 1.0}), {0})));
}

TEST_CASE("reconstruction discriminator loss terms") {
    // near-perfect reconstruction: source term ~ 0
    const Tensor p_hat({1, 3}, {1.0, 0.0, 0.0});
    const Tensor q_good({1, 3}, {1.0 - 2e-12, 1e-12, 1e-12});
    const Tensor q_t({1, 3}, {0.2, 0.3, 0.5});
    const double near_zero = loss_disc_rec(p_hat, q_good, q_t, {}, 0.0);
    CHECK(near_zero == doctest::Approx(-std::log(0.5)).epsilon(1e-9));

    // hand-computed source term ln 4 plus target term ln 2
    const Tensor p_half({1, 3}, {0.5, 0.5, 0.0});
    const Tensor q_s({1, 3}, {0.25, 0.25, 0.5});
    const double total = loss_disc_rec(p_half, q_s, q_t, {}, 0.0);
    CHECK(total == doctest::Approx(std::log(4.0) + kLn2).epsilon(1e-9));

    // L1 penalty on the weight matrices
    const Tensor w({2, 2}, {1.0, -2.0, 0.5, 0.0});
    const double with_l1 = loss_disc_rec(p_half, q_s, q_t, {&w}, 0.001);
    CHECK(with_l1 == doctest::Approx(total + 0.001 * 3.5).epsilon(1e-9));

    Tensor grad_q_s, grad_q_t;
    loss_disc_rec(p_half, q_s, q_t, {}, 0.0, &grad_q_s, &grad_q_t);
    CHECK(grad_q_s.at(0, 0) == doctest::Approx(-0.5 / 0.25));
    CHECK(grad_q_s.at(0, 2) == 0.0);
    CHECK(grad_q_t.at(0, 2) == doctest::Approx(-1.0 / 0.5));
}

TEST_CASE("adda discriminator loss") {
    CHECK(loss_disc_adda(std::vector<double>{1.0}, std::vector<double>{0.0}) == 0.0);
    CHECK(loss_disc_adda(std::vector<double>{0.5}, std::vector<double>{0.5}) ==
          doctest::Approx(2.0 * kLn2));
    CHECK(loss_disc_adda(std::vector<double>{0.9}, std::vector<double>{0.1}) ==
          doctest::Approx(0.210721).epsilon(1e-5));
    // clamped at zero probability
    CHECK(std::isfinite(loss_disc_adda(std::vector<double>{0.0}, std::vector<double>{1.0})));
}

TEST_CASE("inverted-label and minimax encoder losses") {
    CHECK(loss_tgt_domain(EncLossKind::Inv, std::vector<double>{1.0}) == 0.0);
    CHECK(loss_tgt_domain(EncLossKind::Inv, std::vector<double>{0.5}) == doctest::Approx(kLn2));
    CHECK(loss_tgt_domain(EncLossKind::Max, std::vector<double>{0.5}) == doctest::Approx(-kLn2));
    CHECK(loss_tgt_domain(EncLossKind::Inv, std::vector<double>{0.25}) ==
          doctest::Approx(1.386294).epsilon(1e-5));
    CHECK(loss_tgt_domain(EncLossKind::Max, std::vector<double>{0.25}) ==
          doctest::Approx(-0.287682).epsilon(1e-5));
    CHECK_THROWS_AS(loss_tgt_domain(EncLossKind::Feat, std::vector<double>{0.5}), std::invalid_argument);
}

TEST_CASE("two-head discriminator loss composes task CE and adda") {
    // perfect task head and perfect domain head
    CHECK(loss_disc_multi(Tensor({1, 2}, {1.0, 0.0}), {0}, std::vector<double>{1.0},
                          std::vector<double>{0.0}) == 0.0);
    // uniform task head, perfect domain head
    CHECK(loss_disc_multi(Tensor({1, 2}, {0.5, 0.5}), {0}, std::vector<double>{1.0},
                          std::vector<double>{0.0}) == doctest::Approx(kLn2));
    // substitution: ln 2 + 0.210721
    CHECK(loss_disc_multi(Tensor({1, 2}, {0.5, 0.5}), {0}, std::vector<double>{0.9},
                          std::vector<double>{0.1}) == doctest::Approx(0.903868).epsilon(1e-5));
}

TEST_CASE("joint discriminator loss and the marginalization identity") {
    const Tensor q_s_perfect({1, 3}, {1.0, 0.0, 0.0});
    const Tensor q_t_perfect({1, 3}, {0.0, 0.0, 1.0});
    CHECK(loss_disc_joint(q_s_perfect, {0}, q_t_perfect) == 0.0);

    const Tensor q_t_uniform({1, 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    CHECK(loss_disc_joint(q_s_perfect, {0}, q_t_uniform) == doctest::Approx(std::log(3.0)));

    // marginalizing the labels reduces JOINT to the ADDA formulation
    Rng rng = make_rng(55);
    Tensor logits({100, 4});
    for (double& v : logits.values) v = normal01(rng);
    const Tensor q = softmax(logits);
    std::vector<double> q1(q.rows());
    double marginalized = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i) {
        q1[i] = q.at(i, 0) + q.at(i, 1) + q.at(i, 2);
        marginalized += (-log_clamped(q1[i]) - log_clamped(q.at(i, 3))) / static_cast<double>(q.rows());
    }
    const double adda = loss_disc_adda(q1, q1);
    CHECK(std::fabs(adda - marginalized) < 1e-12);
}

TEST_CASE("feature matching loss") {
    const Tensor same({2, 2}, {1.0, 0.0, 0.0, 1.0});
    CHECK(loss_tgt_feat(same, same) == 0.0);

    const Tensor f_s({1, 2}, {1.0, 0.0});
    const Tensor f_t({1, 2}, {0.0, 1.0});
    CHECK(loss_tgt_feat(f_s, f_t) == doctest::Approx(2.0));

    const Tensor f_s2({2, 2}, {2.0, 0.0, 0.0, 0.0});
    const Tensor f_t2({2, 2}, {0.0, 0.0, 0.0, 2.0});
    Tensor grad;
    CHECK(loss_tgt_feat(f_s2, f_t2, &grad) == doctest::Approx(2.0));
    CHECK(grad.at(0, 0) == doctest::Approx(-1.0));  // -2 * diff / m with diff = (1, -1)
    CHECK(grad.at(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("pseudo-label loss and tie-breaking") {
    const Tensor h_d({1, 3}, {2.0, 1.0, 0.0});
    const Tensor q_t({1, 3}, {0.7, 0.2, 0.1});
    std::vector<int> labels;
    CHECK(loss_tgt_pseudo(h_d, q_t, nullptr, &labels) == doctest::Approx(0.356675).epsilon(1e-5));
    CHECK(labels == std::vector<int>{0});

    const Tensor tied({1, 3}, {1.0, 1.0, 0.0});
    loss_tgt_pseudo(tied, q_t, nullptr, &labels);
    CHECK(labels == std::vector<int>{0});

    // the K+1-th logit never wins the pseudo-label even if largest
    const Tensor tgt_logit({1, 3}, {0.1, 0.2, 9.0});
    loss_tgt_pseudo(tgt_logit, q_t, nullptr, &labels);
    CHECK(labels == std::vector<int>{1});

    const Tensor confident({1, 3}, {1.0 - 2e-12, 1e-12, 1e-12});
    CHECK(loss_tgt_pseudo(h_d, confident) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("mmd encoder loss agrees with the oracle and vanishes on equal sets") {
    Rng rng = make_rng(77);
    const KernelSpec kernel = default_kernel_spec();

    Tensor p_s = softmax(Tensor({4, 2}, {1.0, 0.0, 0.3, 0.9, -1.0, 0.2, 0.5, 0.5}));
    const Tensor q_equal = zero_concat(p_s);
    CHECK(std::fabs(loss_tgt_mmd(EncLossKind::MmdPq, p_s, {}, q_equal, kernel)) < 1e-12);

    Tensor logits({16, 4});
    for (double& v : logits.values) v = normal01(rng);
    const Tensor q_t = softmax(logits);
    Tensor src_logits({16, 3});
    for (double& v : src_logits.values) v = normal01(rng);
    const Tensor p_random = softmax(src_logits);
    const double via_loss = loss_tgt_mmd(EncLossKind::MmdPq, p_random, {}, q_t, kernel);
    const double via_oracle = mmd2_oracle(kernel, zero_concat(p_random), q_t);
    CHECK(std::fabs(via_loss - via_oracle) < 1e-12);

    // QQ route compares discriminator posteriors directly
    Tensor qs_logits({16, 4});
    for (double& v : qs_logits.values) v = normal01(rng);
    const Tensor q_s = softmax(qs_logits);
    CHECK(std::fabs(loss_tgt_mmd(EncLossKind::MmdQq, {}, q_s, q_t, kernel) -
                    mmd2_oracle(kernel, q_s, q_t)) < 1e-12);

    // invariant to row permutations within each set
    std::vector<std::size_t> perm{5, 3, 8, 1, 0, 2, 9, 4, 7, 6, 12, 15, 14, 13, 10, 11};
    const double permuted =
        loss_tgt_mmd(EncLossKind::MmdPq, take_rows(p_random, perm), {}, take_rows(q_t, perm), kernel);
    CHECK(std::fabs(permuted - via_loss) < 1e-12);
}

TEST_CASE("pairing validity mirrors the ablation table") {
    using D = DiscLossKind;
    using E = EncLossKind;
    const std::vector<std::pair<D, std::vector<E>>> expected = {
        {D::Adda, {E::Inv, E::Max}},
        {D::Multi, {E::Inv, E::Max}},
        {D::Joint, {E::Max, E::Feat, E::Pseudo, E::MmdPq, E::MmdQq}},
        {D::Rec, {E::MmdPq, E::MmdQq}},
    };
    for (const auto& [disc, enc_list] : expected) {
        for (E enc : {E::Inv, E::Max, E::Feat, E::Pseudo, E::MmdQq, E::MmdPq}) {
            const bool should = std::find(enc_list.begin(), enc_list.end(), enc) != enc_list.end();
            CHECK_MESSAGE(valid_pairing(disc, enc) == should,
                          to_string(disc) << " x " << to_string(enc));
        }
    }
}

TEST_CASE("loss name round trips") {
    for (const char* name : {"ADDA", "MULTI", "JOINT", "REC"}) {
        CHECK(to_string(disc_loss_from_string(name)) == name);
    }
    for (const char* name : {"INV", "MAX", "FEAT", "PSEUDO", "MMD_QQ", "MMD_PQ"}) {
        CHECK(to_string(enc_loss_from_string(name)) == name);
    }
    CHECK_THROWS_AS(disc_loss_from_string("GAN"), std::invalid_argument);
    CHECK_THROWS_AS(enc_loss_from_string("mmd"), std::invalid_argument);
}
