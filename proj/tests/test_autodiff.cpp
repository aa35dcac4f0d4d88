#include <stdexcept>
#include <cmath>

#include "addaforge/adam.hpp"
#include "addaforge/autodiff.hpp"
#include "addaforge/gradcheck.hpp"
#include "addaforge/ops.hpp"
#include "doctest.h"

using namespace addaforge;

namespace {

LayerStack identity_affine(std::size_t n) {
    LayerStack stack = make_affine(n, n);
    auto& a = std::get<AffineLayer>(stack.layers[0]);
    for (std::size_t i = 0; i < n; ++i) a.weight.at(i, i) = 1.0;
    return stack;
}

}  // namespace

TEST_CASE("tensor shape bookkeeping") {
    CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5, 0.0)), std::invalid_argument);
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.at(1, 2) == 6.0);
    const Tensor rows = take_rows(t, {1, 0, 1});
    CHECK(rows.shape == std::vector<std::size_t>{3, 3});
    CHECK(rows.at(0, 0) == 4.0);
    CHECK(rows.at(2, 2) == 6.0);
    const Tensor both = concat_rows(t, rows);
    CHECK(both.dim(0) == 5);
    CHECK_THROWS(concat_rows(t, Tensor({1, 2})));
}

TEST_CASE("affine identity maps input to itself") {
    const LayerStack stack = identity_affine(2);
    const Tensor input({1, 2}, {1.0, 2.0});
    const ForwardTrace trace = forward(stack, input, Mode::Eval);
    CHECK(trace.output().values[0] == doctest::Approx(1.0));
    CHECK(trace.output().values[1] == doctest::Approx(2.0));
}

TEST_CASE("relu forward and dead-unit backward") {
    LayerStack stack;
    stack.layers.emplace_back(ReluLayer{});
    const Tensor input({1, 3}, {-1.0, 0.0, 3.0});
    const ForwardTrace trace = forward(stack, input, Mode::Eval);
    CHECK(trace.output().values == std::vector<double>{0.0, 0.0, 3.0});

    const Tensor ones({1, 3}, {1.0, 1.0, 1.0});
    const GradTape tape = backward(stack, trace, ones);
    CHECK(tape.input_grad.values[0] == 0.0);  // dead unit at -1
    CHECK(tape.input_grad.values[1] == 0.0);  // relu grad at exactly 0 is 0
    CHECK(tape.input_grad.values[2] == 1.0);
}

TEST_CASE("valid-padding conv of all-ones sums the window") {
    LayerStack stack;
    Conv2dLayer c;
    c.kernel = 5;
    c.in_channels = 1;
    c.out_channels = 1;
    c.stride = 1;
    c.padding = ConvPadding::Valid;
    c.weight = Tensor({1, 1, 5, 5}, 1.0);
    c.bias = Tensor({1});
    stack.layers.emplace_back(std::move(c));
    const Tensor image({1, 1, 5, 5}, 1.0);
    const ForwardTrace trace = forward(stack, image, Mode::Eval);
    CHECK(trace.output().shape == std::vector<std::size_t>{1, 1, 1, 1});
    CHECK(trace.output().values[0] == doctest::Approx(25.0));
}

TEST_CASE("same-padding conv preserves spatial extent") {
    LayerStack stack;
    Conv2dLayer c;
    c.kernel = 5;
    c.in_channels = 1;
    c.out_channels = 3;
    c.weight = Tensor({3, 1, 5, 5}, 0.1);
    c.bias = Tensor({3});
    stack.layers.emplace_back(std::move(c));
    CHECK(output_shape(stack, {4, 1, 28, 28}) == std::vector<std::size_t>{4, 3, 28, 28});
}

TEST_CASE("single affine backward gives dW = g x^T") {
    LayerStack stack = make_affine(3, 2);
    Rng rng = make_rng(7);
    init_params(stack, rng);
    const Tensor x({1, 3}, {1.0, -2.0, 0.5});
    const ForwardTrace trace = forward(stack, x, Mode::Eval);
    const Tensor g({1, 2}, {2.0, -1.0});
    const GradTape tape = backward(stack, trace, g);
    for (std::size_t o = 0; o < 2; ++o) {
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(tape.param_grads[0].at(o, i) == doctest::Approx(g.values[o] * x.values[i]));
        }
        CHECK(tape.param_grads[1].values[o] == doctest::Approx(g.values[o]));
    }
}

TEST_CASE("two-layer mlp matches finite differences") {
    LayerStack stack = make_mlp(3, {5}, 2);
    Rng rng = make_rng(21);
    init_params(stack, rng);
    Tensor x({4, 3});
    for (double& v : x.values) v = normal01(rng);

    const auto loss = [&]() {
        const Tensor out = forward(stack, x, Mode::Eval).output();
        double acc = 0.0;
        for (double v : out.values) acc += 0.5 * v * v;
        return acc;
    };
    const ForwardTrace trace = forward(stack, x, Mode::Eval);
    const GradTape tape = backward(stack, trace, trace.output());
    const GradCheckReport report = finite_diff_check(stack.params(), tape.param_grads, loss, 1e-5, 1e-6);
    CHECK_MESSAGE(report.passed(), report.summary());
}

TEST_CASE("conv-pool-affine network matches finite differences") {
    LayerStack stack;
    Conv2dLayer c;
    c.kernel = 3;
    c.in_channels = 1;
    c.out_channels = 2;
    c.weight = Tensor({2, 1, 3, 3});
    c.bias = Tensor({2});
    stack.layers.emplace_back(std::move(c));
    stack.layers.emplace_back(ReluLayer{});
    stack.layers.emplace_back(MaxPoolLayer{2, 2});
    AffineLayer fc;
    fc.in = 2 * 3 * 3;
    fc.out = 2;
    fc.weight = Tensor({2, fc.in});
    fc.bias = Tensor({2});
    stack.layers.emplace_back(std::move(fc));
    Rng rng = make_rng(33);
    init_params(stack, rng);
    Tensor x({2, 1, 6, 6});
    for (double& v : x.values) v = normal01(rng);

    const auto loss = [&]() {
        const Tensor out = forward(stack, x, Mode::Eval).output();
        double acc = 0.0;
        for (double v : out.values) acc += 0.5 * v * v;
        return acc;
    };
    const ForwardTrace trace = forward(stack, x, Mode::Eval);
    const GradTape tape = backward(stack, trace, trace.output());
    const GradCheckReport report = finite_diff_check(stack.params(), tape.param_grads, loss, 1e-5, 1e-5);
    CHECK_MESSAGE(report.passed(), report.summary());
}

TEST_CASE("forward rejects mismatched input shapes") {
    LayerStack stack = make_affine(4, 2);
    CHECK_THROWS_WITH_AS(forward(stack, Tensor({2, 3}), Mode::Eval),
                         doctest::Contains("expected input width 4"), std::invalid_argument);
}

TEST_CASE("dropout layer is identity in eval mode and deterministic per seed") {
    LayerStack stack;
    stack.layers.emplace_back(DropoutLayer{0.5});
    Tensor x({4, 8});
    Rng init = make_rng(3);
    for (double& v : x.values) v = normal01(init);

    CHECK(forward(stack, x, Mode::Eval).output().values == x.values);

    Rng rng_a = make_rng(9);
    Rng rng_b = make_rng(9);
    const ForwardTrace a = forward(stack, x, Mode::Train, &rng_a);
    const ForwardTrace b = forward(stack, x, Mode::Train, &rng_b);
    CHECK(a.output().values == b.output().values);
    CHECK_THROWS_AS(forward(stack, x, Mode::Train), std::invalid_argument);

    // recorded mask drives the backward pass
    Tensor ones(x.shape, 1.0);
    const GradTape tape = backward(stack, a, ones);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(tape.input_grad.values[i] == a.dropout_masks[0].values[i]);
    }
}

TEST_CASE("softmax examples and invariants") {
    const Tensor even = softmax(Tensor({1, 2}, {0.0, 0.0}));
    CHECK(even.values[0] == doctest::Approx(0.5).epsilon(1e-12));

    const Tensor analytic = softmax(Tensor({1, 2}, {std::log(2.0), 0.0}));
    CHECK(analytic.values[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(analytic.values[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const Tensor extreme = softmax(Tensor({1, 2}, {1000.0, 0.0}));
    CHECK(all_finite(extreme));
    CHECK(std::fabs(extreme.values[0] - 1.0) < 1e-12);
    CHECK(extreme.values[1] < 1e-12);

    Rng rng = make_rng(5);
    Tensor logits({32, 6});
    for (double& v : logits.values) v = 10.0 * normal01(rng);
    const Tensor p = softmax(logits);
    Tensor shifted = logits;
    for (std::size_t r = 0; r < shifted.rows(); ++r) {
        for (std::size_t j = 0; j < shifted.cols(); ++j) shifted.at(r, j) += 123.5;
    }
    const Tensor p2 = softmax(shifted);
    for (std::size_t r = 0; r < p.rows(); ++r) {
        double sum = 0.0;
        for (std::size_t j = 0; j < p.cols(); ++j) sum += p.at(r, j);
        CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::fabs(p.values[i] - p2.values[i]) < 1e-12);
}

TEST_CASE("dropout mask statistics and scaling") {
    Rng rng = make_rng(77);
    const Tensor all_kept = dropout_mask({4, 4}, 1.0, rng);
    for (double v : all_kept.values) CHECK(v == 1.0);

    const double z = 0.7;
    const Tensor mask = dropout_mask({100000}, z, rng);
    std::size_t zeros = 0;
    double mean = 0.0;
    for (double v : mask.values) {
        if (v == 0.0) ++zeros;
        mean += v;
    }
    mean /= static_cast<double>(mask.size());
    const double zero_fraction = static_cast<double>(zeros) / static_cast<double>(mask.size());
    CHECK(zero_fraction > 0.28);
    CHECK(zero_fraction < 0.32);
    CHECK(mean == doctest::Approx(1.0).epsilon(0.01));  // E[h~] == h elementwise

    // elementwise corruption with a pinned mask
    const Tensor logits({1, 3}, {3.0, -1.0, 2.0});
    const Tensor pinned({1, 3}, {1.0 / 0.7, 0.0, 1.0 / 0.7});
    Tensor corrupted = logits;
    for (std::size_t i = 0; i < corrupted.size(); ++i) corrupted.values[i] *= pinned.values[i];
    CHECK(corrupted.values[0] == doctest::Approx(4.285714285714286));
    CHECK(corrupted.values[1] == 0.0);
    CHECK(corrupted.values[2] == doctest::Approx(2.857142857142857));

    CHECK_THROWS_AS(dropout_mask({2}, 0.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(dropout_mask({2}, 1.5, rng), std::invalid_argument);

    const Tensor unscaled = dropout_mask({64}, 0.5, rng, false);
    for (double v : unscaled.values) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("adam: zero gradient leaves parameters untouched") {
    LayerStack stack = make_affine(2, 2);
    Rng rng = make_rng(1);
    init_params(stack, rng);
    const std::vector<double> before = std::get<AffineLayer>(stack.layers[0]).weight.values;
    AdamState state = make_adam(stack.params(), {0.01, 0.9, 0.999, 1e-8});
    const std::vector<Tensor> zero_grads{Tensor({2, 2}), Tensor({2})};
    adam_step(stack.params(), zero_grads, state);
    CHECK(std::get<AffineLayer>(stack.layers[0]).weight.values == before);
    CHECK(state.step_count == 1);
    for (double v : state.m[0].values) CHECK(v == 0.0);
}

TEST_CASE("adam first step and constant-gradient fixed point") {
    Tensor param({1}, {0.0});
    std::vector<Tensor*> params{&param};
    AdamState state = make_adam(params, {0.001, 0.9, 0.999, 1e-8});
    const std::vector<Tensor> grad{Tensor({1}, {1.0})};
    adam_step(params, grad, state);
    // bias-corrected first step: -lr * g / (|g| + eps)
    CHECK(param.values[0] == doctest::Approx(-0.001).epsilon(1e-6));

    double prev = param.values[0];
    double update = 0.0;
    for (int i = 0; i < 5000; ++i) {
        adam_step(params, grad, state);
        update = prev - param.values[0];
        prev = param.values[0];
    }
    CHECK(update == doctest::Approx(0.001).epsilon(0.02));
}

TEST_CASE("adam rejects mismatched shapes") {
    Tensor param({2}, {0.0, 0.0});
    std::vector<Tensor*> params{&param};
    AdamState state = make_adam(params, {});
    const std::vector<Tensor> grad{Tensor({3})};
    CHECK_THROWS_AS(adam_step(params, grad, state), std::invalid_argument);
}

TEST_CASE("finite_diff_check on a quadratic is nearly exact") {
    Tensor p({4}, {0.3, -1.2, 2.0, 0.7});
    std::vector<Tensor*> params{&p};
    const auto loss = [&]() {
        double acc = 0.0;
        for (double v : p.values) acc += 0.5 * v * v;
        return acc;
    };
    const std::vector<Tensor> analytic{p};
    const GradCheckReport report = finite_diff_check(params, analytic, loss, 1e-5, 1e-9);
    CHECK_MESSAGE(report.passed(), report.summary());
}

TEST_CASE("finite_diff_check flags wrong gradients and non-determinism") {
    Tensor p({2}, {1.0, 2.0});
    std::vector<Tensor*> params{&p};
    const auto loss = [&]() { return p.values[0] * p.values[0] + p.values[1]; };
    std::vector<Tensor> wrong{Tensor({2}, {0.0, 1.0})};
    CHECK_FALSE(finite_diff_check(params, wrong, loss, 1e-5, 1e-4).passed());

    int counter = 0;
    const auto flaky = [&]() { return static_cast<double>(counter++); };
    CHECK_THROWS_WITH_AS(finite_diff_check(params, wrong, flaky, 1e-5, 1e-4),
                         doctest::Contains("non-deterministic"), std::runtime_error);
}
