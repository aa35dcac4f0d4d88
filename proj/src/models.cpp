#include "addaforge/models.hpp"

#include <cmath>
#include <stdexcept>

#include "addaforge/ops.hpp"

namespace addaforge {

ArchPreset arch_preset_from_string(const std::string& name) {
    if (name == "mlp-synthetic") return ArchPreset::MlpSynthetic;
    if (name == "digits-small") return ArchPreset::DigitsSmall;
    throw std::invalid_argument("unknown architecture preset '" + name +
                                "' (expected mlp-synthetic or digits-small)");
}

std::string to_string(ArchPreset preset) {
    return preset == ArchPreset::MlpSynthetic ? "mlp-synthetic" : "digits-small";
}

EncoderModel build_encoder(const ArchSpec& arch, std::size_t num_classes, std::uint64_t seed) {
    if (num_classes < 2) throw std::invalid_argument("build_encoder: need at least 2 classes");
    EncoderModel model;
    model.arch = arch;
    model.num_classes = num_classes;
    if (arch.preset == ArchPreset::MlpSynthetic) {
        if (arch.input_dim == 0) throw std::invalid_argument("build_encoder: mlp input_dim must be positive");
        model.stack = make_mlp(arch.input_dim, arch.hidden, num_classes);
    } else {
        LayerStack s;
        Conv2dLayer c1;
        c1.kernel = 5;
        c1.in_channels = arch.image_channels;
        c1.out_channels = 32;
        c1.stride = 1;
        c1.padding = ConvPadding::Same;
        c1.weight = Tensor({32, arch.image_channels, 5, 5});
        c1.bias = Tensor({32});
        s.layers.emplace_back(std::move(c1));
        s.layers.emplace_back(ReluLayer{});
        s.layers.emplace_back(MaxPoolLayer{2, 2});
        Conv2dLayer c2;
        c2.kernel = 5;
        c2.in_channels = 32;
        c2.out_channels = 48;
        c2.stride = 1;
        c2.padding = ConvPadding::Same;
        c2.weight = Tensor({48, 32, 5, 5});
        c2.bias = Tensor({48});
        s.layers.emplace_back(std::move(c2));
        s.layers.emplace_back(ReluLayer{});
        const std::size_t half = arch.image_size / 2;
        const std::size_t flat = 48 * half * half;
        AffineLayer fc1;
        fc1.in = flat;
        fc1.out = 100;
        fc1.weight = Tensor({100, flat});
        fc1.bias = Tensor({100});
        s.layers.emplace_back(std::move(fc1));
        s.layers.emplace_back(ReluLayer{});
        AffineLayer fc2;
        fc2.in = 100;
        fc2.out = num_classes;
        fc2.weight = Tensor({num_classes, 100});
        fc2.bias = Tensor({num_classes});
        s.layers.emplace_back(std::move(fc2));
        model.stack = std::move(s);
    }
    Rng rng = make_rng(seed, 0x656e63);  // encoder init stream
    init_params(model.stack, rng);
    return model;
}

EncoderModel clone_into_target(const EncoderModel& source) {
    EncoderModel target = source;  // deep copy via vector copies
    target.frozen = false;
    return target;
}

Tensor prepare_input(const LayerStack& stack, const Tensor& batch) {
    if (!stack.layers.empty() && std::holds_alternative<Conv2dLayer>(stack.layers.front()) &&
        batch.rank() == 3) {
        Tensor reshaped = batch;
        reshaped.shape = {batch.dim(0), 1, batch.dim(1), batch.dim(2)};
        return reshaped;
    }
    return batch;
}

Tensor encoder_logits(const EncoderModel& model, const Tensor& batch) {
    return forward(model.stack, prepare_input(model.stack, batch), Mode::Eval).output();
}

std::vector<int> predict(const EncoderModel& model, const Tensor& batch) {
    return argmax_rows(encoder_logits(model, batch));
}

Tensor zero_concat(const Tensor& posteriors) {
    if (posteriors.rank() != 2) throw std::invalid_argument("zero_concat expects a rank-2 tensor");
    const std::size_t n = posteriors.rows();
    const std::size_t k = posteriors.cols();
    Tensor out({n, k + 1});
    for (std::size_t r = 0; r < n; ++r) {
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += posteriors.at(r, j);
        if (std::fabs(sum - 1.0) > 1e-9) {
            throw std::invalid_argument("zero_concat: row " + std::to_string(r) + " sums to " +
                                        std::to_string(sum) + ", not 1");
        }
        for (std::size_t j = 0; j < k; ++j) out.at(r, j) = posteriors.at(r, j);
        out.at(r, k) = 0.0;
    }
    return out;
}

std::vector<Tensor*> DiscriminatorModel::all_params() {
    std::vector<Tensor*> out = stack.params();
    for (Tensor* p : task_head.params()) out.push_back(p);
    for (Tensor* p : domain_head.params()) out.push_back(p);
    return out;
}

std::vector<const Tensor*> DiscriminatorModel::all_params() const {
    std::vector<const Tensor*> out = stack.params();
    for (const Tensor* p : task_head.params()) out.push_back(p);
    for (const Tensor* p : domain_head.params()) out.push_back(p);
    return out;
}

DiscriminatorModel build_discriminator(std::size_t num_classes, const std::vector<std::size_t>& hidden,
                                       double l1_lambda, std::uint64_t seed) {
    if (num_classes < 2) throw std::invalid_argument("build_discriminator: need at least 2 classes");
    if (hidden.empty()) throw std::invalid_argument("build_discriminator: need at least one hidden layer");
    if (l1_lambda < 0.0) throw std::invalid_argument("build_discriminator: l1_lambda must be nonnegative");
    DiscriminatorModel disc;
    disc.num_classes = num_classes;
    disc.l1_lambda = l1_lambda;
    disc.stack = make_mlp(num_classes, hidden, num_classes + 1);
    // f(h) is the input of the final affine: the post-ReLU output of the last
    // hidden layer.
    disc.feature_index = disc.stack.layers.size() - 1;
    disc.task_head = make_affine(hidden.back(), num_classes);
    disc.domain_head = make_affine(hidden.back(), 2);
    Rng rng = make_rng(seed, 0x64697363);  // discriminator init stream
    init_params(disc.stack, rng);
    init_params(disc.task_head, rng);
    init_params(disc.domain_head, rng);
    return disc;
}

DiscriminatorOutputs discriminator_posteriors(const DiscriminatorModel& disc, const Tensor& encoder_logits,
                                              double keep_prob, std::uint64_t seed) {
    if (encoder_logits.rank() != 2 || encoder_logits.cols() != disc.num_classes) {
        throw std::invalid_argument("discriminator_posteriors: expected [n x " +
                                    std::to_string(disc.num_classes) + "] logits, got " +
                                    shape_str(encoder_logits.shape));
    }
    Rng rng = make_rng(seed, 0x6d61736b);
    const Tensor mask = dropout_mask(encoder_logits.shape, keep_prob, rng);
    Tensor corrupted = encoder_logits;
    for (std::size_t i = 0; i < corrupted.size(); ++i) corrupted.values[i] *= mask.values[i];
    const ForwardTrace trace = forward(disc.stack, corrupted, Mode::Eval);
    DiscriminatorOutputs out;
    out.logits = trace.output();
    out.q = softmax(out.logits);
    out.features = trace.activations[disc.feature_index];
    return out;
}

}  // namespace addaforge
