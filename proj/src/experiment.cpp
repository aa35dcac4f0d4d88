#include "addaforge/experiment.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "addaforge/checkpoint.hpp"
#include "addaforge/ops.hpp"

namespace addaforge {

namespace {

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

std::map<std::string, std::string> ExperimentSummary::as_key_values() const {
    std::map<std::string, std::string> kv;
    kv["seed"] = std::to_string(seed);
    kv["pretrain_accuracy"] = format_double(pretrain_accuracy);
    kv["source_only_accuracy"] = format_double(source_only_accuracy);
    kv["final_accuracy"] = format_double(final_accuracy);
    if (final_val_accuracy.has_value()) kv["final_val_accuracy"] = format_double(*final_val_accuracy);
    if (disc_path_accuracy.has_value()) kv["disc_path_accuracy"] = format_double(*disc_path_accuracy);
    kv["wall_seconds"] = format_double(wall_seconds);
    return kv;
}

void write_summary(const std::string& path, const ExperimentSummary& summary) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write summary file " + path);
    for (const auto& [key, value] : summary.as_key_values()) out << key << "=" << value << "\n";
}

ExperimentSummary run_experiment(const ExperimentConfig& config, const RunOverrides& overrides) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentSummary summary;
    summary.seed = overrides.seed.value_or(config.seed);
    summary.out_dir = overrides.out_dir.value_or(config.out_dir);

    const ExperimentData data = load_experiment_data(config, summary.seed);

    namespace fs = std::filesystem;
    const bool writing = !summary.out_dir.empty();
    if (writing) {
        fs::create_directories(summary.out_dir);
        fs::create_directories(fs::path(summary.out_dir) / "checkpoints");
        if (config.export_data) {
            export_csv(data.source, (fs::path(summary.out_dir) / "source.csv").string());
            export_csv(data.target_adapt, (fs::path(summary.out_dir) / "target_adapt.csv").string());
            export_csv(data.eval, (fs::path(summary.out_dir) / "eval.csv").string());
        }
    }

    EncoderModel source_enc;
    if (overrides.source_checkpoint.has_value()) {
        source_enc = load_encoder(*overrides.source_checkpoint);
        source_enc.frozen = true;
    } else {
        source_enc = pretrain_source(config.pretrain, config.arch, data.num_classes, data.source,
                                     summary.seed);
    }
    summary.pretrain_accuracy = infer(source_enc, data.source).accuracy.value_or(0.0);
    summary.source_only_accuracy = infer(source_enc, data.eval).accuracy.value_or(0.0);

    if (writing) {
        save_encoder((fs::path(summary.out_dir) / "checkpoints" / "source_encoder.addf").string(),
                     source_enc, {{"seed", std::to_string(summary.seed)}});
    }

    std::ofstream metrics;
    if (writing) {
        metrics.open(fs::path(summary.out_dir) / "metrics.csv");
        if (!metrics) throw std::runtime_error("cannot write metrics.csv under " + summary.out_dir);
    }
    AdaptResult adapted = adapt_target(config.adapt, source_enc, data.source, data.target_adapt,
                                       &data.target_val, summary.seed, writing ? &metrics : nullptr);

    summary.final_accuracy = infer(adapted.target_encoder, data.eval).accuracy.value_or(0.0);
    for (auto it = adapted.metrics.rbegin(); it != adapted.metrics.rend(); ++it) {
        if (it->val_accuracy.has_value()) {
            summary.final_val_accuracy = it->val_accuracy;
            break;
        }
    }
    if (config.report_discriminator_path) {
        // Inference through the discriminator instead of the encoder softmax:
        // argmax of the first K entries of q_t on clean logits.
        const Tensor h_t = encoder_logits(adapted.target_encoder, data.eval.features);
        const DiscriminatorOutputs outs = discriminator_posteriors(adapted.discriminator, h_t, 1.0, 0);
        const std::vector<int> preds = argmax_rows(outs.q, outs.q.cols() - 1);
        summary.disc_path_accuracy = accuracy(preds, data.eval.labels);
    }

    if (writing) {
        save_encoder((fs::path(summary.out_dir) / "checkpoints" / "target_encoder.addf").string(),
                     adapted.target_encoder,
                     {{"seed", std::to_string(summary.seed)},
                      {"iteration", std::to_string(config.adapt.iters)},
                      {"disc_loss", to_string(config.adapt.disc_loss)},
                      {"enc_loss", to_string(config.adapt.enc_loss)},
                      {"target_reg", config.adapt.target_reg ? "true" : "false"}});
    }

    summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (writing) {
        write_summary((fs::path(summary.out_dir) / "summary.txt").string(), summary);
    }
    return summary;
}

}  // namespace addaforge
