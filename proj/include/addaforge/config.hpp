#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "addaforge/datasets.hpp"
#include "addaforge/models.hpp"
#include "addaforge/pipeline.hpp"

namespace addaforge {

// Config-file problems carry the offending line number in the message.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& message) : std::runtime_error(message) {}
};

struct DatasetConfig {
    enum class Kind { Synthetic, Idx };
    Kind kind = Kind::Synthetic;

    // synthetic
    SyntheticSpec synth;
    std::size_t eval_per_class = 300;  // size of the held-out synthetic eval draw

    // idx
    std::string source_images, source_labels;
    std::string target_images, target_labels;
    std::string eval_images, eval_labels;
    std::size_t source_subsample = 0;  // 0 keeps the full set
    std::size_t target_subsample = 0;
    std::size_t resize = 28;
};

// Flat key=value sections in a plain-text file; unknown keys are rejected
// and every omitted key keeps its default.
struct ExperimentConfig {
    DatasetConfig dataset;
    ArchSpec arch;
    PretrainConfig pretrain;
    AdaptSettings adapt;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    bool export_data = false;
    bool report_discriminator_path = false;

    // [ablation]
    std::vector<DiscLossKind> ablate_disc;
    std::vector<EncLossKind> ablate_enc;
    std::vector<bool> ablate_reg = {false};
    std::vector<std::uint64_t> ablate_seeds = {1, 2, 3};

    // [sweep]
    std::vector<double> sweep_z;
};

ExperimentConfig parse_experiment_config(const std::string& path);

// All splits an experiment needs, derived deterministically from the config
// and run seed.
struct ExperimentData {
    LabeledSet source;
    LabeledSet target_adapt;
    LabeledSet target_val;
    LabeledSet eval;
    std::size_t num_classes = 0;
};

ExperimentData load_experiment_data(const ExperimentConfig& config, std::uint64_t seed);

}  // namespace addaforge
