#pragma once

#include <map>
#include <optional>
#include <string>

#include "addaforge/config.hpp"

namespace addaforge {

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> source_checkpoint;  // skip pretraining, load this
};

struct ExperimentSummary {
    double pretrain_accuracy = 0.0;     // source train accuracy after step 1
    double source_only_accuracy = 0.0;  // eval accuracy before adaptation
    double final_accuracy = 0.0;        // eval accuracy after adaptation
    std::optional<double> final_val_accuracy;
    std::optional<double> disc_path_accuracy;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    std::string out_dir;

    std::map<std::string, std::string> as_key_values() const;
};

// Full run: pretrain (or load) -> adapt -> infer. Writes metrics.csv,
// summary.txt and checkpoints/ under the output directory; with an empty
// out_dir nothing is written.
ExperimentSummary run_experiment(const ExperimentConfig& config, const RunOverrides& overrides = {});

void write_summary(const std::string& path, const ExperimentSummary& summary);

}  // namespace addaforge
