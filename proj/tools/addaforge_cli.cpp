#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "addaforge/checkpoint.hpp"
#include "addaforge/experiment.hpp"
#include "addaforge/verify.hpp"

namespace fs = std::filesystem;
using namespace addaforge;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfigError = 2;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

ExperimentConfig load_config(const CommonArgs& args) {
    ExperimentConfig config = parse_experiment_config(args.config_path);
    if (args.seed.has_value()) config.seed = *args.seed;
    if (args.out_dir.has_value()) config.out_dir = *args.out_dir;
    return config;
}

void write_predictions(const std::string& path, const std::vector<int>& predictions,
                       const std::vector<int>& labels) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "index,prediction,label\n";
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        out << i << "," << predictions[i] << ",";
        if (i < labels.size()) out << labels[i];
        out << "\n";
    }
}

int cmd_run(const CommonArgs& args, const std::optional<std::string>& checkpoint) {
    ExperimentConfig config = load_config(args);
    RunOverrides overrides;
    overrides.source_checkpoint = checkpoint;
    const ExperimentSummary summary = run_experiment(config, overrides);
    for (const auto& [key, value] : summary.as_key_values()) {
        std::cout << key << "=" << value << "\n";
    }
    return 0;
}

int cmd_pretrain(const CommonArgs& args) {
    ExperimentConfig config = load_config(args);
    const std::uint64_t seed = config.seed;
    const ExperimentData data = load_experiment_data(config, seed);
    const EncoderModel model = pretrain_source(config.pretrain, config.arch, data.num_classes, data.source,
                                               seed);
    const double train_acc = infer(model, data.source).accuracy.value_or(0.0);
    fs::create_directories(fs::path(config.out_dir) / "checkpoints");
    const std::string path = (fs::path(config.out_dir) / "checkpoints" / "source_encoder.addf").string();
    save_encoder(path, model, {{"seed", std::to_string(seed)}});
    std::cout << "checkpoint=" << path << "\n";
    std::cout << "pretrain_accuracy=" << train_acc << "\n";
    return 0;
}

int cmd_infer(const CommonArgs& args, const std::string& checkpoint) {
    ExperimentConfig config = load_config(args);
    EncoderModel model = load_encoder(checkpoint);
    const ExperimentData data = load_experiment_data(config, config.seed);
    const InferResult result = infer(model, data.eval);
    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        write_predictions((fs::path(config.out_dir) / "predictions.csv").string(), result.predictions,
                          data.eval.labels);
    }
    if (result.accuracy.has_value()) std::cout << "accuracy=" << *result.accuracy << "\n";
    std::cout << "examples=" << result.predictions.size() << "\n";
    return 0;
}

int cmd_bag(const CommonArgs& args, const std::vector<std::string>& checkpoints) {
    if (checkpoints.size() != 2) {
        std::cerr << "bag needs exactly two --checkpoint paths (with-reg and without-reg)\n";
        return kExitConfigError;
    }
    ExperimentConfig config = load_config(args);
    BaggedModel bag;
    bag.model_reg = load_encoder(checkpoints[0]);
    bag.model_noreg = load_encoder(checkpoints[1]);
    const ExperimentData data = load_experiment_data(config, config.seed);
    const InferResult result = bagged_infer(bag, data.eval);
    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        write_predictions((fs::path(config.out_dir) / "predictions.csv").string(), result.predictions,
                          data.eval.labels);
    }
    if (result.accuracy.has_value()) std::cout << "accuracy=" << *result.accuracy << "\n";
    std::cout << "examples=" << result.predictions.size() << "\n";
    return 0;
}

std::size_t worker_cap(std::size_t requested) {
    std::size_t cap = requested == 0 ? 1 : requested;
    if (const char* env = std::getenv("ADDA_FORGE_THREADS"); env != nullptr) {
        const auto parsed = std::strtoull(env, nullptr, 10);
        if (parsed > 0) cap = std::min<std::size_t>(cap, parsed);
    }
    return cap;
}

struct AblationCell {
    DiscLossKind disc;
    EncLossKind enc;
    bool reg;
    bool valid;
};

struct CellStats {
    double mean = 0.0;
    double stddev = 0.0;
};

CellStats run_cell(const ExperimentConfig& base, const AblationCell& cell,
                   const std::vector<std::uint64_t>& seeds) {
    std::vector<double> accs;
    for (std::uint64_t seed : seeds) {
        ExperimentConfig config = base;
        config.adapt.disc_loss = cell.disc;
        config.adapt.enc_loss = cell.enc;
        config.adapt.target_reg = cell.reg;
        config.seed = seed;
        config.out_dir.clear();  // ablation cells report accuracy only
        accs.push_back(run_experiment(config).final_accuracy);
    }
    CellStats stats;
    for (double a : accs) stats.mean += a;
    stats.mean /= static_cast<double>(accs.size());
    for (double a : accs) stats.stddev += (a - stats.mean) * (a - stats.mean);
    stats.stddev = std::sqrt(stats.stddev / static_cast<double>(accs.size()));
    return stats;
}

int cmd_ablate(const CommonArgs& args, std::size_t workers) {
    ExperimentConfig config = load_config(args);
    if (config.ablate_disc.empty() || config.ablate_enc.empty()) {
        std::cerr << "ablate needs [ablation] disc_losses and enc_losses in the config\n";
        return kExitConfigError;
    }
    fs::create_directories(config.out_dir);

    std::vector<AblationCell> cells;
    for (DiscLossKind disc : config.ablate_disc) {
        for (EncLossKind enc : config.ablate_enc) {
            for (bool reg : config.ablate_reg) {
                cells.push_back({disc, enc, reg, valid_pairing(disc, enc)});
            }
        }
    }

    std::string seeds_column;
    for (std::size_t i = 0; i < config.ablate_seeds.size(); ++i) {
        if (i) seeds_column += ";";
        seeds_column += std::to_string(config.ablate_seeds[i]);
    }

    std::vector<std::optional<CellStats>> results(cells.size());
    const std::size_t n_workers = worker_cap(workers);

    if (n_workers <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (!cells[i].valid) continue;
            results[i] = run_cell(config, cells[i], config.ablate_seeds);
        }
    } else {
        // one forked process per cell, bounded by the worker cap; each cell
        // is deterministic in isolation
        std::vector<pid_t> running;
        const auto part_path = [&](std::size_t i) {
            return (fs::path(config.out_dir) / (".cell_" + std::to_string(i) + ".part")).string();
        };
        const auto reap_one = [&]() {
            int status = 0;
            const pid_t pid = waitpid(-1, &status, 0);
            running.erase(std::remove(running.begin(), running.end(), pid), running.end());
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
                throw std::runtime_error("ablation worker failed");
            }
        };
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (!cells[i].valid) continue;
            while (running.size() >= n_workers) reap_one();
            const pid_t pid = fork();
            if (pid < 0) throw std::runtime_error("fork failed");
            if (pid == 0) {
                const CellStats stats = run_cell(config, cells[i], config.ablate_seeds);
                std::ofstream part(part_path(i));
                part.precision(17);
                part << stats.mean << " " << stats.stddev << "\n";
                _exit(part ? 0 : 1);
            }
            running.push_back(pid);
        }
        while (!running.empty()) reap_one();
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (!cells[i].valid) continue;
            std::ifstream part(part_path(i));
            CellStats stats;
            if (!(part >> stats.mean >> stats.stddev)) {
                throw std::runtime_error("missing ablation result for cell " + std::to_string(i));
            }
            results[i] = stats;
            fs::remove(part_path(i));
        }
    }

    const std::string csv_path = (fs::path(config.out_dir) / "ablation.csv").string();
    std::ofstream csv(csv_path);
    csv << "disc_variant,enc_variant,target_reg,seeds,mean_acc,std_acc\n";
    csv.precision(10);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const AblationCell& cell = cells[i];
        csv << to_string(cell.disc) << "," << to_string(cell.enc) << ","
            << (cell.reg ? "true" : "false") << "," << seeds_column << ",";
        if (results[i].has_value()) {
            csv << results[i]->mean << "," << results[i]->stddev;
        } else {
            std::cerr << "warning: skipping invalid pairing " << to_string(cell.disc) << " x "
                      << to_string(cell.enc) << "\n";
            csv << ",";
        }
        csv << "\n";
    }
    std::cout << "ablation_csv=" << csv_path << "\n";
    return 0;
}

int cmd_sweep_z(const CommonArgs& args, std::vector<double> z_values) {
    ExperimentConfig config = load_config(args);
    if (z_values.empty()) z_values = config.sweep_z;
    if (z_values.empty()) {
        std::cerr << "sweep-z needs --z values or [sweep] z_values in the config\n";
        return kExitConfigError;
    }
    for (double z : z_values) {
        if (!(z > 0.0) || z > 1.0) {
            std::cerr << "z values must lie in (0, 1], got " << z << "\n";
            return kExitConfigError;
        }
    }
    fs::create_directories(config.out_dir);
    const std::string csv_path = (fs::path(config.out_dir) / "sweep_z.csv").string();
    std::ofstream csv(csv_path);
    csv << "z,val_accuracy\n";
    csv.precision(10);
    for (double z : z_values) {
        ExperimentConfig sweep_config = config;
        sweep_config.adapt.keep_prob = z;
        sweep_config.adapt.target_reg = false;  // the sweep explores corruption alone
        sweep_config.out_dir.clear();
        const ExperimentSummary summary = run_experiment(sweep_config);
        csv << z << "," << summary.final_val_accuracy.value_or(summary.final_accuracy) << "\n";
        csv.flush();
    }
    std::cout << "sweep_csv=" << csv_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial discriminative domain adaptation workbench"};
    app.require_subcommand(1);

    CommonArgs common;
    std::optional<std::string> run_checkpoint;
    std::string infer_checkpoint;
    std::vector<std::string> bag_checkpoints;
    std::size_t workers = 1;
    std::vector<double> z_values;

    const auto add_common = [&](CLI::App* sub, bool config_required = true) {
        auto* opt = sub->add_option("--config", common.config_path, "experiment config file");
        if (config_required) opt->required();
        sub->add_option("--seed", [&common](const CLI::results_t& values) {
            common.seed = std::stoull(values.front());
            return true;
        }, "override [run] seed");
        sub->add_option("--out-dir", [&common](const CLI::results_t& values) {
            common.out_dir = values.front();
            return true;
        }, "override [run] out_dir");
    };

    auto* run = app.add_subcommand("run", "pretrain (or load a checkpoint), adapt, infer");
    add_common(run);
    run->add_option("--checkpoint", [&run_checkpoint](const CLI::results_t& values) {
        run_checkpoint = values.front();
        return true;
    }, "source encoder checkpoint to load instead of pretraining");

    auto* pretrain = app.add_subcommand("pretrain", "supervised source training only");
    add_common(pretrain);

    auto* infer_cmd = app.add_subcommand("infer", "inference from a checkpoint on the eval split");
    add_common(infer_cmd);
    infer_cmd->add_option("--checkpoint", infer_checkpoint, "encoder checkpoint")->required();

    auto* bag = app.add_subcommand("bag", "confidence-weighted bagged inference from two checkpoints");
    add_common(bag);
    bag->add_option("--checkpoint", bag_checkpoints, "with-reg then without-reg checkpoints")
        ->expected(1, 2);

    auto* ablate = app.add_subcommand("ablate", "run the discriminator x encoder loss matrix");
    add_common(ablate);
    ablate->add_option("--workers", workers, "parallel worker processes (capped by ADDA_FORGE_THREADS)");

    auto* sweep = app.add_subcommand("sweep-z", "dropout keep-probability sweep");
    add_common(sweep);
    sweep->add_option("--z", z_values, "keep probabilities to sweep")->delimiter(',');

    auto* verify = app.add_subcommand("verify", "run the invariant battery");
    verify->add_option("--config", common.config_path, "unused; accepted for uniformity");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(common, run_checkpoint);
        if (pretrain->parsed()) return cmd_pretrain(common);
        if (infer_cmd->parsed()) return cmd_infer(common, infer_checkpoint);
        if (bag->parsed()) return cmd_bag(common, bag_checkpoints);
        if (ablate->parsed()) return cmd_ablate(common, workers);
        if (sweep->parsed()) return cmd_sweep_z(common, z_values);
        if (verify->parsed()) {
            const int failures = report_checks(std::cout, run_verify_battery());
            return failures == 0 ? 0 : kExitFailure;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}
