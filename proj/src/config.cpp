#include "addaforge/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace addaforge {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct Entry {
    std::string section;
    std::string key;
    std::string value;
    std::size_t line = 0;
};

[[noreturn]] void fail(const Entry& e, const std::string& what) {
    throw ConfigError("config line " + std::to_string(e.line) + ": " + what + " (key '" + e.key +
                      "' in section [" + e.section + "])");
}

double parse_double(const Entry& e) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        fail(e, "expected a number, got '" + e.value + "'");
    }
}

std::uint64_t parse_u64(const Entry& e) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        fail(e, "expected a nonnegative integer, got '" + e.value + "'");
    }
}

bool parse_bool(const Entry& e) {
    if (e.value == "true" || e.value == "1" || e.value == "on") return true;
    if (e.value == "false" || e.value == "0" || e.value == "off") return false;
    fail(e, "expected true or false, got '" + e.value + "'");
}

std::vector<std::size_t> parse_size_list(const Entry& e) {
    std::vector<std::size_t> out;
    for (const std::string& item : split_list(e.value)) {
        Entry sub = e;
        sub.value = item;
        out.push_back(static_cast<std::size_t>(parse_u64(sub)));
    }
    if (out.empty()) fail(e, "expected a comma-separated list");
    return out;
}

std::vector<double> parse_double_list(const Entry& e) {
    std::vector<double> out;
    for (const std::string& item : split_list(e.value)) {
        Entry sub = e;
        sub.value = item;
        out.push_back(parse_double(sub));
    }
    if (out.empty()) fail(e, "expected a comma-separated list");
    return out;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);

    ExperimentConfig config;
    bool arch_hidden_set = false;

    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(line_no) + ": malformed section header '" +
                                  line + "'");
            }
            section = trim(line.substr(1, line.size() - 2));
            static const std::set<std::string> known = {"dataset", "arch",     "pretrain", "adapt",
                                                        "run",     "ablation", "sweep"};
            if (known.find(section) == known.end()) {
                throw ConfigError("config line " + std::to_string(line_no) + ": unknown section [" + section +
                                  "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value, got '" +
                              line + "'");
        }
        Entry e;
        e.section = section;
        e.key = trim(line.substr(0, eq));
        e.value = trim(line.substr(eq + 1));
        e.line = line_no;
        if (e.section.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": key '" + e.key +
                              "' appears before any [section]");
        }

        if (e.section == "dataset") {
            if (e.key == "kind") {
                if (e.value == "synthetic") config.dataset.kind = DatasetConfig::Kind::Synthetic;
                else if (e.value == "idx") config.dataset.kind = DatasetConfig::Kind::Idx;
                else fail(e, "expected synthetic or idx");
            } else if (e.key == "classes") config.dataset.synth.classes = static_cast<std::size_t>(parse_u64(e));
            else if (e.key == "dim") config.dataset.synth.dim = static_cast<std::size_t>(parse_u64(e));
            else if (e.key == "per_class") config.dataset.synth.per_class = static_cast<std::size_t>(parse_u64(e));
            else if (e.key == "source_radius") config.dataset.synth.source_radius = parse_double(e);
            else if (e.key == "target_radius") config.dataset.synth.target_radius = parse_double(e);
            else if (e.key == "rotation_deg") config.dataset.synth.rotation_deg = parse_double(e);
            else if (e.key == "noise_sigma") config.dataset.synth.noise_sigma = parse_double(e);
            else if (e.key == "eval_per_class") config.dataset.eval_per_class = static_cast<std::size_t>(parse_u64(e));
            else if (e.key == "source_images") config.dataset.source_images = e.value;
            else if (e.key == "source_labels") config.dataset.source_labels = e.value;
            else if (e.key == "target_images") config.dataset.target_images = e.value;
            else if (e.key == "target_labels") config.dataset.target_labels = e.value;
            else if (e.key == "eval_images") config.dataset.eval_images = e.value;
            else if (e.key == "eval_labels") config.dataset.eval_labels = e.value;
            else if (e.key == "source_subsample") config.dataset.source_subsample = static_cast<std::size_t>(parse_u64(e));
            else if (e.key == "target_subsample") config.dataset.target_subsample = static_cast<std::size_t>(parse_u64(e));
            else if (e.key == "resize") config.dataset.resize = static_cast<std::size_t>(parse_u64(e));
            else fail(e, "unknown key");
        } else if (e.section == "arch") {
            if (e.key == "encoder") config.arch.preset = arch_preset_from_string(e.value);
            else if (e.key == "hidden") { config.arch.hidden = parse_size_list(e); arch_hidden_set = true; }
            else if (e.key == "disc_hidden") config.adapt.disc_hidden = parse_size_list(e);
            else fail(e, "unknown key");
        } else if (e.section == "pretrain") {
            if (e.key == "lr") config.pretrain.lr = parse_double(e);
            else if (e.key == "beta1") config.pretrain.beta1 = parse_double(e);
            else if (e.key == "beta2") config.pretrain.beta2 = parse_double(e);
            else if (e.key == "iters") config.pretrain.iters = static_cast<std::size_t>(parse_u64(e));
            else if (e.key == "batch") config.pretrain.batch = static_cast<std::size_t>(parse_u64(e));
            else fail(e, "unknown key");
        } else if (e.section == "adapt") {
            if (e.key == "lr") config.adapt.lr = parse_double(e);
            else if (e.key == "beta1") config.adapt.beta1 = parse_double(e);
            else if (e.key == "beta2") config.adapt.beta2 = parse_double(e);
            else if (e.key == "iters") config.adapt.iters = static_cast<std::size_t>(parse_u64(e));
            else if (e.key == "batch") config.adapt.batch_per_domain = static_cast<std::size_t>(parse_u64(e));
            else if (e.key == "z") config.adapt.keep_prob = parse_double(e);
            else if (e.key == "lambda") config.adapt.l1_lambda = parse_double(e);
            else if (e.key == "disc_loss") config.adapt.disc_loss = disc_loss_from_string(e.value);
            else if (e.key == "enc_loss") config.adapt.enc_loss = enc_loss_from_string(e.value);
            else if (e.key == "target_reg") config.adapt.target_reg = parse_bool(e);
            else if (e.key == "kernel_family") config.adapt.kernel.family = kernel_family_from_string(e.value);
            else if (e.key == "kernel_sigmas") config.adapt.kernel.sigmas = parse_double_list(e);
            else if (e.key == "kernel_epsilon") config.adapt.kernel.epsilon = parse_double(e);
            else if (e.key == "val_fraction") config.adapt.val_fraction = parse_double(e);
            else if (e.key == "val_every") config.adapt.val_every = static_cast<std::size_t>(parse_u64(e));
            else if (e.key == "disc_updates") config.adapt.disc_updates = static_cast<std::size_t>(parse_u64(e));
            else if (e.key == "enc_updates") config.adapt.enc_updates = static_cast<std::size_t>(parse_u64(e));
            else if (e.key == "dropout_scaled") config.adapt.dropout_scaled = parse_bool(e);
            else fail(e, "unknown key");
        } else if (e.section == "run") {
            if (e.key == "seed") config.seed = parse_u64(e);
            else if (e.key == "out_dir") config.out_dir = e.value;
            else if (e.key == "export_data") config.export_data = parse_bool(e);
            else if (e.key == "report_discriminator_path") config.report_discriminator_path = parse_bool(e);
            else fail(e, "unknown key");
        } else if (e.section == "ablation") {
            if (e.key == "disc_losses") {
                config.ablate_disc.clear();
                for (const std::string& item : split_list(e.value)) {
                    config.ablate_disc.push_back(disc_loss_from_string(item));
                }
            } else if (e.key == "enc_losses") {
                config.ablate_enc.clear();
                for (const std::string& item : split_list(e.value)) {
                    config.ablate_enc.push_back(enc_loss_from_string(item));
                }
            } else if (e.key == "target_reg") {
                config.ablate_reg.clear();
                for (const std::string& item : split_list(e.value)) {
                    Entry sub = e;
                    sub.value = item;
                    config.ablate_reg.push_back(parse_bool(sub));
                }
            } else if (e.key == "seeds") {
                config.ablate_seeds.clear();
                for (const std::string& item : split_list(e.value)) {
                    Entry sub = e;
                    sub.value = item;
                    config.ablate_seeds.push_back(parse_u64(sub));
                }
            } else fail(e, "unknown key");
        } else if (e.section == "sweep") {
            if (e.key == "z_values") config.sweep_z = parse_double_list(e);
            else fail(e, "unknown key");
        }
    }

    // mlp default hidden sizes apply only when the preset needs them
    if (config.arch.preset == ArchPreset::DigitsSmall && arch_hidden_set) {
        throw ConfigError("config: [arch] hidden applies to the mlp-synthetic preset only");
    }
    if (config.dataset.kind == DatasetConfig::Kind::Idx) {
        const std::pair<const char*, const std::string*> required[] = {
            {"source_images", &config.dataset.source_images}, {"source_labels", &config.dataset.source_labels},
            {"target_images", &config.dataset.target_images}, {"target_labels", &config.dataset.target_labels},
            {"eval_images", &config.dataset.eval_images},     {"eval_labels", &config.dataset.eval_labels},
        };
        for (const auto& [key, value] : required) {
            if (value->empty()) {
                throw ConfigError("config: dataset kind idx requires key '" + std::string(key) +
                                  "' in section [dataset]");
            }
        }
    }
    config.arch.input_dim = config.dataset.synth.dim;
    config.arch.image_size = config.dataset.resize;
    return config;
}

ExperimentData load_experiment_data(const ExperimentConfig& config, std::uint64_t seed) {
    ExperimentData data;
    if (config.dataset.kind == DatasetConfig::Kind::Synthetic) {
        SyntheticSpec spec = config.dataset.synth;
        spec.seed = seed;
        auto [source, target] = gen_two_domain(spec);
        SyntheticSpec eval_spec = spec;
        eval_spec.seed = mix_seed(seed, 0x6576616c);
        eval_spec.per_class = config.dataset.eval_per_class;
        auto [eval_source, eval_target] = gen_two_domain(eval_spec);
        (void)eval_source;
        data.source = std::move(source);
        data.eval = std::move(eval_target);
        data.num_classes = spec.classes;
        SplitResult split = validation_split(target, config.adapt.val_fraction, seed);
        data.target_adapt = std::move(split.adapt_split);
        data.target_val = std::move(split.val_split);
    } else {
        LabeledSet source = load_idx(config.dataset.source_images, config.dataset.source_labels, Domain::Source);
        LabeledSet target = load_idx(config.dataset.target_images, config.dataset.target_labels, Domain::Target);
        LabeledSet eval = load_idx(config.dataset.eval_images, config.dataset.eval_labels, Domain::Target);
        const std::size_t hw = config.dataset.resize;
        source.features = resize_bilinear(source.features, hw, hw);
        target.features = resize_bilinear(target.features, hw, hw);
        eval.features = resize_bilinear(eval.features, hw, hw);
        if (config.dataset.source_subsample > 0) {
            source = subsample(source, config.dataset.source_subsample, mix_seed(seed, 0x737331));
        }
        if (config.dataset.target_subsample > 0) {
            target = subsample(target, config.dataset.target_subsample, mix_seed(seed, 0x737332));
        }
        int max_label = 0;
        for (int y : source.labels) max_label = std::max(max_label, y);
        data.num_classes = static_cast<std::size_t>(max_label) + 1;
        data.source = std::move(source);
        data.eval = std::move(eval);
        SplitResult split = validation_split(target, config.adapt.val_fraction, seed);
        data.target_adapt = std::move(split.adapt_split);
        data.target_val = std::move(split.val_split);
    }
    return data;
}

}  // namespace addaforge
