#include "addaforge/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace addaforge {

namespace {

enum class LayerTag : std::uint8_t {
    Affine = 0,
    Relu = 1,
    Conv2d = 2,
    MaxPool = 3,
    Dropout = 4,
    Softmax = 5,
};

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
    static_assert(sizeof(double) == 8);
    char b[8];
    std::memcpy(b, &v, 8);
    out.write(b, 8);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw std::runtime_error("checkpoint: truncated file " + path);
    }
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& in, const std::string& path) {
    char b[8];
    if (!in.read(b, 8)) throw std::runtime_error("checkpoint: truncated file " + path);
    double v;
    std::memcpy(&v, b, 8);
    return v;
}

void put_tensor(std::ostream& out, const Tensor& t) {
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.values) put_f64(out, v);
}

Tensor get_tensor(std::istream& in, const std::string& path) {
    const std::uint32_t rank = get_u32(in, path);
    if (rank > 8) throw std::runtime_error("checkpoint: corrupt tensor rank in " + path);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = get_u32(in, path);
    Tensor t(shape);
    for (double& v : t.values) v = get_f64(in, path);
    return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const LayerStack& stack, const CheckpointMeta& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
    out.write("ADDF", 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(stack.layers.size()));
    for (const Layer& layer : stack.layers) {
        if (const auto* a = std::get_if<AffineLayer>(&layer)) {
            out.put(static_cast<char>(LayerTag::Affine));
            put_u32(out, static_cast<std::uint32_t>(a->in));
            put_u32(out, static_cast<std::uint32_t>(a->out));
            put_tensor(out, a->weight);
            put_tensor(out, a->bias);
        } else if (std::holds_alternative<ReluLayer>(layer)) {
            out.put(static_cast<char>(LayerTag::Relu));
        } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
            out.put(static_cast<char>(LayerTag::Conv2d));
            put_u32(out, static_cast<std::uint32_t>(c->kernel));
            put_u32(out, static_cast<std::uint32_t>(c->in_channels));
            put_u32(out, static_cast<std::uint32_t>(c->out_channels));
            put_u32(out, static_cast<std::uint32_t>(c->stride));
            out.put(static_cast<char>(c->padding));
            put_tensor(out, c->weight);
            put_tensor(out, c->bias);
        } else if (const auto* p = std::get_if<MaxPoolLayer>(&layer)) {
            out.put(static_cast<char>(LayerTag::MaxPool));
            put_u32(out, static_cast<std::uint32_t>(p->window));
            put_u32(out, static_cast<std::uint32_t>(p->stride));
        } else if (const auto* d = std::get_if<DropoutLayer>(&layer)) {
            out.put(static_cast<char>(LayerTag::Dropout));
            put_f64(out, d->keep_prob);
        } else {
            out.put(static_cast<char>(LayerTag::Softmax));
        }
    }
    if (!out) throw std::runtime_error("checkpoint: write failure on " + path);

    std::ofstream meta_out(path + ".meta");
    if (!meta_out) throw std::runtime_error("checkpoint: cannot write " + path + ".meta");
    for (const auto& [key, value] : meta) meta_out << key << "=" << value << "\n";
}

std::pair<LayerStack, CheckpointMeta> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4];
    if (!in.read(magic, 4)) throw std::runtime_error("checkpoint: truncated file " + path);
    if (std::memcmp(magic, "ADDF", 4) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path + " (not an ADDF checkpoint)");
    }
    const std::uint32_t version = get_u32(in, path);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version) +
                                 " in " + path + " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const std::uint32_t count = get_u32(in, path);
    if (count > 4096) throw std::runtime_error("checkpoint: corrupt layer count in " + path);
    LayerStack stack;
    for (std::uint32_t i = 0; i < count; ++i) {
        int tag_byte = in.get();
        if (tag_byte == std::char_traits<char>::eof()) {
            throw std::runtime_error("checkpoint: truncated file " + path);
        }
        switch (static_cast<LayerTag>(tag_byte)) {
            case LayerTag::Affine: {
                AffineLayer a;
                a.in = get_u32(in, path);
                a.out = get_u32(in, path);
                a.weight = get_tensor(in, path);
                a.bias = get_tensor(in, path);
                if (a.weight.shape != std::vector<std::size_t>{a.out, a.in} ||
                    a.bias.shape != std::vector<std::size_t>{a.out}) {
                    throw std::runtime_error("checkpoint: corrupt affine layer in " + path);
                }
                stack.layers.emplace_back(std::move(a));
                break;
            }
            case LayerTag::Relu:
                stack.layers.emplace_back(ReluLayer{});
                break;
            case LayerTag::Conv2d: {
                Conv2dLayer c;
                c.kernel = get_u32(in, path);
                c.in_channels = get_u32(in, path);
                c.out_channels = get_u32(in, path);
                c.stride = get_u32(in, path);
                const int pad = in.get();
                if (pad != 0 && pad != 1) throw std::runtime_error("checkpoint: corrupt conv padding in " + path);
                c.padding = static_cast<ConvPadding>(pad);
                c.weight = get_tensor(in, path);
                c.bias = get_tensor(in, path);
                if (c.weight.shape != std::vector<std::size_t>{c.out_channels, c.in_channels, c.kernel, c.kernel}) {
                    throw std::runtime_error("checkpoint: corrupt conv layer in " + path);
                }
                stack.layers.emplace_back(std::move(c));
                break;
            }
            case LayerTag::MaxPool: {
                MaxPoolLayer p;
                p.window = get_u32(in, path);
                p.stride = get_u32(in, path);
                stack.layers.emplace_back(p);
                break;
            }
            case LayerTag::Dropout: {
                DropoutLayer d;
                d.keep_prob = get_f64(in, path);
                stack.layers.emplace_back(d);
                break;
            }
            case LayerTag::Softmax:
                stack.layers.emplace_back(SoftmaxLayer{});
                break;
            default:
                throw std::runtime_error("checkpoint: unknown layer tag in " + path);
        }
    }

    CheckpointMeta meta;
    std::ifstream meta_in(path + ".meta");
    if (meta_in) {
        std::string line;
        while (std::getline(meta_in, line)) {
            const auto eq = line.find('=');
            if (eq != std::string::npos) meta[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }
    return {std::move(stack), std::move(meta)};
}

void save_encoder(const std::string& path, const EncoderModel& model, CheckpointMeta extra) {
    extra["arch"] = to_string(model.arch.preset);
    extra["classes"] = std::to_string(model.num_classes);
    extra["input_dim"] = std::to_string(model.arch.input_dim);
    extra["image_size"] = std::to_string(model.arch.image_size);
    save_checkpoint(path, model.stack, extra);
}

EncoderModel load_encoder(const std::string& path) {
    auto [stack, meta] = load_checkpoint(path);
    EncoderModel model;
    model.stack = std::move(stack);
    const auto arch_it = meta.find("arch");
    const auto classes_it = meta.find("classes");
    if (arch_it == meta.end() || classes_it == meta.end()) {
        throw std::runtime_error("checkpoint: " + path + ".meta is missing arch/classes entries");
    }
    model.arch.preset = arch_preset_from_string(arch_it->second);
    model.num_classes = static_cast<std::size_t>(std::stoul(classes_it->second));
    if (const auto it = meta.find("input_dim"); it != meta.end()) {
        model.arch.input_dim = static_cast<std::size_t>(std::stoul(it->second));
    }
    if (const auto it = meta.find("image_size"); it != meta.end()) {
        model.arch.image_size = static_cast<std::size_t>(std::stoul(it->second));
    }
    return model;
}

}  // namespace addaforge
