#include "addaforge/datasets.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "addaforge/rng.hpp"

namespace addaforge {

namespace {

constexpr double kPi = 3.141592653589793;

LabeledSet gen_domain(const SyntheticSpec& spec, double radius, double rotation_rad, Domain domain,
                      Rng& rng) {
    const std::size_t n = spec.classes * spec.per_class;
    LabeledSet set;
    set.domain = domain;
    set.features = Tensor({n, spec.dim});
    set.labels.resize(n);
    std::size_t row = 0;
    for (std::size_t c = 0; c < spec.classes; ++c) {
        const double angle = 2.0 * kPi * static_cast<double>(c) / static_cast<double>(spec.classes) +
                             rotation_rad;
        const double cx = radius * std::cos(angle);
        const double cy = radius * std::sin(angle);
        for (std::size_t i = 0; i < spec.per_class; ++i, ++row) {
            double* f = set.features.values.data() + row * spec.dim;
            f[0] = cx + spec.noise_sigma * normal01(rng);
            f[1] = cy + spec.noise_sigma * normal01(rng);
            for (std::size_t d = 2; d < spec.dim; ++d) f[d] = spec.noise_sigma * normal01(rng);
            set.labels[row] = static_cast<int>(c);
        }
    }
    return set;
}

}  // namespace

std::pair<LabeledSet, LabeledSet> gen_two_domain(const SyntheticSpec& spec) {
    if (spec.classes < 2) throw std::invalid_argument("gen_two_domain: need at least 2 classes");
    if (spec.dim < 2) throw std::invalid_argument("gen_two_domain: need at least 2 dimensions");
    if (spec.per_class == 0) throw std::invalid_argument("gen_two_domain: per_class must be positive");
    if (!(spec.source_radius > 0.0) || !(spec.target_radius > 0.0)) {
        throw std::invalid_argument("gen_two_domain: radii must be positive");
    }
    Rng rng_s = make_rng(spec.seed, 0x737263);
    Rng rng_t = make_rng(spec.seed, 0x746774);
    LabeledSet source = gen_domain(spec, spec.source_radius, 0.0, Domain::Source, rng_s);
    LabeledSet target =
        gen_domain(spec, spec.target_radius, spec.rotation_deg * kPi / 180.0, Domain::Target, rng_t);
    return {std::move(source), std::move(target)};
}

namespace {

std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
        throw std::runtime_error("idx: truncated header in " + path);
    }
    return (static_cast<std::uint32_t>(bytes[0]) << 24) | (static_cast<std::uint32_t>(bytes[1]) << 16) |
           (static_cast<std::uint32_t>(bytes[2]) << 8) | static_cast<std::uint32_t>(bytes[3]);
}

void write_be_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char bytes[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                    static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

}  // namespace

LabeledSet load_idx(const std::string& images_path, const std::string& labels_path, Domain domain) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("idx: cannot open " + images_path);
    const std::uint32_t img_magic = read_be_u32(img, images_path);
    if (img_magic != 0x00000803u) {
        throw std::runtime_error("idx: bad image magic in " + images_path + " (expected 0x00000803)");
    }
    const std::uint32_t n = read_be_u32(img, images_path);
    const std::uint32_t rows = read_be_u32(img, images_path);
    const std::uint32_t cols = read_be_u32(img, images_path);
    std::vector<unsigned char> pixels(static_cast<std::size_t>(n) * rows * cols);
    if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()))) {
        throw std::runtime_error("idx: truncated image payload in " + images_path);
    }

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("idx: cannot open " + labels_path);
    const std::uint32_t lab_magic = read_be_u32(lab, labels_path);
    if (lab_magic != 0x00000801u) {
        throw std::runtime_error("idx: bad label magic in " + labels_path + " (expected 0x00000801)");
    }
    const std::uint32_t n_labels = read_be_u32(lab, labels_path);
    if (n_labels != n) {
        throw std::runtime_error("idx: image/label count mismatch (" + std::to_string(n) + " images vs " +
                                 std::to_string(n_labels) + " labels)");
    }
    std::vector<unsigned char> raw_labels(n_labels);
    if (!lab.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(raw_labels.size()))) {
        throw std::runtime_error("idx: truncated label payload in " + labels_path);
    }

    LabeledSet set;
    set.domain = domain;
    set.features = Tensor({n, rows, cols});
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        set.features.values[i] = static_cast<double>(pixels[i]) / 255.0;
    }
    set.labels.assign(raw_labels.begin(), raw_labels.end());
    return set;
}

void write_idx(const std::string& images_path, const std::string& labels_path, const LabeledSet& set) {
    if (set.features.rank() != 3) throw std::invalid_argument("write_idx: expected [n, h, w] images");
    const std::size_t n = set.features.dim(0);
    if (set.labels.size() != n) throw std::invalid_argument("write_idx: label count mismatch");
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("idx: cannot write " + images_path);
    write_be_u32(img, 0x00000803u);
    write_be_u32(img, static_cast<std::uint32_t>(n));
    write_be_u32(img, static_cast<std::uint32_t>(set.features.dim(1)));
    write_be_u32(img, static_cast<std::uint32_t>(set.features.dim(2)));
    for (double v : set.features.values) {
        const double clamped = std::min(std::max(v, 0.0), 1.0);
        const auto byte = static_cast<unsigned char>(std::lround(clamped * 255.0));
        img.put(static_cast<char>(byte));
    }
    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("idx: cannot write " + labels_path);
    write_be_u32(lab, 0x00000801u);
    write_be_u32(lab, static_cast<std::uint32_t>(n));
    for (int y : set.labels) lab.put(static_cast<char>(static_cast<unsigned char>(y)));
}

Tensor resize_bilinear(const Tensor& images, std::size_t out_h, std::size_t out_w) {
    if (images.rank() != 3) throw std::invalid_argument("resize_bilinear: expected [n, h, w] images");
    const std::size_t n = images.dim(0), h = images.dim(1), w = images.dim(2);
    if (h < 2 || w < 2 || out_h < 2 || out_w < 2) {
        throw std::invalid_argument("resize_bilinear: degenerate image dimensions");
    }
    if (h == out_h && w == out_w) return images;
    Tensor out({n, out_h, out_w});
    const double sy = static_cast<double>(h - 1) / static_cast<double>(out_h - 1);
    const double sx = static_cast<double>(w - 1) / static_cast<double>(out_w - 1);
    for (std::size_t img = 0; img < n; ++img) {
        const double* src = images.values.data() + img * h * w;
        double* dst = out.values.data() + img * out_h * out_w;
        for (std::size_t oy = 0; oy < out_h; ++oy) {
            const double fy = sy * static_cast<double>(oy);
            const std::size_t y0 = std::min(static_cast<std::size_t>(fy), h - 2);
            const double ty = fy - static_cast<double>(y0);
            for (std::size_t ox = 0; ox < out_w; ++ox) {
                const double fx = sx * static_cast<double>(ox);
                const std::size_t x0 = std::min(static_cast<std::size_t>(fx), w - 2);
                const double tx = fx - static_cast<double>(x0);
                const double top = src[y0 * w + x0] * (1.0 - tx) + src[y0 * w + x0 + 1] * tx;
                const double bot = src[(y0 + 1) * w + x0] * (1.0 - tx) + src[(y0 + 1) * w + x0 + 1] * tx;
                dst[oy * out_w + ox] = top * (1.0 - ty) + bot * ty;
            }
        }
    }
    return out;
}

LabeledSet subsample(const LabeledSet& set, std::size_t n, std::uint64_t seed) {
    if (n > set.size()) {
        throw std::invalid_argument("subsample: requested " + std::to_string(n) + " of " +
                                    std::to_string(set.size()) + " items");
    }
    std::vector<std::size_t> indices(set.size());
    std::iota(indices.begin(), indices.end(), 0);
    Rng rng = make_rng(seed, 0x737562);
    // Partial Fisher-Yates: the first n slots end up a uniform sample.
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + uniform_index(rng, indices.size() - i);
        std::swap(indices[i], indices[j]);
    }
    indices.resize(n);
    LabeledSet out;
    out.domain = set.domain;
    out.features = take_rows(set.features, indices);
    out.labels.reserve(n);
    for (std::size_t idx : indices) out.labels.push_back(set.labels[idx]);
    return out;
}

void export_csv(const LabeledSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_csv: cannot write " + path);
    out << "label";
    const std::size_t d = set.features.cols();
    for (std::size_t j = 0; j < d; ++j) out << ",f" << j;
    out << "\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        out << set.labels[i];
        char buf[32];
        for (std::size_t j = 0; j < d; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", set.features.values[i * d + j]);
            out << "," << buf;
        }
        out << "\n";
    }
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size() || predictions.empty()) {
        throw std::invalid_argument("accuracy: prediction/label size mismatch");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

}  // namespace addaforge
