#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "addaforge/tensor.hpp"

namespace addaforge {

enum class Domain { Source, Target };

struct LabeledSet {
    Tensor features;          // [n, d] vectors or [n, h, w] images
    std::vector<int> labels;  // class indices in [0, K)
    Domain domain = Domain::Source;

    std::size_t size() const { return labels.size(); }
};

// Two-domain generator: class means equally spaced on a circle in the first
// two feature dimensions (remaining dims zero-padded), isotropic Gaussian
// noise. target_radius > source_radius gives a contraction scenario,
// smaller an expansion one; the target means are additionally rotated by
// rotation_deg.
struct SyntheticSpec {
    std::size_t classes = 3;
    std::size_t dim = 2;
    std::size_t per_class = 300;
    double source_radius = 3.0;
    double target_radius = 6.0;
    double rotation_deg = 45.0;
    double noise_sigma = 0.4;
    std::uint64_t seed = 1;
};

std::pair<LabeledSet, LabeledSet> gen_two_domain(const SyntheticSpec& spec);

// IDX readers, bit-exact per the MNIST distribution format: big-endian magic
// 0x00000803 for u8 images [n, rows, cols] and 0x00000801 for u8 labels [n].
// Pixels scale to [0, 1]. Wrong magic, truncation, and an image/label count
// mismatch raise distinct errors.
LabeledSet load_idx(const std::string& images_path, const std::string& labels_path,
                    Domain domain = Domain::Source);

// Writer for the same format (tests and data preparation); pixel doubles are
// quantized back to bytes via round(v * 255).
void write_idx(const std::string& images_path, const std::string& labels_path, const LabeledSet& set);

// Corner-aligned bilinear resize of an [n, h, w] image batch.
Tensor resize_bilinear(const Tensor& images, std::size_t out_h, std::size_t out_w);

// Uniform sample of n items without replacement, seed-deterministic.
LabeledSet subsample(const LabeledSet& set, std::size_t n, std::uint64_t seed);

// One row per example: label, then the flattened feature values.
void export_csv(const LabeledSet& set, const std::string& path);

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

}  // namespace addaforge
