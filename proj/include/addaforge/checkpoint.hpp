#pragma once

#include <map>
#include <string>
#include <utility>

#include "addaforge/layers.hpp"
#include "addaforge/models.hpp"

namespace addaforge {

// Little-endian binary stack serialization: magic "ADDF", format version
// u32, layer count u32, then per layer a descriptor tag, the layer config,
// and raw f64 parameter values. Round-trips are bit-identical. Metadata
// (arch name, classes, seed, iteration, ...) lives in a sidecar UTF-8
// key=value file at <path>.meta.
inline constexpr std::uint32_t kCheckpointVersion = 1;

using CheckpointMeta = std::map<std::string, std::string>;

void save_checkpoint(const std::string& path, const LayerStack& stack, const CheckpointMeta& meta);
std::pair<LayerStack, CheckpointMeta> load_checkpoint(const std::string& path);

// Encoder wrappers; metadata records arch, classes, and input geometry so
// the model reconstructs exactly.
void save_encoder(const std::string& path, const EncoderModel& model, CheckpointMeta extra = {});
EncoderModel load_encoder(const std::string& path);

}  // namespace addaforge
