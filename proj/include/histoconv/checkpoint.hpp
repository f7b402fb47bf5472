#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "histoconv/dataset.hpp"
#include "histoconv/model.hpp"
#include "histoconv/optimizer.hpp"
#include "histoconv/tensor.hpp"

namespace histoconv {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Complete training state at an epoch boundary. The on-disk form is a
// versioned little-endian binary (magic "HCV1") with length-prefixed
// sections: JSON metadata, named f32 parameter tensors, optimizer states,
// and an rng-state blob. Serialization is canonical, so save -> load -> save
// reproduces the file byte for byte.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  ModelSpec spec;
  std::vector<std::string> param_names;
  std::vector<TensorF> params;
  std::vector<RmspropState<float>> opt_states;

  // reference to the dataset split the run was trained on
  std::uint64_t data_seed = 0;
  SplitRatios ratios;
  std::vector<std::string> classes;

  std::int64_t epochs_completed = 0;
  std::uint64_t train_seed = 0;
  std::string rng_dump;  // dropout stream state for the next epoch
};

// Writes to <path>.tmp and renames into place; a failed write leaves no
// partial file behind.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const Model<float>& model,
                           const std::vector<RmspropState<float>>& opt_states,
                           const DatasetManifest& manifest, std::int64_t epochs_completed,
                           std::uint64_t train_seed);

// Rebuilds a model from a loaded checkpoint (shapes revalidated).
Model<float> model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace histoconv
