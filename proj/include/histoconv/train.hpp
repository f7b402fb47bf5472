#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "histoconv/batch.hpp"
#include "histoconv/dataset.hpp"
#include "histoconv/loss.hpp"
#include "histoconv/model.hpp"
#include "histoconv/optimizer.hpp"

namespace histoconv {

struct TrainConfig {
  std::int64_t epochs = 100;
  std::int64_t batch_size = 32;
  RmspropConfig optimizer;
  double dropout_rate = 0.5;
  std::uint64_t seed = 42;
  std::int64_t pool_stride = 1;
  double init_std = 0.05;
  AugmentConfig augment;

  // checkpoint cadence; files land in checkpoint_dir as ckpt_ep<N>.hcv
  // (N = completed epochs). Empty dir disables checkpointing.
  std::int64_t checkpoint_every = 10;
  std::string checkpoint_dir;

  void validate() const;
};

struct StepResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochMetrics> epochs;
};

// One optimizer step on one batch: train-mode forward, fused-gradient
// backward, one rmsprop update per parameter. Returns the batch's loss and
// accuracy measured before the update.
StepResult train_step(Model<float>& model, std::vector<RmspropState<float>>& opt_states,
                      const TensorF& images, const TensorF& labels, const RmspropConfig& opt,
                      std::mt19937& dropout_rng);

// Eval-mode pass over one split: every entry exactly once, sample-weighted
// mean loss and overall accuracy. Deterministic (no dropout, no augmentation).
StepResult evaluate(const Model<float>& model, const DatasetManifest& manifest, Split split,
                    std::int64_t batch_size);

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Runs epochs [start_epoch, cfg.epochs): each epoch shuffles and augments the
// train split with streams derived from (cfg.seed, epoch), then evaluates the
// val split. Appends one EpochMetrics per epoch (invoking on_epoch, when
// given, after each) and checkpoints per cfg cadence plus at the end.
TrainReport fit(Model<float>& model, std::vector<RmspropState<float>>& opt_states,
                const DatasetManifest& manifest, const TrainConfig& cfg,
                std::int64_t start_epoch = 0, const EpochCallback& on_epoch = nullptr);

}  // namespace histoconv
