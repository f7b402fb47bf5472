#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "histoconv/augment.hpp"
#include "histoconv/dataset.hpp"
#include "histoconv/tensor.hpp"

namespace histoconv {

struct Batch {
  TensorF images;                       // [n, h, w, 3], values in [0,1]
  TensorF labels;                       // [n, classes], one-hot rows
  std::vector<std::int64_t> entry_ids;  // manifest entry indices, batch order
};

// Iterates one split of a manifest in epoch-sized passes: decode, resize to
// the target extent, optionally augment (training data only), one-hot encode.
//
// Determinism: the visit order is a shuffle seeded by (seed, epoch) and each
// item's augmentation stream is derived from (seed, epoch, entry index), so
// the emitted batches are identical for any worker count. Items within a
// batch are prepared in parallel.
class BatchStream {
 public:
  BatchStream(const DatasetManifest& manifest, Split split, std::int64_t batch_size,
              std::uint64_t seed, AugmentConfig augment_cfg, std::int64_t target_h = 150,
              std::int64_t target_w = 150);

  // Re-deals the deterministic order for the given epoch and rewinds.
  void start_epoch(std::int64_t epoch);

  // Next batch of the current epoch, or nullopt when the epoch is exhausted.
  // The final batch may be smaller than batch_size.
  std::optional<Batch> next();

  std::int64_t num_items() const { return std::int64_t(order_.size()); }
  std::int64_t num_batches() const;

 private:
  const DatasetManifest* manifest_;
  Split split_;
  std::int64_t batch_size_;
  std::uint64_t seed_;
  AugmentConfig augment_cfg_;
  bool augment_active_;
  std::int64_t target_h_, target_w_;
  std::int64_t epoch_ = 0;
  std::int64_t cursor_ = 0;
  std::vector<std::int64_t> order_;
};

// Decode + resize + optional augmentation for a single manifest entry; the
// augmentation stream is derived from (seed, epoch, entry_id).
TensorF prepare_image(const DatasetManifest& manifest, std::int64_t entry_id,
                      std::int64_t target_h, std::int64_t target_w, bool augment_active,
                      const AugmentConfig& cfg, std::uint64_t seed, std::int64_t epoch);

}  // namespace histoconv
