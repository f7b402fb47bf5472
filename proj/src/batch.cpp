#include "histoconv/batch.hpp"

#include <algorithm>

#include "histoconv/image.hpp"
#include "histoconv/parallel.hpp"
#include "histoconv/rng.hpp"

namespace histoconv {

TensorF prepare_image(const DatasetManifest& manifest, std::int64_t entry_id,
                      std::int64_t target_h, std::int64_t target_w, bool augment_active,
                      const AugmentConfig& cfg, std::uint64_t seed, std::int64_t epoch) {
  const DatasetEntry& entry = manifest.entries[std::size_t(entry_id)];
  TensorF img = resize_bilinear(load_image(entry.path), target_h, target_w);
  if (augment_active) {
    auto rng = derive_stream(seed, RngStream::augment, std::uint64_t(epoch),
                             std::uint64_t(entry_id));
    img = augment(img, cfg, rng);
  }
  return img;
}

BatchStream::BatchStream(const DatasetManifest& manifest, Split split, std::int64_t batch_size,
                         std::uint64_t seed, AugmentConfig augment_cfg, std::int64_t target_h,
                         std::int64_t target_w)
    : manifest_(&manifest),
      split_(split),
      batch_size_(batch_size),
      seed_(seed),
      augment_cfg_(augment_cfg),
      augment_active_(split == Split::train && augment_cfg.enabled()),
      target_h_(target_h),
      target_w_(target_w) {
  if (batch_size_ < 1) throw Error("batch size must be >= 1");
  augment_cfg_.validate();
  order_ = manifest.split_indices(split);
  if (order_.empty())
    throw Error(std::string("split has no entries: ") + split_name(split));
  start_epoch(0);
}

void BatchStream::start_epoch(std::int64_t epoch) {
  epoch_ = epoch;
  cursor_ = 0;
  std::sort(order_.begin(), order_.end());
  auto rng = derive_stream(seed_, RngStream::shuffle, std::uint64_t(epoch),
                           std::uint64_t(split_));
  std::shuffle(order_.begin(), order_.end(), rng);
}

std::int64_t BatchStream::num_batches() const {
  return (num_items() + batch_size_ - 1) / batch_size_;
}

std::optional<Batch> BatchStream::next() {
  if (cursor_ >= num_items()) return std::nullopt;
  const std::int64_t n = std::min(batch_size_, num_items() - cursor_);
  const std::int64_t classes = std::int64_t(manifest_->classes.size());

  Batch b;
  b.images = TensorF::zeros({n, target_h_, target_w_, 3});
  b.labels = TensorF::zeros({n, classes});
  b.entry_ids.assign(order_.begin() + cursor_, order_.begin() + cursor_ + n);

  const std::int64_t plane = target_h_ * target_w_ * 3;
  float* images = b.images.data().data();
  parallel_for(
      n,
      [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
          TensorF img = prepare_image(*manifest_, b.entry_ids[std::size_t(i)], target_h_,
                                      target_w_, augment_active_, augment_cfg_, seed_, epoch_);
          std::copy(img.data().begin(), img.data().end(), images + i * plane);
        }
      },
      1);

  for (std::int64_t i = 0; i < n; ++i) {
    const auto& e = manifest_->entries[std::size_t(b.entry_ids[std::size_t(i)])];
    b.labels(i, e.class_index) = 1.0f;
  }

  cursor_ += n;
  return b;
}

}  // namespace histoconv
