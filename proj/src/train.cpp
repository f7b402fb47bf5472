#include "histoconv/train.hpp"

#include <filesystem>

#include "histoconv/checkpoint.hpp"
#include "histoconv/rng.hpp"

namespace histoconv {

void TrainConfig::validate() const {
  if (epochs < 1) throw Error("epochs must be >= 1");
  if (batch_size < 1) throw Error("batch size must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw Error("dropout rate must be in [0,1)");
  if (pool_stride < 1) throw Error("pool stride must be >= 1");
  if (!(init_std > 0.0)) throw Error("init std must be > 0");
  if (checkpoint_every < 1) throw Error("checkpoint cadence must be >= 1");
  optimizer.validate();
  augment.validate();
}

StepResult train_step(Model<float>& model, std::vector<RmspropState<float>>& opt_states,
                      const TensorF& images, const TensorF& labels, const RmspropConfig& opt,
                      std::mt19937& dropout_rng) {
  if (opt_states.size() != model.params.size())
    throw Error("optimizer state count does not match parameter count");
  if (labels.rank() != 2 || labels.dim(1) != model.spec.num_classes)
    throw Error("labels must be [n," + std::to_string(model.spec.num_classes) + "], got " +
                shape_str(labels.shape()));

  auto fwd = forward(model, images, Mode::train, &dropout_rng);
  StepResult result;
  result.loss = cross_entropy(fwd.probs, labels).mean_loss;
  result.accuracy = accuracy(fwd.probs, labels);

  auto bwd = backward(model, fwd, labels);
  for (std::size_t i = 0; i < model.params.size(); ++i)
    rmsprop_step_inplace(model.params[i], bwd.d_params[i], opt_states[i], opt);
  return result;
}

StepResult evaluate(const Model<float>& model, const DatasetManifest& manifest, Split split,
                    std::int64_t batch_size) {
  BatchStream stream(manifest, split, batch_size, /*seed=*/0,
                     AugmentConfig::disabled_config(), model.spec.in_h, model.spec.in_w);
  stream.start_epoch(0);

  double loss_sum = 0.0, correct = 0.0;
  std::int64_t total = 0;
  while (auto b = stream.next()) {
    auto fwd = forward(model, b->images, Mode::eval);
    const std::int64_t n = b->images.dim(0);
    loss_sum += cross_entropy(fwd.probs, b->labels).mean_loss * double(n);
    correct += accuracy(fwd.probs, b->labels) * double(n);
    total += n;
  }
  return {loss_sum / double(total), correct / double(total)};
}

TrainReport fit(Model<float>& model, std::vector<RmspropState<float>>& opt_states,
                const DatasetManifest& manifest, const TrainConfig& cfg,
                std::int64_t start_epoch, const EpochCallback& on_epoch) {
  cfg.validate();
  if (start_epoch < 0 || start_epoch >= cfg.epochs)
    throw Error("start epoch " + std::to_string(start_epoch) + " outside [0," +
                std::to_string(cfg.epochs) + ")");

  BatchStream train_stream(manifest, Split::train, cfg.batch_size, cfg.seed, cfg.augment,
                           model.spec.in_h, model.spec.in_w);
  if (manifest.split_count(Split::val) == 0) throw Error("validation split is empty");

  TrainReport report;
  for (std::int64_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    train_stream.start_epoch(epoch);
    auto dropout_rng = derive_stream(cfg.seed, RngStream::dropout, std::uint64_t(epoch));

    double loss_sum = 0.0, correct = 0.0;
    std::int64_t total = 0;
    while (auto b = train_stream.next()) {
      const auto step = train_step(model, opt_states, b->images, b->labels, cfg.optimizer,
                                   dropout_rng);
      const std::int64_t n = b->images.dim(0);
      loss_sum += step.loss * double(n);
      correct += step.accuracy * double(n);
      total += n;
    }

    const auto val = evaluate(model, manifest, Split::val, cfg.batch_size);

    EpochMetrics m;
    m.epoch = epoch + 1;
    m.train_loss = loss_sum / double(total);
    m.train_acc = correct / double(total);
    m.val_loss = val.loss;
    m.val_acc = val.accuracy;
    report.epochs.push_back(m);
    if (on_epoch) on_epoch(m);

    const bool at_cadence = (epoch + 1) % cfg.checkpoint_every == 0;
    const bool at_end = epoch + 1 == cfg.epochs;
    if (!cfg.checkpoint_dir.empty() && (at_cadence || at_end)) {
      const auto ckpt = make_checkpoint(model, opt_states, manifest, epoch + 1, cfg.seed);
      const auto path = std::filesystem::path(cfg.checkpoint_dir) /
                        ("ckpt_ep" + std::to_string(epoch + 1) + ".hcv");
      save_checkpoint(path.string(), ckpt);
    }
  }
  return report;
}

}  // namespace histoconv
