#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rainlab/checkpoint.hpp"
#include "rainlab/guided_filter.hpp"
#include "rainlab/model.hpp"
#include "rainlab/synth.hpp"

namespace rainlab {

struct TrainConfig {
  double lr_gan = 1e-3;   // adversarial branch
  double lr_cnn = 1e-4;   // pixel branch; must stay below lr_gan
  int batch = 4;
  int cycles = 5;         // adversarial cycles per round
  int rounds = 1;
  double lambda = 100.0;  // weight of the adversarial term inside the perceptual loss
  FilterParams filter;
  uint64_t seed = 0;

  void validate() const;  // throws ParamError
};

struct TrainItem {
  Image clean, rainy, base, detail;
  bool heavy = false;
  std::string id;
};

struct TrainSet {
  std::vector<TrainItem> items;
  std::vector<int> heavy_indices;

  static TrainSet load(const DatasetManifest& manifest, const std::string& manifest_dir,
                       const FilterParams& filter);
  static TrainSet from_pairs(const std::vector<Image>& clean, const std::vector<Image>& rainy,
                             const std::vector<bool>& heavy, const FilterParams& filter);
};

struct Batch {
  Tensor truth, base, detail;
  std::vector<int> indices;
  std::vector<bool> heavy;
};

// one log row per parameter update
struct LossRecord {
  int64_t round = 0;
  std::string step;  // "disc", "gen" or "cnn"
  std::optional<double> d_loss, g_content, g_adv, mse;
};

std::string log_to_jsonl(const std::vector<LossRecord>& log);

class Trainer {
 public:
  static Trainer init(const TrainConfig& cfg);
  static Trainer resume(const TrainConfig& cfg, const Checkpoint& ckpt);

  Batch sample_batch(const TrainSet& data, bool heavy_only);

  // One adversarial cycle on a heavy batch: discriminator update, then
  // generator update against the refreshed discriminator.
  struct CycleLosses {
    double d_loss, g_content, g_adv;
  };
  CycleLosses train_gan_cycle(const Batch& batch_heavy);

  // One pixel-loss update of the shared generator parameters.
  double train_cnn_step(const Batch& batch_all);

  // Remaining rounds of the full alternating schedule; appends to the log.
  std::vector<LossRecord> train(const TrainSet& data);

  Checkpoint to_checkpoint() const;
  Image derain(const Image& rainy) const;

  const TrainConfig& config() const { return cfg_; }
  Generator& generator() { return gen_; }
  Discriminator& discriminator() { return disc_; }
  FeatureNet& feature_net() { return feat_; }
  AdamState& generator_opt() { return gen_opt_; }
  AdamState& discriminator_opt() { return disc_opt_; }
  int64_t round() const { return round_; }
  uint64_t rng_state() const { return batch_rng_.state(); }

 private:
  Trainer(const TrainConfig& cfg, Generator gen, Discriminator disc, FeatureNet feat,
          AdamState gen_opt, AdamState disc_opt, uint64_t rng_state, int64_t round);

  TrainConfig cfg_;
  Generator gen_;
  Discriminator disc_;
  FeatureNet feat_;
  AdamState gen_opt_, disc_opt_;
  Rng batch_rng_;
  int64_t round_ = 0;
};

// Inference: decompose with the checkpoint's filter settings, restore the
// detail layer, recombine.
Image derain_image(const Image& rainy, const Checkpoint& ckpt);

}  // namespace rainlab
