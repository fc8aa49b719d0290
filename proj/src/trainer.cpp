#include "rainlab/trainer.hpp"

#include <filesystem>
#include <sstream>

#include "json.hpp"
#include "rainlab/errors.hpp"

namespace fs = std::filesystem;

namespace rainlab {

void TrainConfig::validate() const {
  if (!(lr_gan > 0.0) || !(lr_cnn > 0.0)) throw ParamError("train config: learning rates must be positive");
  if (lr_gan <= lr_cnn)
    throw ParamError("train config: the adversarial branch must train faster than the pixel branch (lr_gan > lr_cnn)");
  if (batch <= 0) throw ParamError("train config: batch must be positive");
  if (cycles <= 0) throw ParamError("train config: cycles must be positive");
  if (rounds < 0) throw ParamError("train config: rounds must be >= 0");
  if (lambda < 0.0) throw ParamError("train config: lambda must be >= 0");
  if (filter.radius < 0) throw ParamError("train config: filter radius must be >= 0");
  if (filter.eps <= 0.0) throw ParamError("train config: filter eps must be positive");
}

TrainSet TrainSet::load(const DatasetManifest& manifest, const std::string& manifest_dir,
                        const FilterParams& filter) {
  if (manifest.entries.empty()) throw DataError("training set: manifest has no entries");
  std::vector<Image> clean, rainy;
  std::vector<bool> heavy;
  clean.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    clean.push_back(load_ppm((fs::path(manifest_dir) / e.clean_path).string()));
    rainy.push_back(load_ppm((fs::path(manifest_dir) / e.rainy_path).string()));
    heavy.push_back(e.heavy);
  }
  TrainSet ts = from_pairs(clean, rainy, heavy, filter);
  for (size_t i = 0; i < manifest.entries.size(); ++i)
    ts.items[i].id = fs::path(manifest.entries[i].rainy_path).stem().string();
  return ts;
}

TrainSet TrainSet::from_pairs(const std::vector<Image>& clean, const std::vector<Image>& rainy,
                              const std::vector<bool>& heavy, const FilterParams& filter) {
  if (clean.size() != rainy.size() || clean.size() != heavy.size())
    throw ShapeError("training set: pair lists differ in length");
  if (clean.empty()) throw DataError("training set: no pairs");
  TrainSet ts;
  for (size_t i = 0; i < clean.size(); ++i) {
    if (!clean[i].same_shape(rainy[i])) throw ShapeError("training set: clean/rainy shapes differ");
    if (!clean[i].same_shape(clean[0])) throw ShapeError("training set: all pairs must share one shape");
    TrainItem item;
    item.clean = clean[i];
    item.rainy = rainy[i];
    Decomposition d = decompose(rainy[i], filter);
    item.base = std::move(d.base);
    item.detail = std::move(d.detail);
    item.heavy = heavy[i];
    item.id = "pair_" + std::to_string(i);
    ts.items.push_back(std::move(item));
    if (heavy[i]) ts.heavy_indices.push_back(static_cast<int>(i));
  }
  return ts;
}

Trainer::Trainer(const TrainConfig& cfg, Generator gen, Discriminator disc, FeatureNet feat,
                 AdamState gen_opt, AdamState disc_opt, uint64_t rng_state, int64_t round)
    : cfg_(cfg),
      gen_(std::move(gen)),
      disc_(std::move(disc)),
      feat_(std::move(feat)),
      gen_opt_(std::move(gen_opt)),
      disc_opt_(std::move(disc_opt)),
      batch_rng_(rng_state),
      round_(round) {}

Trainer Trainer::init(const TrainConfig& cfg) {
  Generator gen = Generator::init(cfg.seed);
  Discriminator disc = Discriminator::init(cfg.seed);
  FeatureNet feat = FeatureNet::init(cfg.seed);
  AdamState gopt = AdamState::for_params(gen.params);
  AdamState dopt = AdamState::for_params(disc.params);
  return Trainer(cfg, std::move(gen), std::move(disc), std::move(feat), std::move(gopt),
                 std::move(dopt), derive_seed(cfg.seed, "batch-stream"), 0);
}

Trainer Trainer::resume(const TrainConfig& cfg, const Checkpoint& ckpt) {
  Generator gen = Generator::from_params(ckpt.gen_params.clone());
  Discriminator disc = Discriminator::from_params(ckpt.disc_params.clone());
  FeatureNet feat = FeatureNet::from_params(ckpt.feat_params.clone());
  return Trainer(cfg, std::move(gen), std::move(disc), std::move(feat), ckpt.gen_opt,
                 ckpt.disc_opt, ckpt.rng_state, ckpt.round);
}

Batch Trainer::sample_batch(const TrainSet& data, bool heavy_only) {
  const std::vector<int>* pool_ptr = nullptr;
  std::vector<int> all;
  if (heavy_only) {
    if (data.heavy_indices.empty()) throw DataError("sample_batch: heavy partition is empty");
    pool_ptr = &data.heavy_indices;
  } else {
    all.resize(data.items.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    pool_ptr = &all;
  }
  const std::vector<int>& pool = *pool_ptr;
  Batch b;
  std::vector<const Image*> truth, base, detail;
  for (int i = 0; i < cfg_.batch; ++i) {
    int idx = pool[batch_rng_.below(pool.size())];  // with replacement
    b.indices.push_back(idx);
    b.heavy.push_back(data.items[idx].heavy);
    truth.push_back(&data.items[idx].clean);
    base.push_back(&data.items[idx].base);
    detail.push_back(&data.items[idx].detail);
  }
  b.truth = batch_from_images(truth);
  b.base = batch_from_images(base);
  b.detail = batch_from_images(detail);
  return b;
}

Trainer::CycleLosses Trainer::train_gan_cycle(const Batch& batch) {
  for (bool h : batch.heavy)
    if (!h) throw ContractError("train_gan_cycle: batch contains a non-heavy image");

  // restored batch under the current generator; the graph is kept so the
  // generator update below can reuse it
  Tensor dprime = gen_.forward(batch.detail);
  Tensor clear_graph = reconstruct_t(batch.base, dprime);
  Tensor clear_detached = Tensor::leaf(clear_graph.shape(), clear_graph.value());

  // discriminator update on (truth, restored)
  disc_.params.zero_grad();
  AdvLosses adv = adversarial_losses(disc_.forward(batch.truth), disc_.forward(clear_detached));
  backward(adv.d_loss);
  adam_step(disc_.params, disc_opt_, cfg_.lr_gan);

  // generator update against the refreshed discriminator
  gen_.params.zero_grad();
  disc_.params.zero_grad();
  Tensor content = content_loss(feat_, batch.truth, clear_graph);
  Tensor g_adv = generator_adversarial(disc_.forward(clear_graph));
  Tensor perceptual = add(content, affine_scale(g_adv, cfg_.lambda, 0.0));
  backward(perceptual);
  adam_step(gen_.params, gen_opt_, cfg_.lr_gan);
  disc_.params.zero_grad();  // gradients that leaked through the shared graph

  return {adv.d_loss.item(), content.item(), g_adv.item()};
}

double Trainer::train_cnn_step(const Batch& batch) {
  gen_.params.zero_grad();
  Tensor dprime = gen_.forward(batch.detail);
  Tensor clear = reconstruct_t(batch.base, dprime);
  Tensor loss = mse_loss(batch.truth, clear);
  backward(loss);
  adam_step(gen_.params, gen_opt_, cfg_.lr_cnn);
  return loss.item();
}

std::vector<LossRecord> Trainer::train(const TrainSet& data) {
  cfg_.validate();
  if (data.items.empty()) throw DataError("train: dataset is empty");
  if (data.heavy_indices.empty())
    throw DataError("train: no heavy images in the dataset; the adversarial branch has nothing to train on");

  std::vector<LossRecord> log;
  for (; round_ < cfg_.rounds; ++round_) {
    for (int c = 0; c < cfg_.cycles; ++c) {
      Batch hb = sample_batch(data, true);
      CycleLosses cl = train_gan_cycle(hb);
      LossRecord rd;
      rd.round = round_;
      rd.step = "disc";
      rd.d_loss = cl.d_loss;
      log.push_back(rd);
      LossRecord rg;
      rg.round = round_;
      rg.step = "gen";
      rg.g_content = cl.g_content;
      rg.g_adv = cl.g_adv;
      log.push_back(rg);
    }
    Batch ab = sample_batch(data, false);
    double m = train_cnn_step(ab);
    LossRecord rc;
    rc.round = round_;
    rc.step = "cnn";
    rc.mse = m;
    log.push_back(rc);
  }
  return log;
}

Checkpoint Trainer::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.gen_params = gen_.params.clone();
  ckpt.disc_params = disc_.params.clone();
  ckpt.feat_params = feat_.params.clone();
  ckpt.gen_opt = gen_opt_;
  ckpt.disc_opt = disc_opt_;
  ckpt.rng_state = batch_rng_.state();
  ckpt.round = round_;
  ckpt.filter = cfg_.filter;
  return ckpt;
}

Image Trainer::derain(const Image& rainy) const {
  Decomposition d = decompose(rainy, cfg_.filter);
  Tensor detail = batch_from_images({&d.detail});
  Tensor dprime = gen_.forward(detail);
  return reconstruct(d.base, image_from_batch(dprime, 0));
}

Image derain_image(const Image& rainy, const Checkpoint& ckpt) {
  Decomposition d = decompose(rainy, ckpt.filter);
  Generator gen = Generator::from_params(ckpt.gen_params.clone());
  Tensor detail = batch_from_images({&d.detail});
  Tensor dprime = gen.forward(detail);
  return reconstruct(d.base, image_from_batch(dprime, 0));
}

std::string log_to_jsonl(const std::vector<LossRecord>& log) {
  std::ostringstream out;
  for (const auto& r : log) {
    nlohmann::ordered_json j;
    j["round"] = r.round;
    j["step"] = r.step;
    j["d_loss"] = r.d_loss ? nlohmann::ordered_json(*r.d_loss) : nlohmann::ordered_json(nullptr);
    j["g_content"] = r.g_content ? nlohmann::ordered_json(*r.g_content) : nlohmann::ordered_json(nullptr);
    j["g_adv"] = r.g_adv ? nlohmann::ordered_json(*r.g_adv) : nlohmann::ordered_json(nullptr);
    j["mse"] = r.mse ? nlohmann::ordered_json(*r.mse) : nlohmann::ordered_json(nullptr);
    out << j.dump() << "\n";
  }
  return out.str();
}

}  // namespace rainlab
