#pragma once

#include <cstdint>

#include "rainlab/image.hpp"
#include "rainlab/nn.hpp"
#include "rainlab/tensor.hpp"

namespace rainlab {

// Detail-layer restoration network: 3->32 conv in, three residual blocks
// (two 32->32 convs with a relu between, additive skip), 32->3 conv out.
// All convs 3x3, stride 1, pad 1.  No activation outside the blocks, so a
// suitably wired parameter set can pass signed inputs through untouched.
struct Generator {
  ParamSet params;

  static Generator init(uint64_t seed);
  static Generator from_params(ParamSet p);  // validates names and shapes
  Tensor forward(const Tensor& detail) const;  // (N,3,H,W) -> (N,3,H,W)
};

// Real/restored discriminator: three 3x3 stride-2 convs (3->16->32->64) with
// leaky relu 0.2, global mean pool, affine 64->1, sigmoid.  Input >= 8x8.
struct Discriminator {
  ParamSet params;

  static Discriminator init(uint64_t seed);
  static Discriminator from_params(ParamSet p);
  Tensor forward(const Tensor& img) const;  // (N,3,H,W) -> (N,1) in (0,1)
};

// Small fixed feature extractor used by the content loss: conv 3->8 relu,
// conv 8->16 relu (3x3, stride 1, pad 1).  Weights are seeded once and never
// trained; gradients flow through it but not into it.
struct FeatureNet {
  ParamSet params;

  static FeatureNet init(uint64_t seed);
  static FeatureNet from_params(ParamSet p);
  Tensor forward(const Tensor& img) const;
  uint64_t weight_hash() const { return params.value_hash(); }
};

// mean of squared differences; the shared kernel of the content and mse losses
Tensor feature_mse(const Tensor& a, const Tensor& b);

Tensor content_loss(const FeatureNet& feat, const Tensor& truth, const Tensor& clear);

// Probabilities are clamped to [1e-7, 1 - 1e-7] before the logs.
// d_loss = -sum(log d_truth + log(1 - d_clear)); g_loss = -sum(log d_clear).
struct AdvLosses {
  Tensor d_loss;
  Tensor g_loss;
};
AdvLosses adversarial_losses(const Tensor& d_truth, const Tensor& d_clear);
Tensor generator_adversarial(const Tensor& d_clear);

// content + lambda * generator_adversarial
Tensor perceptual_loss(const FeatureNet& feat, const Tensor& truth, const Tensor& clear,
                       const Tensor& d_clear, double lambda);

Tensor mse_loss(const Tensor& truth, const Tensor& clear);

// clip_unit(base + detail_prime)
Tensor reconstruct_t(const Tensor& base, const Tensor& detail_prime);
Image reconstruct(const Image& base, const Image& detail_prime);

constexpr double kLogClamp = 1e-7;

// HWC images <-> NCHW batches
Tensor batch_from_images(const std::vector<const Image*>& imgs, bool requires_grad = false);
Image image_from_batch(const Tensor& t, int n);

}  // namespace rainlab
