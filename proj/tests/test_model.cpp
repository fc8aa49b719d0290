#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "rainlab/errors.hpp"
#include "rainlab/model.hpp"
#include "rainlab/rng.hpp"

using namespace rainlab;

namespace {

Tensor random_batch(int n, int c, int h, int w, uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Rng rng(seed);
  std::vector<double> v(static_cast<size_t>(n) * c * h * w);
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return Tensor::leaf({n, c, h, w}, std::move(v));
}

void fill(Tensor& t, double v) {
  for (auto& x : t.mutable_value()) x = v;
}

// Wire a generator so every layer passes its input through: identity 1x1
// taps in the 3x3 kernels, zeroed residual blocks.
Generator identity_generator() {
  Generator gen = Generator::init(0);
  for (auto& [name, t] : gen.params.items) fill(t, 0.0);
  auto tap = [](Tensor& w, int cout, int cin, int klen) {
    // center of a 3x3 kernel at [c][c][1][1]
    for (int c = 0; c < std::min(cout, cin); ++c) {
      size_t idx = ((static_cast<size_t>(c) * cin + c) * klen + 1) * klen + 1;
      w.mutable_value()[idx] = 1.0;
    }
  };
  tap(gen.params.get("conv_in.w"), 32, 3, 3);
  tap(gen.params.get("conv_out.w"), 3, 32, 3);
  return gen;
}

// Independent feature pipeline: rebuild the content loss from raw forward
// passes so the packaged loss has something to be compared against.
double naive_content(const FeatureNet& feat, const Tensor& truth, const Tensor& clear) {
  Tensor ft = feat.forward(truth);
  Tensor fc = feat.forward(clear);
  double acc = 0.0;
  for (size_t i = 0; i < ft.value().size(); ++i) {
    double d = ft.value()[i] - fc.value()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(ft.value().size());
}

}  // namespace

TEST_CASE("identity-wired generator reproduces its input exactly") {
  Generator gen = identity_generator();
  Tensor detail = random_batch(2, 3, 8, 8, 5, -0.5, 0.5);
  Tensor out = gen.forward(detail);
  REQUIRE(same_shape(out.shape(), detail.shape()));
  for (size_t i = 0; i < detail.value().size(); ++i)
    CHECK(out.value()[i] == detail.value()[i]);
}

TEST_CASE("freshly initialized generator is deterministic per seed") {
  Generator a = Generator::init(9), b = Generator::init(9), c = Generator::init(10);
  CHECK(a.params.value_hash() == b.params.value_hash());
  CHECK(a.params.value_hash() != c.params.value_hash());
}

TEST_CASE("discriminator output is a probability") {
  Discriminator disc = Discriminator::init(3);
  Tensor out = disc.forward(random_batch(3, 3, 16, 16, 8));
  REQUIRE(same_shape(out.shape(), {3, 1}));
  for (double v : out.value()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("zeroed discriminator head sits at one half") {
  Discriminator disc = Discriminator::init(4);
  fill(disc.params.get("head.w"), 0.0);
  fill(disc.params.get("head.b"), 0.0);
  Tensor out = disc.forward(random_batch(2, 3, 8, 8, 9));
  for (double v : out.value()) CHECK(v == 0.5);
}

TEST_CASE("discriminator rejects tiny inputs") {
  Discriminator disc = Discriminator::init(5);
  CHECK_THROWS_AS(disc.forward(random_batch(1, 3, 7, 7, 10)), ShapeError);
  CHECK_NOTHROW(disc.forward(random_batch(1, 3, 8, 8, 10)));
}

TEST_CASE("content loss of identical inputs is zero") {
  FeatureNet feat = FeatureNet::init(6);
  Tensor x = random_batch(1, 3, 8, 8, 11);
  CHECK(content_loss(feat, x, x).item() == 0.0);
}

TEST_CASE("content loss is nonnegative and matches the rebuilt pipeline") {
  FeatureNet feat = FeatureNet::init(6);
  Tensor a = random_batch(2, 3, 8, 8, 12);
  Tensor b = random_batch(2, 3, 8, 8, 13);
  double packaged = content_loss(feat, a, b).item();
  CHECK(packaged >= 0.0);
  CHECK(std::fabs(packaged - naive_content(feat, a, b)) <= 1e-12);
}

TEST_CASE("feature extractor weights are frozen and reproducible") {
  FeatureNet f1 = FeatureNet::init(6), f2 = FeatureNet::init(6);
  CHECK(f1.weight_hash() == f2.weight_hash());
  for (auto& [name, t] : f1.params.items) CHECK_FALSE(t.requires_grad());
}

TEST_CASE("blind discriminator pays two log two per sample") {
  Tensor half = Tensor::leaf({1, 1}, {0.5});
  AdvLosses l = adversarial_losses(half, half);
  CHECK(std::fabs(l.d_loss.item() - 2.0 * std::log(2.0)) <= 1e-12);
  Tensor half4 = Tensor::leaf({4, 1}, {0.5, 0.5, 0.5, 0.5});
  AdvLosses l4 = adversarial_losses(half4, half4);
  CHECK(std::fabs(l4.d_loss.item() - 8.0 * std::log(2.0)) <= 1e-12);
}

TEST_CASE("confident correct discriminator pays almost nothing") {
  Tensor truth = Tensor::leaf({1, 1}, {1.0 - 1e-9});
  Tensor clear = Tensor::leaf({1, 1}, {1e-9});
  AdvLosses l = adversarial_losses(truth, clear);
  // probabilities clamp at 1e-7, so the floor is -2 log(1 - 1e-7)
  CHECK(l.d_loss.item() >= 0.0);
  CHECK(l.d_loss.item() <= 1e-6);
}

TEST_CASE("blind probabilities are the discriminator's best response") {
  // any deviation from one half on both branches raises d_loss above 2 log 2
  for (double p : {0.1, 0.3, 0.7, 0.9}) {
    Tensor t = Tensor::leaf({1, 1}, {p});
    AdvLosses l = adversarial_losses(t, t);
    CHECK(l.d_loss.item() > 2.0 * std::log(2.0));
  }
}

TEST_CASE("generator loss falls as the discriminator is fooled harder") {
  double prev = 1e300;
  for (double p : {0.1, 0.5, 0.9}) {
    double g = generator_adversarial(Tensor::leaf({1, 1}, {p})).item();
    CHECK(g < prev);
    CHECK(g >= 0.0);
    prev = g;
  }
}

TEST_CASE("probability clamping keeps the losses finite") {
  Tensor zero = Tensor::leaf({1, 1}, {0.0});
  Tensor one = Tensor::leaf({1, 1}, {1.0});
  AdvLosses l = adversarial_losses(zero, one);
  CHECK(std::isfinite(l.d_loss.item()));
  CHECK(std::isfinite(l.g_loss.item()));
  CHECK(std::isfinite(generator_adversarial(zero).item()));
}

TEST_CASE("perceptual loss with zero weight is the content loss") {
  FeatureNet feat = FeatureNet::init(6);
  Tensor a = random_batch(1, 3, 8, 8, 14);
  Tensor b = random_batch(1, 3, 8, 8, 15);
  Tensor d = Tensor::leaf({1, 1}, {0.3});
  CHECK(perceptual_loss(feat, a, b, d, 0.0).item() == content_loss(feat, a, b).item());
}

TEST_CASE("perceptual loss splits into its two parts") {
  FeatureNet feat = FeatureNet::init(6);
  Tensor a = random_batch(1, 3, 8, 8, 16);
  Tensor b = random_batch(1, 3, 8, 8, 17);
  Tensor d = Tensor::leaf({1, 1}, {0.3});
  double want = content_loss(feat, a, b).item() + 100.0 * generator_adversarial(d).item();
  CHECK(std::fabs(perceptual_loss(feat, a, b, d, 100.0).item() - want) <= 1e-12);
}

TEST_CASE("mse loss at hand values") {
  Tensor a = Tensor::leaf({1, 1, 2, 2}, {0.1, 0.2, 0.3, 0.4});
  Tensor b = Tensor::leaf({1, 1, 2, 2}, {0.2, 0.3, 0.4, 0.5});
  CHECK(std::fabs(mse_loss(a, b).item() - 0.01) <= 1e-15);
  CHECK(mse_loss(a, a).item() == 0.0);
  CHECK(mse_loss(a, b).item() == mse_loss(b, a).item());
}

TEST_CASE("reconstruction clips the sum into the unit interval") {
  Image base(1, 3, 3);
  Image detail(1, 3, 3);
  base.at(0, 0, 0) = 0.9;
  detail.at(0, 0, 0) = 0.4;  // over one
  base.at(0, 1, 0) = 0.1;
  detail.at(0, 1, 0) = -0.4;  // below zero
  base.at(0, 2, 0) = 0.5;
  detail.at(0, 2, 0) = 0.1;
  Image out = reconstruct(base, detail);
  CHECK(out.at(0, 0, 0) == 1.0);
  CHECK(out.at(0, 1, 0) == 0.0);
  CHECK(std::fabs(out.at(0, 2, 0) - 0.6) <= 1e-15);
}

TEST_CASE("batch packing round trips images") {
  Rng rng(44);
  Image a(5, 4, 3), b(5, 4, 3);
  for (auto& v : a.data) v = rng.uniform();
  for (auto& v : b.data) v = rng.uniform();
  Tensor batch = batch_from_images({&a, &b});
  REQUIRE(same_shape(batch.shape(), {2, 3, 5, 4}));
  Image ra = image_from_batch(batch, 0);
  Image rb = image_from_batch(batch, 1);
  for (size_t i = 0; i < a.data.size(); ++i) {
    CHECK(ra.data[i] == a.data[i]);
    CHECK(rb.data[i] == b.data[i]);
  }
}

TEST_CASE("parameter sets validate names on load") {
  Generator gen = Generator::init(1);
  ParamSet broken = gen.params.clone();
  broken.items.pop_back();
  CHECK_THROWS_AS(Generator::from_params(std::move(broken)), ShapeError);
  ParamSet good = gen.params.clone();
  Generator again = Generator::from_params(std::move(good));
  CHECK(again.params.value_hash() == gen.params.value_hash());
}
