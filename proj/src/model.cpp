#include "rainlab/model.hpp"

#include <array>

#include "rainlab/errors.hpp"

namespace rainlab {

namespace {

struct ConvSpec {
  const char* name;
  int out_ch, in_ch, k;
};

constexpr std::array<ConvSpec, 8> kGenConvs = {{
    {"conv_in", 32, 3, 3},
    {"block0.conv0", 32, 32, 3},
    {"block0.conv1", 32, 32, 3},
    {"block1.conv0", 32, 32, 3},
    {"block1.conv1", 32, 32, 3},
    {"block2.conv0", 32, 32, 3},
    {"block2.conv1", 32, 32, 3},
    {"conv_out", 3, 32, 3},
}};

constexpr std::array<ConvSpec, 3> kDiscConvs = {{
    {"conv0", 16, 3, 3},
    {"conv1", 32, 16, 3},
    {"conv2", 64, 32, 3},
}};

constexpr std::array<ConvSpec, 2> kFeatConvs = {{
    {"conv0", 8, 3, 3},
    {"conv1", 16, 8, 3},
}};

template <size_t N>
void init_convs(ParamSet& params, const std::array<ConvSpec, N>& specs, uint64_t seed, bool trainable) {
  for (size_t i = 0; i < specs.size(); ++i) {
    const ConvSpec& c = specs[i];
    Rng rng(derive_seed(seed, "layer", i));
    int fan_in = c.in_ch * c.k * c.k;
    int fan_out = c.out_ch * c.k * c.k;
    Tensor w = glorot_uniform({c.out_ch, c.in_ch, c.k, c.k}, fan_in, fan_out, rng);
    Tensor b = Tensor::zeros({c.out_ch}, true);
    if (!trainable) {
      w.node()->requires_grad = false;
      w.node()->grad.clear();
      b.node()->requires_grad = false;
      b.node()->grad.clear();
    }
    params.add(std::string(c.name) + ".w", std::move(w));
    params.add(std::string(c.name) + ".b", std::move(b));
  }
}

template <size_t N>
void check_convs(const ParamSet& params, const std::array<ConvSpec, N>& specs, size_t extra,
                 const char* what) {
  if (params.items.size() != specs.size() * 2 + extra)
    throw ShapeError(std::string(what) + ": unexpected parameter count");
  for (const ConvSpec& c : specs) {
    const Tensor& w = params.get(std::string(c.name) + ".w");
    const Tensor& b = params.get(std::string(c.name) + ".b");
    if (w.shape() != Shape{c.out_ch, c.in_ch, c.k, c.k})
      throw ShapeError(std::string(what) + ": bad shape for " + c.name + ".w");
    if (b.shape() != Shape{c.out_ch})
      throw ShapeError(std::string(what) + ": bad shape for " + c.name + ".b");
  }
}

void check_batch(const Tensor& x, int channels, const char* what) {
  if (x.shape().size() != 4 || x.shape()[1] != channels)
    throw ShapeError(std::string(what) + ": expected (N," + std::to_string(channels) + ",H,W) input");
}

}  // namespace

Generator Generator::init(uint64_t seed) {
  Generator g;
  init_convs(g.params, kGenConvs, derive_seed(seed, "gen-init"), true);
  return g;
}

Generator Generator::from_params(ParamSet p) {
  check_convs(p, kGenConvs, 0, "generator");
  Generator g;
  g.params = std::move(p);
  return g;
}

Tensor Generator::forward(const Tensor& detail) const {
  check_batch(detail, 3, "generator");
  auto conv = [this](const Tensor& x, const char* name) {
    return conv2d(x, params.get(std::string(name) + ".w"), params.get(std::string(name) + ".b"), 1, 1);
  };
  Tensor h = conv(detail, "conv_in");
  for (const char* blk : {"block0", "block1", "block2"}) {
    Tensor t = conv(h, (std::string(blk) + ".conv0").c_str());
    t = relu(t);
    t = conv(t, (std::string(blk) + ".conv1").c_str());
    h = add(h, t);
  }
  return conv(h, "conv_out");
}

Discriminator Discriminator::init(uint64_t seed) {
  Discriminator d;
  uint64_t s = derive_seed(seed, "disc-init");
  init_convs(d.params, kDiscConvs, s, true);
  Rng rng(derive_seed(s, "layer", 99));
  d.params.add("head.w", glorot_uniform({1, 64}, 64, 1, rng));
  d.params.add("head.b", Tensor::zeros({1}, true));
  return d;
}

Discriminator Discriminator::from_params(ParamSet p) {
  check_convs(p, kDiscConvs, 2, "discriminator");
  if (p.get("head.w").shape() != Shape{1, 64} || p.get("head.b").shape() != Shape{1})
    throw ShapeError("discriminator: bad head shape");
  Discriminator d;
  d.params = std::move(p);
  return d;
}

Tensor Discriminator::forward(const Tensor& img) const {
  check_batch(img, 3, "discriminator");
  if (img.shape()[2] < 8 || img.shape()[3] < 8)
    throw ShapeError("discriminator: input must be at least 8x8");
  Tensor h = img;
  for (const ConvSpec& c : kDiscConvs) {
    h = conv2d(h, params.get(std::string(c.name) + ".w"), params.get(std::string(c.name) + ".b"), 2, 1);
    h = leaky_relu(h, 0.2);
  }
  h = global_mean_pool(h);
  h = affine(h, params.get("head.w"), params.get("head.b"));
  return sigmoid(h);
}

FeatureNet FeatureNet::init(uint64_t seed) {
  FeatureNet f;
  init_convs(f.params, kFeatConvs, derive_seed(seed, "feat-init"), false);
  return f;
}

FeatureNet FeatureNet::from_params(ParamSet p) {
  check_convs(p, kFeatConvs, 0, "feature net");
  for (auto& [name, t] : p.items)
    if (t.requires_grad()) throw ContractError("feature net parameters must be fixed: " + name);
  FeatureNet f;
  f.params = std::move(p);
  return f;
}

Tensor FeatureNet::forward(const Tensor& img) const {
  check_batch(img, 3, "feature net");
  Tensor h = conv2d(img, params.get("conv0.w"), params.get("conv0.b"), 1, 1);
  h = relu(h);
  h = conv2d(h, params.get("conv1.w"), params.get("conv1.b"), 1, 1);
  return relu(h);
}

Tensor feature_mse(const Tensor& a, const Tensor& b) {
  Tensor d = sub(a, b);
  return mean(mul(d, d));
}

Tensor content_loss(const FeatureNet& feat, const Tensor& truth, const Tensor& clear) {
  return feature_mse(feat.forward(truth), feat.forward(clear));
}

Tensor generator_adversarial(const Tensor& d_clear) {
  Tensor dc = clamp(d_clear, kLogClamp, 1.0 - kLogClamp);
  return affine_scale(sum(log(dc)), -1.0, 0.0);
}

AdvLosses adversarial_losses(const Tensor& d_truth, const Tensor& d_clear) {
  if (!same_shape(d_truth.shape(), d_clear.shape()))
    throw ShapeError("adversarial_losses: batch shapes differ");
  Tensor dt = clamp(d_truth, kLogClamp, 1.0 - kLogClamp);
  Tensor dc = clamp(d_clear, kLogClamp, 1.0 - kLogClamp);
  Tensor truth_term = sum(log(dt));
  Tensor clear_term = sum(log(affine_scale(dc, -1.0, 1.0)));
  AdvLosses out;
  out.d_loss = affine_scale(add(truth_term, clear_term), -1.0, 0.0);
  out.g_loss = generator_adversarial(d_clear);
  return out;
}

Tensor perceptual_loss(const FeatureNet& feat, const Tensor& truth, const Tensor& clear,
                       const Tensor& d_clear, double lambda) {
  Tensor content = content_loss(feat, truth, clear);
  return add(content, affine_scale(generator_adversarial(d_clear), lambda, 0.0));
}

Tensor mse_loss(const Tensor& truth, const Tensor& clear) { return feature_mse(truth, clear); }

Tensor reconstruct_t(const Tensor& base, const Tensor& detail_prime) {
  return clamp(add(base, detail_prime), 0.0, 1.0);
}

Image reconstruct(const Image& base, const Image& detail_prime) {
  if (!base.same_shape(detail_prime)) throw ShapeError("reconstruct: shape mismatch");
  Image out(base.height, base.width, base.channels);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = base.data[i] + detail_prime.data[i];
  return clip_unit(std::move(out));
}

Tensor batch_from_images(const std::vector<const Image*>& imgs, bool requires_grad) {
  if (imgs.empty()) throw ShapeError("batch_from_images: empty batch");
  const Image& first = *imgs[0];
  for (const Image* im : imgs)
    if (!im->same_shape(first)) throw ShapeError("batch_from_images: mixed shapes");
  int N = static_cast<int>(imgs.size()), C = first.channels, H = first.height, W = first.width;
  std::vector<double> vals(static_cast<size_t>(N) * C * H * W);
  size_t idx = 0;
  for (const Image* im : imgs)
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) vals[idx++] = im->at(y, x, c);
  return Tensor::leaf({N, C, H, W}, std::move(vals), requires_grad);
}

Image image_from_batch(const Tensor& t, int n) {
  if (t.shape().size() != 4) throw ShapeError("image_from_batch: need (N,C,H,W)");
  int N = t.shape()[0], C = t.shape()[1], H = t.shape()[2], W = t.shape()[3];
  if (n < 0 || n >= N) throw ContractError("image_from_batch: index out of range");
  Image img(H, W, C);
  const auto& v = t.value();
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        img.at(y, x, c) = v[((static_cast<size_t>(n) * C + c) * H + y) * W + x];
  return img;
}

}  // namespace rainlab
