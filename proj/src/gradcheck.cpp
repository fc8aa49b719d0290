#include "rainlab/gradcheck.hpp"

#include <cmath>

#include "rainlab/model.hpp"
#include "rainlab/rng.hpp"

namespace rainlab {

namespace {

// Values bounded away from zero so kinked activations (relu, leaky relu,
// clamp) are never sampled within a finite-difference step of their corner.
Tensor signed_leaf(Shape shape, Rng& rng, double lo = 0.05, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) {
    double mag = rng.uniform(lo, hi);
    x = rng.uniform() < 0.5 ? -mag : mag;
  }
  return Tensor::leaf(std::move(shape), std::move(v), true);
}

Tensor unit_leaf(Shape shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(0.05, 0.95);
  return Tensor::leaf(std::move(shape), std::move(v), true);
}

SuiteCase check(const std::string& name, ParamSet& params,
                const std::function<Tensor()>& forward, double tol) {
  return {name, finite_diff_check(params, forward, tol)};
}

}  // namespace

std::vector<SuiteCase> gradient_suite(double tol) {
  std::vector<SuiteCase> out;
  Rng rng(0x5eedu);

  {  // stride-1 convolution, gradients for input, weight and bias together
    ParamSet p;
    p.add("x", signed_leaf({1, 2, 5, 4}, rng));
    p.add("w", signed_leaf({3, 2, 3, 3}, rng));
    p.add("b", signed_leaf({3}, rng));
    out.push_back(check("conv-stride1", p,
                        [&p] { return mean(conv2d(p.get("x"), p.get("w"), p.get("b"), 1, 1)); },
                        tol));
  }
  {  // stride-2 convolution as the discriminator stages use it
    ParamSet p;
    p.add("x", signed_leaf({2, 2, 6, 6}, rng));
    p.add("w", signed_leaf({3, 2, 3, 3}, rng));
    p.add("b", signed_leaf({3}, rng));
    out.push_back(check("conv-stride2", p,
                        [&p] { return mean(conv2d(p.get("x"), p.get("w"), p.get("b"), 2, 1)); },
                        tol));
  }
  {
    ParamSet p;
    p.add("x", signed_leaf({3, 4}, rng));
    p.add("w", signed_leaf({2, 4}, rng));
    p.add("b", signed_leaf({2}, rng));
    out.push_back(
        check("affine", p, [&p] { return mean(affine(p.get("x"), p.get("w"), p.get("b"))); }, tol));
  }
  {
    ParamSet p;
    p.add("x", signed_leaf({2, 3, 4, 4}, rng));
    out.push_back(check("relu", p, [&p] { return mean(relu(p.get("x"))); }, tol));
  }
  {
    ParamSet p;
    p.add("x", signed_leaf({2, 3, 4, 4}, rng));
    out.push_back(check("leaky-relu", p, [&p] { return mean(leaky_relu(p.get("x"))); }, tol));
  }
  {
    ParamSet p;
    p.add("x", signed_leaf({2, 3, 4, 4}, rng));
    out.push_back(check("sigmoid", p, [&p] { return mean(sigmoid(p.get("x"))); }, tol));
  }
  {
    ParamSet p;
    p.add("x", signed_leaf({2, 3, 4, 4}, rng));
    out.push_back(check("log-sigmoid", p, [&p] { return mean(log(sigmoid(p.get("x")))); }, tol));
  }
  {  // kinks at +-0.5; samples stay clear of both
    ParamSet p;
    p.add("x", signed_leaf({2, 3, 4, 4}, rng, 0.05, 0.45));
    out.push_back(check("clamp", p, [&p] { return mean(clamp(p.get("x"), -0.5, 0.5)); }, tol));
  }
  {
    ParamSet p;
    p.add("x", signed_leaf({2, 2, 3, 3}, rng));
    p.add("y", signed_leaf({2, 2, 3, 3}, rng));
    out.push_back(check("mul-add-sub", p,
                        [&p] {
                          Tensor s = add(p.get("x"), p.get("y"));
                          Tensor d = sub(p.get("x"), p.get("y"));
                          return mean(mul(s, d));
                        },
                        tol));
  }
  {
    ParamSet p;
    p.add("x", signed_leaf({2, 3, 4, 5}, rng));
    out.push_back(
        check("global-mean-pool", p, [&p] { return sum(global_mean_pool(p.get("x"))); }, tol));
  }
  {  // residual block shape: x + conv(relu(conv(x))), narrow channels
    ParamSet p;
    p.add("x", signed_leaf({1, 3, 5, 5}, rng));
    p.add("w0", signed_leaf({3, 3, 3, 3}, rng));
    p.add("b0", signed_leaf({3}, rng));
    p.add("w1", signed_leaf({3, 3, 3, 3}, rng));
    p.add("b1", signed_leaf({3}, rng));
    out.push_back(check("residual-block", p,
                        [&p] {
                          Tensor h = conv2d(p.get("x"), p.get("w0"), p.get("b0"), 1, 1);
                          h = conv2d(relu(h), p.get("w1"), p.get("b1"), 1, 1);
                          return mean(add(p.get("x"), h));
                        },
                        tol));
  }

  FeatureNet feat = FeatureNet::init(7);
  Discriminator disc = Discriminator::init(7);
  Tensor truth = unit_leaf({1, 3, 8, 8}, rng);

  {  // feature-space loss, gradient flows into the restored image
    ParamSet p;
    p.add("clear", unit_leaf({1, 3, 8, 8}, rng));
    out.push_back(check(
        "content-loss", p,
        [&p, &feat, &truth] { return content_loss(feat, truth, p.get("clear")); }, tol));
  }
  {  // discriminator side of the adversarial pair, through weights and inputs
    ParamSet p;
    p.add("truth", unit_leaf({1, 3, 8, 8}, rng));
    p.add("clear", unit_leaf({1, 3, 8, 8}, rng));
    p.add("dw0", Tensor::leaf(disc.params.get("conv0.w").shape(),
                              disc.params.get("conv0.w").value(), true));
    p.add("dhw", Tensor::leaf(disc.params.get("head.w").shape(),
                              disc.params.get("head.w").value(), true));
    auto fwd = [&p, &disc] {
      Discriminator d2 = disc;
      d2.params.get("conv0.w") = p.get("dw0");
      d2.params.get("head.w") = p.get("dhw");
      return adversarial_losses(d2.forward(p.get("truth")), d2.forward(p.get("clear"))).d_loss;
    };
    out.push_back(check("adversarial-d", p, fwd, tol));
  }
  {  // generator side of the adversarial pair
    ParamSet p;
    p.add("clear", unit_leaf({1, 3, 8, 8}, rng));
    out.push_back(check(
        "adversarial-g", p,
        [&p, &disc] { return generator_adversarial(disc.forward(p.get("clear"))); }, tol));
  }
  {
    ParamSet p;
    p.add("clear", unit_leaf({1, 3, 8, 8}, rng));
    auto fwd = [&p, &feat, &disc, &truth] {
      Tensor c = p.get("clear");
      return perceptual_loss(feat, truth, c, disc.forward(c), 100.0);
    };
    out.push_back(check("perceptual-loss", p, fwd, tol));
  }
  {
    ParamSet p;
    p.add("clear", unit_leaf({1, 3, 8, 8}, rng));
    out.push_back(
        check("mse-loss", p, [&p, &truth] { return mse_loss(truth, p.get("clear")); }, tol));
  }
  {  // production restoration path: subset of generator weights through
     // decomposed input, reconstruction and pixel loss
    Generator gen = Generator::init(7);
    ParamSet p;
    p.add("in.b", Tensor::leaf(gen.params.get("conv_in.b").shape(),
                               gen.params.get("conv_in.b").value(), true));
    p.add("out.w", Tensor::leaf(gen.params.get("conv_out.w").shape(),
                                gen.params.get("conv_out.w").value(), true));
    Tensor base = unit_leaf({1, 3, 8, 8}, rng);
    Tensor detail = signed_leaf({1, 3, 8, 8}, rng, 0.01, 0.3);
    auto fwd = [&p, &gen, &base, &detail, &truth] {
      Generator g2 = gen;
      g2.params.get("conv_in.b") = p.get("in.b");
      g2.params.get("conv_out.w") = p.get("out.w");
      Tensor clear = reconstruct_t(base, g2.forward(detail));
      return mse_loss(truth, clear);
    };
    out.push_back(check("generator-path", p, fwd, tol));
  }

  return out;
}

bool suite_passed(const std::vector<SuiteCase>& cases) {
  for (const auto& c : cases)
    if (!c.report.pass) return false;
  return true;
}

}  // namespace rainlab
