#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "rainlab/errors.hpp"
#include "rainlab/nn.hpp"
#include "rainlab/rng.hpp"
#include "rainlab/tensor.hpp"

using namespace rainlab;

namespace {

Tensor random_leaf(Shape shape, uint64_t seed, bool requires_grad, double lo = -1.0,
                   double hi = 1.0) {
  Rng rng(seed);
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return Tensor::leaf(std::move(shape), std::move(v), requires_grad);
}

}  // namespace

TEST_CASE("1x1 convolution with a unit kernel is the identity") {
  Tensor x = random_leaf({1, 1, 4, 4}, 1, false);
  Tensor w = Tensor::leaf({1, 1, 1, 1}, {1.0});
  Tensor b = Tensor::leaf({1}, {0.0});
  Tensor y = conv2d(x, w, b, 1, 0);
  REQUIRE(same_shape(y.shape(), x.shape()));
  for (size_t i = 0; i < x.value().size(); ++i) CHECK(y.value()[i] == x.value()[i]);
}

TEST_CASE("full-window convolution sums the input") {
  // [[1,2],[3,4]] against an all-ones 2x2 kernel, no padding -> single value 10
  Tensor x = Tensor::leaf({1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor w = Tensor::leaf({1, 1, 2, 2}, {1, 1, 1, 1});
  Tensor b = Tensor::leaf({1}, {0.0});
  Tensor y = conv2d(x, w, b, 1, 0);
  REQUIRE(y.size() == 1);
  CHECK(y.value()[0] == 10.0);
}

TEST_CASE("convolution is linear in its input") {
  Tensor w = random_leaf({2, 3, 3, 3}, 7, false);
  Tensor b = Tensor::leaf({2}, {0.0, 0.0});
  Tensor xa = random_leaf({1, 3, 5, 5}, 8, false);
  Tensor xb = random_leaf({1, 3, 5, 5}, 9, false);
  Tensor xs = add(xa, xb);
  Tensor ys = conv2d(xs, w, b, 1, 1);
  Tensor ya = conv2d(xa, w, b, 1, 1);
  Tensor yb = conv2d(xb, w, b, 1, 1);
  for (size_t i = 0; i < ys.value().size(); ++i)
    CHECK(std::fabs(ys.value()[i] - (ya.value()[i] + yb.value()[i])) <= 1e-12);
}

TEST_CASE("activation values at hand points") {
  Tensor x = Tensor::leaf({5}, {-2.0, -0.5, 0.0, 0.5, 2.0});
  Tensor r = relu(x);
  CHECK(r.value() == std::vector<double>{0.0, 0.0, 0.0, 0.5, 2.0});
  Tensor l = leaky_relu(x, 0.2);
  CHECK(l.value()[0] == -0.4);
  CHECK(l.value()[1] == -0.1);
  CHECK(l.value()[4] == 2.0);
  Tensor s = sigmoid(Tensor::leaf({1}, {0.0}));
  CHECK(s.value()[0] == 0.5);
  Tensor c = clamp(x, -1.0, 1.0);
  CHECK(c.value() == std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
}

TEST_CASE("zero loss propagates zero gradients") {
  Tensor x = random_leaf({6}, 3, true);
  Tensor d = sub(x, x);  // x - x through the graph
  Tensor loss = mean(mul(d, d));
  backward(loss);
  CHECK(loss.item() == 0.0);
  for (double g : x.grad()) CHECK(g == 0.0);
}

TEST_CASE("gradient of sum of a doubling is two everywhere") {
  Tensor x = random_leaf({7}, 4, true);
  Tensor loss = sum(affine_scale(x, 2.0, 0.0));
  backward(loss);
  for (double g : x.grad()) CHECK(g == 2.0);
}

TEST_CASE("backward accumulates until zeroed") {
  Tensor x = random_leaf({4}, 5, true);
  Tensor l1 = sum(x);
  backward(l1);
  backward(l1);
  for (double g : x.grad()) CHECK(g == 2.0);
  x.zero_grad();
  for (double g : x.grad()) CHECK(g == 0.0);
}

TEST_CASE("two separate backward passes add like one combined loss") {
  Tensor x = random_leaf({8}, 6, true, 0.1, 1.0);
  Tensor a = sum(mul(x, x));
  Tensor b = sum(log(x));
  backward(a);
  backward(b);
  std::vector<double> separate = x.grad();
  x.zero_grad();
  backward(add(sum(mul(x, x)), sum(log(x))));
  for (size_t i = 0; i < separate.size(); ++i)
    CHECK(std::fabs(separate[i] - x.grad()[i]) <= 1e-12);
}

TEST_CASE("a small two-layer network passes the finite difference check") {
  Rng rng(0x5EED);
  ParamSet params;
  params.add("w0", glorot_uniform({3, 2, 3, 3}, 2 * 9, 3 * 9, rng));
  params.add("b0", Tensor::leaf({3}, {0.01, -0.02, 0.03}, true));
  params.add("w1", glorot_uniform({2, 3}, 3, 2, rng));
  params.add("b1", Tensor::leaf({2}, {0.0, 0.1}, true));
  Tensor x = random_leaf({2, 2, 5, 5}, 11, false);
  auto forward = [&]() {
    Tensor h = relu(conv2d(x, params.get("w0"), params.get("b0"), 1, 1));
    Tensor p = global_mean_pool(h);
    Tensor o = sigmoid(affine(p, params.get("w1"), params.get("b1")));
    return mean(mul(o, o));
  };
  GradCheckReport rep = finite_diff_check(params, forward, 1e-4);
  INFO(rep.worst_param, "[", rep.worst_index, "] rel err ", rep.max_rel_error);
  CHECK(rep.pass);
  CHECK(rep.checked == params.total_size());
}

TEST_CASE("finite difference check on an exact quadratic is tight") {
  ParamSet params;
  params.add("theta", random_leaf({5}, 21, true));
  auto forward = [&]() {
    Tensor t = params.get("theta");
    return sum(mul(t, t));
  };
  GradCheckReport rep = finite_diff_check(params, forward, 1e-8);
  CHECK(rep.pass);
  CHECK(rep.max_rel_error <= 1e-8);
}

TEST_CASE("finite difference check flags a wrong backward rule") {
  ParamSet params;
  params.add("theta", random_leaf({4}, 22, true, 0.5, 1.5));
  auto forward = [&]() {
    Tensor t = params.get("theta");
    // hand-built node whose backward deliberately uses the wrong factor
    auto n = std::make_shared<TensorNode>();
    n->shape = t.shape();
    n->value.resize(t.value().size());
    for (size_t i = 0; i < n->value.size(); ++i) n->value[i] = t.value()[i] * t.value()[i];
    n->requires_grad = true;
    n->grad.assign(n->value.size(), 0.0);
    n->parents = {t.node()};
    n->backward_fn = [](TensorNode& self) {
      auto& p = *self.parents[0];
      for (size_t i = 0; i < self.grad.size(); ++i)
        p.grad[i] += self.grad[i] * 3.0 * p.value[i];  // should be 2 * value
    };
    return sum(Tensor(n));
  };
  GradCheckReport rep = finite_diff_check(params, forward, 1e-4);
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_rel_error > 0.1);
}

TEST_CASE("finite difference check refuses oversized parameter sets") {
  ParamSet params;
  params.add("big", Tensor::leaf({5001}, std::vector<double>(5001, 0.1), true));
  auto forward = [&]() { return sum(params.get("big")); };
  CHECK_THROWS_AS(finite_diff_check(params, forward), ContractError);
}

TEST_CASE("adam leaves parameters alone when gradients are zero") {
  ParamSet params;
  params.add("w", random_leaf({6}, 31, true));
  std::vector<double> before = params.get("w").value();
  AdamState st = AdamState::for_params(params);
  params.zero_grad();
  adam_step(params, st, 0.01);
  CHECK(params.get("w").value() == before);
  CHECK(st.step_count == 1);
}

TEST_CASE("adam first step moves by nearly the learning rate against the gradient sign") {
  ParamSet params;
  params.add("w", Tensor::leaf({3}, {0.5, -0.2, 0.1}, true));
  AdamState st = AdamState::for_params(params);
  Tensor loss = sum(mul(params.get("w"), params.get("w")));
  backward(loss);
  std::vector<double> before = params.get("w").value();
  std::vector<double> grads = params.get("w").grad();
  double lr = 0.01;
  adam_step(params, st, lr);
  for (size_t i = 0; i < before.size(); ++i) {
    double step = before[i] - params.get("w").value()[i];
    // bias correction makes |step| = lr * |g| / (|g| + eps'), just under lr
    CHECK(step * grads[i] > 0.0);
    CHECK(std::fabs(step) <= lr);
    CHECK(std::fabs(step) >= 0.999 * lr);
  }
}

TEST_CASE("adam with zero learning rate is a bitwise no-op on values") {
  ParamSet params;
  params.add("w", random_leaf({5}, 33, true));
  std::vector<double> before = params.get("w").value();
  AdamState st = AdamState::for_params(params);
  backward(sum(mul(params.get("w"), params.get("w"))));
  adam_step(params, st, 0.0);
  CHECK(params.get("w").value() == before);
}

TEST_CASE("adam defaults") {
  AdamState st;
  CHECK(st.beta1 == 0.9);
  CHECK(st.beta2 == 0.99);
  CHECK(st.eps == 1e-8);
  CHECK(st.step_count == 0);
}

TEST_CASE("glorot initialization is deterministic and inside its bound") {
  Rng a(12), b(12);
  Tensor ta = glorot_uniform({4, 4}, 4, 4, a);
  Tensor tb = glorot_uniform({4, 4}, 4, 4, b);
  CHECK(ta.value() == tb.value());
  double s = std::sqrt(6.0 / 8.0);
  for (double v : ta.value()) {
    CHECK(v >= -s);
    CHECK(v <= s);
  }
  bool nonconstant = false;
  for (double v : ta.value())
    if (v != ta.value()[0]) nonconstant = true;
  CHECK(nonconstant);
}

TEST_CASE("mismatched shapes are rejected") {
  Tensor a = Tensor::leaf({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::leaf({4}, {1, 2, 3, 4});
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(mul(a, b), ShapeError);
  Tensor x = Tensor::leaf({1, 2, 3, 3}, std::vector<double>(18, 0.1));
  Tensor w = Tensor::leaf({1, 3, 3, 3}, std::vector<double>(27, 0.1));
  Tensor bias = Tensor::leaf({1}, {0.0});
  CHECK_THROWS_AS(conv2d(x, w, bias), ShapeError);
}
