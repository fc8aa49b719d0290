#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace rainlab {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& s);
bool same_shape(const Shape& a, const Shape& b);

// One node of the computation graph.  Values are computed eagerly; gradients
// are filled in by backward() walking the graph in reverse topological order.
struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated only when requires_grad
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;  // accumulates self.grad into parents
};

// Cheap handle over a shared node.  Parameters are leaves that persist across
// forward passes; every op builds fresh interior nodes on top of them.
class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(Shape shape, std::vector<double> value, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  int64_t size() const;
  const std::vector<double>& value() const;
  std::vector<double>& mutable_value();  // meant for leaves (parameter updates)
  const std::vector<double>& grad() const;
  bool requires_grad() const;
  void zero_grad();
  double item() const;  // value of a single-element tensor

  std::shared_ptr<TensorNode> node() const { return node_; }
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<TensorNode> node_;
};

// elementwise, shapes must match
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// alpha * x + beta, elementwise
Tensor affine_scale(const Tensor& x, double alpha, double beta);

Tensor relu(const Tensor& x);                          // relu'(0) = 0
Tensor leaky_relu(const Tensor& x, double slope = 0.2);
Tensor sigmoid(const Tensor& x);
Tensor log(const Tensor& x);                           // requires positive input
Tensor clamp(const Tensor& x, double lo, double hi);   // gradient passes strictly inside

Tensor sum(const Tensor& x);   // scalar
Tensor mean(const Tensor& x);  // scalar

// x: (N, Cin, H, W), w: (Cout, Cin, kh, kw), b: (Cout).  Cross-correlation
// (no kernel flip), zero padding.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride = 1, int pad = 0);

// x: (N, Fin), w: (Fout, Fin), b: (Fout) -> (N, Fout)
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

// (N, C, H, W) -> (N, C)
Tensor global_mean_pool(const Tensor& x);

// Accumulates gradients of a scalar loss into every requires_grad leaf
// reachable from it.  Leaf gradients accumulate across calls until zeroed.
void backward(const Tensor& loss);

}  // namespace rainlab
