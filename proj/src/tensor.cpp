#include "rainlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rainlab/errors.hpp"

namespace rainlab {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) {
    if (d < 0) throw ShapeError("negative dimension");
    n *= d;
  }
  return n;
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

Tensor Tensor::leaf(Shape shape, std::vector<double> value, bool requires_grad) {
  int64_t n = shape_numel(shape);
  if (n != static_cast<int64_t>(value.size())) throw ShapeError("leaf: value size does not match shape");
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(static_cast<size_t>(n), 0.0);
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  int64_t n = shape_numel(shape);
  return leaf(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0), requires_grad);
}

Tensor Tensor::scalar(double v) { return leaf({1}, {v}, false); }

const Shape& Tensor::shape() const {
  if (!node_) throw ContractError("empty tensor");
  return node_->shape;
}

int64_t Tensor::size() const { return static_cast<int64_t>(value().size()); }

const std::vector<double>& Tensor::value() const {
  if (!node_) throw ContractError("empty tensor");
  return node_->value;
}

std::vector<double>& Tensor::mutable_value() {
  if (!node_) throw ContractError("empty tensor");
  return node_->value;
}

const std::vector<double>& Tensor::grad() const {
  if (!node_ || !node_->requires_grad) throw ContractError("tensor has no gradient buffer");
  return node_->grad;
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::zero_grad() {
  if (node_ && node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() requires a single-element tensor");
  return value()[0];
}

namespace {

std::shared_ptr<TensorNode> make_node(Shape shape, std::vector<std::shared_ptr<TensorNode>> parents) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value.assign(static_cast<size_t>(shape_numel(node->shape)), 0.0);
  node->parents = std::move(parents);
  for (const auto& p : node->parents)
    if (p->requires_grad) node->requires_grad = true;
  if (node->requires_grad) node->grad.assign(node->value.size(), 0.0);
  return node;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!same_shape(a.shape(), b.shape())) throw ShapeError(std::string(op) + ": shape mismatch");
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto n = make_node(a.shape(), {a.node(), b.node()});
  const auto& av = a.value();
  const auto& bv = b.value();
  for (size_t i = 0; i < av.size(); ++i) n->value[i] = av[i] + bv[i];
  n->backward_fn = [](TensorNode& self) {
    for (int k = 0; k < 2; ++k) {
      auto& p = self.parents[k];
      if (!p->requires_grad) continue;
      for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  };
  return Tensor(n);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  auto n = make_node(a.shape(), {a.node(), b.node()});
  const auto& av = a.value();
  const auto& bv = b.value();
  for (size_t i = 0; i < av.size(); ++i) n->value[i] = av[i] - bv[i];
  n->backward_fn = [](TensorNode& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad)
      for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
    if (pb->requires_grad)
      for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] -= self.grad[i];
  };
  return Tensor(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  auto n = make_node(a.shape(), {a.node(), b.node()});
  const auto& av = a.value();
  const auto& bv = b.value();
  for (size_t i = 0; i < av.size(); ++i) n->value[i] = av[i] * bv[i];
  n->backward_fn = [](TensorNode& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad)
      for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * pb->value[i];
    if (pb->requires_grad)
      for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i] * pa->value[i];
  };
  return Tensor(n);
}

Tensor affine_scale(const Tensor& x, double alpha, double beta) {
  auto n = make_node(x.shape(), {x.node()});
  const auto& xv = x.value();
  for (size_t i = 0; i < xv.size(); ++i) n->value[i] = alpha * xv[i] + beta;
  n->backward_fn = [alpha](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += alpha * self.grad[i];
  };
  return Tensor(n);
}

Tensor relu(const Tensor& x) {
  auto n = make_node(x.shape(), {x.node()});
  const auto& xv = x.value();
  for (size_t i = 0; i < xv.size(); ++i) n->value[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  n->backward_fn = [](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (p->value[i] > 0.0) p->grad[i] += self.grad[i];
  };
  return Tensor(n);
}

Tensor leaky_relu(const Tensor& x, double slope) {
  auto n = make_node(x.shape(), {x.node()});
  const auto& xv = x.value();
  for (size_t i = 0; i < xv.size(); ++i) n->value[i] = xv[i] > 0.0 ? xv[i] : slope * xv[i];
  n->backward_fn = [slope](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    for (size_t i = 0; i < self.grad.size(); ++i)
      p->grad[i] += (p->value[i] > 0.0 ? 1.0 : slope) * self.grad[i];
  };
  return Tensor(n);
}

Tensor sigmoid(const Tensor& x) {
  auto n = make_node(x.shape(), {x.node()});
  const auto& xv = x.value();
  for (size_t i = 0; i < xv.size(); ++i) n->value[i] = 1.0 / (1.0 + std::exp(-xv[i]));
  n->backward_fn = [](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    for (size_t i = 0; i < self.grad.size(); ++i) {
      double s = self.value[i];
      p->grad[i] += s * (1.0 - s) * self.grad[i];
    }
  };
  return Tensor(n);
}

Tensor log(const Tensor& x) {
  auto n = make_node(x.shape(), {x.node()});
  const auto& xv = x.value();
  for (size_t i = 0; i < xv.size(); ++i) {
    if (xv[i] <= 0.0) throw ParamError("log: input must be positive");
    n->value[i] = std::log(xv[i]);
  }
  n->backward_fn = [](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i] / p->value[i];
  };
  return Tensor(n);
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (!(lo < hi)) throw ParamError("clamp: lo must be < hi");
  auto n = make_node(x.shape(), {x.node()});
  const auto& xv = x.value();
  for (size_t i = 0; i < xv.size(); ++i) n->value[i] = std::min(hi, std::max(lo, xv[i]));
  n->backward_fn = [lo, hi](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (p->value[i] > lo && p->value[i] < hi) p->grad[i] += self.grad[i];
  };
  return Tensor(n);
}

Tensor sum(const Tensor& x) {
  auto n = make_node({1}, {x.node()});
  double acc = 0.0;
  for (double v : x.value()) acc += v;
  n->value[0] = acc;
  n->backward_fn = [](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    double g = self.grad[0];
    for (size_t i = 0; i < p->grad.size(); ++i) p->grad[i] += g;
  };
  return Tensor(n);
}

Tensor mean(const Tensor& x) {
  int64_t cnt = x.size();
  if (cnt == 0) throw ShapeError("mean of empty tensor");
  auto n = make_node({1}, {x.node()});
  double acc = 0.0;
  for (double v : x.value()) acc += v;
  n->value[0] = acc / static_cast<double>(cnt);
  n->backward_fn = [cnt](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    double g = self.grad[0] / static_cast<double>(cnt);
    for (size_t i = 0; i < p->grad.size(); ++i) p->grad[i] += g;
  };
  return Tensor(n);
}

namespace {

struct ConvDims {
  int N, Ci, H, W, Co, kh, kw, stride, pad, OH, OW;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  if (x.shape().size() != 4) throw ShapeError("conv2d: input must be (N,C,H,W)");
  if (w.shape().size() != 4) throw ShapeError("conv2d: weight must be (Cout,Cin,kh,kw)");
  if (b.shape().size() != 1) throw ShapeError("conv2d: bias must be (Cout)");
  if (stride < 1) throw ParamError("conv2d: stride must be >= 1");
  if (pad < 0) throw ParamError("conv2d: pad must be >= 0");
  ConvDims d;
  d.N = x.shape()[0]; d.Ci = x.shape()[1]; d.H = x.shape()[2]; d.W = x.shape()[3];
  d.Co = w.shape()[0]; d.kh = w.shape()[2]; d.kw = w.shape()[3];
  d.stride = stride; d.pad = pad;
  if (w.shape()[1] != d.Ci) throw ShapeError("conv2d: channel mismatch");
  if (b.shape()[0] != d.Co) throw ShapeError("conv2d: bias size mismatch");
  int ph = d.H + 2 * pad, pw = d.W + 2 * pad;
  if (d.kh > ph || d.kw > pw) throw ShapeError("conv2d: kernel larger than padded input");
  d.OH = (ph - d.kh) / stride + 1;
  d.OW = (pw - d.kw) / stride + 1;
  return d;
}

// copy one (H,W) plane into a zero-padded (H+2p, W+2p) buffer
void fill_padded(const double* src, double* dst, int H, int W, int pad) {
  int PW = W + 2 * pad;
  std::fill(dst, dst + static_cast<size_t>(H + 2 * pad) * PW, 0.0);
  for (int y = 0; y < H; ++y)
    std::copy(src + static_cast<size_t>(y) * W, src + static_cast<size_t>(y + 1) * W,
              dst + static_cast<size_t>(y + pad) * PW + pad);
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  ConvDims d = conv_dims(x, w, b, stride, pad);
  auto n = make_node({d.N, d.Co, d.OH, d.OW}, {x.node(), w.node(), b.node()});
  const double* xv = x.value().data();
  const double* wv = w.value().data();
  const double* bv = b.value().data();
  double* yv = n->value.data();
  const int PW = d.W + 2 * d.pad;
  const size_t plane = static_cast<size_t>(d.H) * d.W;
  const size_t oplane = static_cast<size_t>(d.OH) * d.OW;
  std::vector<double> xp(static_cast<size_t>(d.H + 2 * d.pad) * PW);

  for (int nn = 0; nn < d.N; ++nn) {
    for (int co = 0; co < d.Co; ++co) {
      double* yplane = yv + (static_cast<size_t>(nn) * d.Co + co) * oplane;
      std::fill(yplane, yplane + oplane, bv[co]);
    }
    for (int ci = 0; ci < d.Ci; ++ci) {
      fill_padded(xv + (static_cast<size_t>(nn) * d.Ci + ci) * plane, xp.data(), d.H, d.W, d.pad);
      for (int co = 0; co < d.Co; ++co) {
        double* yplane = yv + (static_cast<size_t>(nn) * d.Co + co) * oplane;
        const double* wbase = wv + ((static_cast<size_t>(co) * d.Ci + ci) * d.kh) * d.kw;
        for (int ky = 0; ky < d.kh; ++ky) {
          for (int kx = 0; kx < d.kw; ++kx) {
            double wval = wbase[static_cast<size_t>(ky) * d.kw + kx];
            if (wval == 0.0) continue;
            for (int oy = 0; oy < d.OH; ++oy) {
              const double* srow = xp.data() + static_cast<size_t>(oy * d.stride + ky) * PW + kx;
              double* yrow = yplane + static_cast<size_t>(oy) * d.OW;
              if (d.stride == 1) {
                for (int ox = 0; ox < d.OW; ++ox) yrow[ox] += wval * srow[ox];
              } else {
                for (int ox = 0; ox < d.OW; ++ox) yrow[ox] += wval * srow[static_cast<size_t>(ox) * d.stride];
              }
            }
          }
        }
      }
    }
  }

  n->backward_fn = [d](TensorNode& self) {
    auto& px = self.parents[0];
    auto& pw = self.parents[1];
    auto& pb = self.parents[2];
    const double* gy = self.grad.data();
    const int PW = d.W + 2 * d.pad;
    const size_t plane = static_cast<size_t>(d.H) * d.W;
    const size_t oplane = static_cast<size_t>(d.OH) * d.OW;
    const size_t pplane = static_cast<size_t>(d.H + 2 * d.pad) * PW;

    if (pb->requires_grad) {
      for (int nn = 0; nn < d.N; ++nn)
        for (int co = 0; co < d.Co; ++co) {
          const double* gplane = gy + (static_cast<size_t>(nn) * d.Co + co) * oplane;
          double acc = 0.0;
          for (size_t i = 0; i < oplane; ++i) acc += gplane[i];
          pb->grad[co] += acc;
        }
    }

    if (!px->requires_grad && !pw->requires_grad) return;
    std::vector<double> xp(pplane);
    std::vector<double> gxp(px->requires_grad ? pplane : 0);
    for (int nn = 0; nn < d.N; ++nn) {
      for (int ci = 0; ci < d.Ci; ++ci) {
        if (pw->requires_grad)
          fill_padded(px->value.data() + (static_cast<size_t>(nn) * d.Ci + ci) * plane, xp.data(), d.H, d.W, d.pad);
        if (px->requires_grad) std::fill(gxp.begin(), gxp.end(), 0.0);
        for (int co = 0; co < d.Co; ++co) {
          const double* gplane = gy + (static_cast<size_t>(nn) * d.Co + co) * oplane;
          const size_t wbase = (static_cast<size_t>(co) * d.Ci + ci) * d.kh * d.kw;
          for (int ky = 0; ky < d.kh; ++ky) {
            for (int kx = 0; kx < d.kw; ++kx) {
              const size_t widx = wbase + static_cast<size_t>(ky) * d.kw + kx;
              double wval = pw->value[widx];
              double wacc = 0.0;
              for (int oy = 0; oy < d.OH; ++oy) {
                const double* grow = gplane + static_cast<size_t>(oy) * d.OW;
                const size_t srow = static_cast<size_t>(oy * d.stride + ky) * PW + kx;
                if (pw->requires_grad) {
                  const double* xrow = xp.data() + srow;
                  if (d.stride == 1) {
                    for (int ox = 0; ox < d.OW; ++ox) wacc += xrow[ox] * grow[ox];
                  } else {
                    for (int ox = 0; ox < d.OW; ++ox) wacc += xrow[static_cast<size_t>(ox) * d.stride] * grow[ox];
                  }
                }
                if (px->requires_grad) {
                  double* gxrow = gxp.data() + srow;
                  if (d.stride == 1) {
                    for (int ox = 0; ox < d.OW; ++ox) gxrow[ox] += wval * grow[ox];
                  } else {
                    for (int ox = 0; ox < d.OW; ++ox) gxrow[static_cast<size_t>(ox) * d.stride] += wval * grow[ox];
                  }
                }
              }
              if (pw->requires_grad) pw->grad[widx] += wacc;
            }
          }
        }
        if (px->requires_grad) {
          double* gx = px->grad.data() + (static_cast<size_t>(nn) * d.Ci + ci) * plane;
          for (int y = 0; y < d.H; ++y) {
            const double* src = gxp.data() + static_cast<size_t>(y + d.pad) * PW + d.pad;
            double* dst = gx + static_cast<size_t>(y) * d.W;
            for (int xcol = 0; xcol < d.W; ++xcol) dst[xcol] += src[xcol];
          }
        }
      }
    }
  };
  return Tensor(n);
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.shape().size() != 2) throw ShapeError("affine: input must be (N,Fin)");
  if (w.shape().size() != 2) throw ShapeError("affine: weight must be (Fout,Fin)");
  if (b.shape().size() != 1) throw ShapeError("affine: bias must be (Fout)");
  int N = x.shape()[0], Fi = x.shape()[1], Fo = w.shape()[0];
  if (w.shape()[1] != Fi) throw ShapeError("affine: feature mismatch");
  if (b.shape()[0] != Fo) throw ShapeError("affine: bias size mismatch");
  auto n = make_node({N, Fo}, {x.node(), w.node(), b.node()});
  const auto& xv = x.value();
  const auto& wv = w.value();
  const auto& bv = b.value();
  for (int nn = 0; nn < N; ++nn)
    for (int f = 0; f < Fo; ++f) {
      double acc = bv[f];
      for (int i = 0; i < Fi; ++i) acc += xv[static_cast<size_t>(nn) * Fi + i] * wv[static_cast<size_t>(f) * Fi + i];
      n->value[static_cast<size_t>(nn) * Fo + f] = acc;
    }
  n->backward_fn = [N, Fi, Fo](TensorNode& self) {
    auto& px = self.parents[0];
    auto& pw = self.parents[1];
    auto& pb = self.parents[2];
    for (int nn = 0; nn < N; ++nn)
      for (int f = 0; f < Fo; ++f) {
        double g = self.grad[static_cast<size_t>(nn) * Fo + f];
        if (g == 0.0) continue;
        if (pb->requires_grad) pb->grad[f] += g;
        for (int i = 0; i < Fi; ++i) {
          if (px->requires_grad)
            px->grad[static_cast<size_t>(nn) * Fi + i] += g * pw->value[static_cast<size_t>(f) * Fi + i];
          if (pw->requires_grad)
            pw->grad[static_cast<size_t>(f) * Fi + i] += g * px->value[static_cast<size_t>(nn) * Fi + i];
        }
      }
  };
  return Tensor(n);
}

Tensor global_mean_pool(const Tensor& x) {
  if (x.shape().size() != 4) throw ShapeError("global_mean_pool: input must be (N,C,H,W)");
  int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  int64_t hw = static_cast<int64_t>(H) * W;
  if (hw == 0) throw ShapeError("global_mean_pool: empty plane");
  auto n = make_node({N, C}, {x.node()});
  const auto& xv = x.value();
  for (int nn = 0; nn < N; ++nn)
    for (int c = 0; c < C; ++c) {
      const double* p = xv.data() + (static_cast<size_t>(nn) * C + c) * hw;
      double acc = 0.0;
      for (int64_t i = 0; i < hw; ++i) acc += p[i];
      n->value[static_cast<size_t>(nn) * C + c] = acc / static_cast<double>(hw);
    }
  n->backward_fn = [N, C, hw](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    for (int nn = 0; nn < N; ++nn)
      for (int c = 0; c < C; ++c) {
        double g = self.grad[static_cast<size_t>(nn) * C + c] / static_cast<double>(hw);
        double* gp = p->grad.data() + (static_cast<size_t>(nn) * C + c) * hw;
        for (int64_t i = 0; i < hw; ++i) gp[i] += g;
      }
  };
  return Tensor(n);
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw ContractError("backward: empty tensor");
  if (loss.size() != 1) throw ContractError("backward: loss must be a single element");
  if (!loss.requires_grad()) throw ContractError("backward: loss does not depend on any parameter");

  // topological order by iterative DFS
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  struct Frame { TensorNode* node; size_t next_parent; };
  std::vector<Frame> stack;
  stack.push_back({loss.node().get(), 0});
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      TensorNode* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  // interior gradients start fresh each pass; leaf gradients accumulate
  for (TensorNode* n : order)
    if (!n->parents.empty()) std::fill(n->grad.begin(), n->grad.end(), 0.0);

  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

}  // namespace rainlab
