#include "rainlab/nn.hpp"

#include <cmath>
#include <cstring>

#include "rainlab/errors.hpp"

namespace rainlab {

Tensor& ParamSet::add(const std::string& name, Tensor t) {
  if (has(name)) throw ContractError("duplicate parameter name: " + name);
  items.emplace_back(name, std::move(t));
  return items.back().second;
}

Tensor& ParamSet::get(const std::string& name) {
  for (auto& [n, t] : items)
    if (n == name) return t;
  throw ContractError("unknown parameter: " + name);
}

const Tensor& ParamSet::get(const std::string& name) const {
  for (const auto& [n, t] : items)
    if (n == name) return t;
  throw ContractError("unknown parameter: " + name);
}

bool ParamSet::has(const std::string& name) const {
  for (const auto& [n, t] : items)
    if (n == name) return true;
  return false;
}

int64_t ParamSet::total_size() const {
  int64_t n = 0;
  for (const auto& [_, t] : items) n += t.size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& [_, t] : items) t.zero_grad();
}

ParamSet ParamSet::clone() const {
  ParamSet out;
  for (const auto& [n, t] : items)
    out.add(n, Tensor::leaf(t.shape(), t.value(), t.requires_grad()));
  return out;
}

uint64_t ParamSet::value_hash() const {
  uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const void* p, size_t len) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& [n, t] : items) {
    feed(n.data(), n.size());
    feed(t.value().data(), t.value().size() * sizeof(double));
  }
  return h;
}

AdamState AdamState::for_params(const ParamSet& params) {
  AdamState s;
  s.m.reserve(params.items.size());
  s.v.reserve(params.items.size());
  for (const auto& [_, t] : params.items) {
    s.m.emplace_back(static_cast<size_t>(t.size()), 0.0);
    s.v.emplace_back(static_cast<size_t>(t.size()), 0.0);
  }
  return s;
}

void adam_step(ParamSet& params, AdamState& state, double lr) {
  if (state.m.size() != params.items.size() || state.v.size() != params.items.size())
    throw ContractError("adam_step: state does not match parameter set");
  state.step_count += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (size_t k = 0; k < params.items.size(); ++k) {
    Tensor& t = params.items[k].second;
    if (!t.requires_grad()) throw ContractError("adam_step: parameter lacks gradients: " + params.items[k].first);
    const auto& g = t.grad();
    auto& val = t.mutable_value();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != g.size()) throw ContractError("adam_step: stale optimizer state");
    for (size_t i = 0; i < g.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      val[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

Tensor glorot_uniform(Shape shape, int fan_in, int fan_out, Rng& rng) {
  if (fan_in <= 0 || fan_out <= 0) throw ParamError("glorot_uniform: fans must be positive");
  double s = std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
  int64_t n = shape_numel(shape);
  std::vector<double> vals(static_cast<size_t>(n));
  for (auto& v : vals) v = rng.uniform(-s, s);
  return Tensor::leaf(std::move(shape), std::move(vals), true);
}

GradCheckReport finite_diff_check(ParamSet& params, const std::function<Tensor()>& forward,
                                  double tol, double h) {
  if (params.total_size() > 5000)
    throw ContractError("finite_diff_check: parameter count exceeds 5000");
  if (h <= 0.0) throw ParamError("finite_diff_check: h must be positive");

  params.zero_grad();
  backward(forward());
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.items.size());
  for (const auto& [_, t] : params.items) analytic.push_back(t.grad());

  GradCheckReport rep;
  rep.tol = tol;
  for (size_t k = 0; k < params.items.size(); ++k) {
    Tensor& t = params.items[k].second;
    auto& val = t.mutable_value();
    for (size_t i = 0; i < val.size(); ++i) {
      double orig = val[i];
      val[i] = orig + h;
      double lp = forward().item();
      val[i] = orig - h;
      double lm = forward().item();
      val[i] = orig;
      double num = (lp - lm) / (2.0 * h);
      double a = analytic[k][i];
      double rel = std::fabs(a - num) / std::max({std::fabs(a), std::fabs(num), 1e-3});
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.worst_param = params.items[k].first;
        rep.worst_index = static_cast<int64_t>(i);
      }
      ++rep.checked;
    }
  }
  rep.pass = rep.max_rel_error <= tol;
  return rep;
}

}  // namespace rainlab
