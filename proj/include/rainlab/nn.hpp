#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rainlab/rng.hpp"
#include "rainlab/tensor.hpp"

namespace rainlab {

// Named parameter leaves in a fixed, insertion-stable order.  The order is
// load-bearing: optimizer state and serialization walk it.
struct ParamSet {
  std::vector<std::pair<std::string, Tensor>> items;

  Tensor& add(const std::string& name, Tensor t);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
  int64_t total_size() const;
  void zero_grad();
  ParamSet clone() const;  // fresh leaves, same values
  uint64_t value_hash() const;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  int64_t step_count = 0;
  std::vector<std::vector<double>> m, v;  // parallel to the ParamSet items

  static AdamState for_params(const ParamSet& params);
};

// One Adam update from the gradients currently in params.  lr is passed per
// call so one state can serve objectives trained at different rates.
void adam_step(ParamSet& params, AdamState& state, double lr);

// uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out))
Tensor glorot_uniform(Shape shape, int fan_in, int fan_out, Rng& rng);

struct GradCheckReport {
  bool pass = false;
  double max_rel_error = 0.0;
  double tol = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  int64_t checked = 0;
};

// Central-difference check of backward() against the loss produced by
// `forward`, which must rebuild its graph from the current parameter values
// on every call.  Relative error uses a 1e-3 magnitude floor so coordinates
// with near-zero gradients are judged on an absolute scale.
GradCheckReport finite_diff_check(ParamSet& params, const std::function<Tensor()>& forward,
                                  double tol = 1e-4, double h = 1e-5);

}  // namespace rainlab
