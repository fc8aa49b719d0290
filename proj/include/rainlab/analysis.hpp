#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rainlab/rng.hpp"

namespace rainlab {

// Desk-scale study of why alternating the two training objectives beats
// summing them.  A tiny scalar-bottleneck network f(I;theta) is fit to
// targets planted at a known theta*, with a feature-space loss on a "heavy"
// subset and a pixel loss on the full set.  Summing the two losses admits
// stationary points where the component gradients cancel each other without
// either being zero; the alternating schedule walks away from such points
// while joint descent sits still.

// f(I;theta) = W2 * tanh(w1.I + b1), 16 inputs -> 16 outputs through a
// scalar hidden unit.  theta layout: w1[0..15], b1, W2[0..15].
inline constexpr int kToyInputDim = 16;
inline constexpr int kToyFeatureDim = 12;
inline constexpr int kToyParamCount = 2 * kToyInputDim + 1;

struct ToySample {
  std::vector<double> input;   // 16, flattened 4x4 single channel
  std::vector<double> target;  // 16, produced by the model at theta*
  bool heavy = false;
  double perturb_mag = 0.0;  // mean |additive perturbation| of the input
};

struct ToyInstance {
  std::vector<ToySample> samples;   // heavy entries are a subset of these
  std::vector<int> heavy_indices;
  std::vector<double> feature_map;  // 12x16 row-major, fixed
  std::vector<double> theta_star;   // 33, global minimizer of both losses
  double lambda = 1.0;              // weight of the pixel term in the sum
  uint64_t seed = 0;
};

// Deterministic instance.  Targets are generated by the model itself at
// theta*, so residual-zero solutions exist.  Heavy inputs carry additive
// perturbations scaled so their mean magnitude is 6x the light mean, which
// keeps heavy >= 2x the whole-set mean by construction.
ToyInstance build_toy_instance(uint64_t seed);

std::vector<double> toy_forward(const ToyInstance& inst, const std::vector<double>& theta,
                                int sample);

// feature-space term: mean over heavy samples of |M(f - target)|^2
double toy_content_loss(const ToyInstance& inst, const std::vector<double>& theta);
// pixel term: mean over all samples of |f - target|^2
double toy_mse_loss(const ToyInstance& inst, const std::vector<double>& theta);
// summed objective: content + lambda * mse
double toy_joint_loss(const ToyInstance& inst, const std::vector<double>& theta);

std::vector<double> toy_content_grad(const ToyInstance& inst, const std::vector<double>& theta);
std::vector<double> toy_mse_grad(const ToyInstance& inst, const std::vector<double>& theta);
std::vector<double> toy_joint_grad(const ToyInstance& inst, const std::vector<double>& theta);

// Frobenius norm of the stacked model Jacobian d f / d theta over a set.
double toy_jacobian_norm(const ToyInstance& inst, const std::vector<double>& theta,
                         bool heavy_only);
// sqrt of the summed squared residuals f - target over a set
double toy_residual_norm(const ToyInstance& inst, const std::vector<double>& theta,
                         bool heavy_only);

// Four convergence patterns of the pair (model Jacobian, residuals) measured
// on the whole set and on the heavy subset, plus a bucket for points that
// match none of them.
enum class SolutionClass {
  BothStationary,           // Jacobian vanishes on both sets
  HeavyGlobalAllStationary, // heavy residual zero, whole-set Jacobian vanishes
  AllGlobalHeavyStationary, // whole-set residual zero, heavy Jacobian vanishes
  BothGlobal,               // residual zero on both sets
  Unclassified,
};
std::string to_string(SolutionClass c);

struct ClassifyResult {
  SolutionClass cls = SolutionClass::Unclassified;
  double jac_all = 0.0, jac_heavy = 0.0;
  double resid_all = 0.0, resid_heavy = 0.0;
};

ClassifyResult classify_solution(const ToyInstance& inst, const std::vector<double>& theta,
                                 double grad_tol = 1e-6, double resid_tol = 1e-6);

struct SearchBudget {
  int restarts = 64;
  int max_steps = 5000;  // per restart
};

// A stationary point of the summed loss at which the two component gradients
// cancel rather than vanish, together with the norms that certify it.
struct InterferencePoint {
  bool found = false;
  std::vector<double> theta;
  double joint_grad_norm = 0.0;
  double content_grad_norm = 0.0;
  double mse_grad_norm = 0.0;
  int restart_index = -1;
};

// Multi-start root search on grad(joint) = 0 (Levenberg-Marquardt with a
// finite-difference Hessian), certifying joint <= 1e-6 with both component
// norms >= 1e-2.  Restarts are independent; the certified point with the
// lowest joint norm wins, ties broken by restart index.  Exhausting the
// budget without a certificate is reported honestly as not-found.
InterferencePoint find_interference_stationary(const ToyInstance& inst, uint64_t seed,
                                               const SearchBudget& budget = {});

enum class ScheduleKind { Alternating, Joint };

struct ScheduleParams {
  int cycles = 5;          // heavy-set steps per round in the alternating schedule
  double lr_fast = 0.05;   // heavy-set feature-loss steps
  double lr_slow = 0.005;  // whole-set pixel-loss steps; fast/slow = 10
  double lr_joint = 0.005; // plain descent on the summed loss
};

struct ScheduleStep {
  double content = 0.0, mse = 0.0, joint = 0.0;
  double delta_from_start = 0.0;  // |theta_t - theta_0|
};

struct ScheduleResult {
  std::vector<ScheduleStep> trace;  // one entry per parameter update
  std::vector<double> final_theta;
  ClassifyResult final_class;
};

// Gradient descent for `steps` parameter updates.  Alternating repeats
// [cycles x heavy feature step, 1 x whole-set pixel step]; Joint descends the
// summed loss every step.
ScheduleResult run_schedule(const ToyInstance& inst, ScheduleKind kind,
                            const std::vector<double>& theta0, int steps,
                            const ScheduleParams& params = {});

}  // namespace rainlab
