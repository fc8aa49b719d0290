#include "rainlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "rainlab/errors.hpp"

namespace rainlab {

namespace {

constexpr int kIn = kToyInputDim;
constexpr int kFeat = kToyFeatureDim;
constexpr int kP = kToyParamCount;

// theta layout helpers
inline const double* w1_of(const std::vector<double>& th) { return th.data(); }
inline double b1_of(const std::vector<double>& th) { return th[kIn]; }
inline const double* w2_of(const std::vector<double>& th) { return th.data() + kIn + 1; }

struct Activation {
  double h;  // tanh of the hidden pre-activation
  double g;  // 1 - h^2
};

Activation activation(const ToyInstance& inst, const std::vector<double>& theta, int i) {
  const double* w1 = w1_of(theta);
  double s = b1_of(theta);
  const auto& in = inst.samples[i].input;
  for (int k = 0; k < kIn; ++k) s += w1[k] * in[k];
  double h = std::tanh(s);
  return {h, 1.0 - h * h};
}

std::vector<double> residual(const ToyInstance& inst, const std::vector<double>& theta, int i) {
  Activation a = activation(inst, theta, i);
  const double* w2 = w2_of(theta);
  const auto& t = inst.samples[i].target;
  std::vector<double> r(kIn);
  for (int j = 0; j < kIn; ++j) r[j] = w2[j] * a.h - t[j];
  return r;
}

// v = Mt M r for the feature-space loss
std::vector<double> feature_pullback(const ToyInstance& inst, const std::vector<double>& r) {
  std::vector<double> mr(kFeat, 0.0);
  for (int a = 0; a < kFeat; ++a)
    for (int j = 0; j < kIn; ++j) mr[a] += inst.feature_map[a * kIn + j] * r[j];
  std::vector<double> v(kIn, 0.0);
  for (int a = 0; a < kFeat; ++a)
    for (int j = 0; j < kIn; ++j) v[j] += inst.feature_map[a * kIn + j] * mr[a];
  return v;
}

// Accumulates c * Ji^T v into g, using the closed form of the Jacobian of
// f = W2 * tanh(w1.I + b1).
void accumulate_pullback(const ToyInstance& inst, const std::vector<double>& theta, int i,
                         const std::vector<double>& v, double c, std::vector<double>& g) {
  Activation a = activation(inst, theta, i);
  const double* w2 = w2_of(theta);
  const auto& in = inst.samples[i].input;
  double w2v = 0.0;
  for (int j = 0; j < kIn; ++j) w2v += w2[j] * v[j];
  double scale = c * a.g * w2v;
  for (int k = 0; k < kIn; ++k) g[k] += scale * in[k];  // w1 block
  g[kIn] += scale;                                      // b1
  for (int j = 0; j < kIn; ++j) g[kIn + 1 + j] += c * a.h * v[j];  // W2 block
}

double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Gaussian elimination with partial pivoting; A is n x n row-major,
// solved in place.  Returns false on a (near-)singular pivot.
bool solve_linear(std::vector<double> A, std::vector<double> b, int n, std::vector<double>& x) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(A[r * n + col]) > std::fabs(A[piv * n + col])) piv = r;
    if (std::fabs(A[piv * n + col]) < 1e-300) return false;
    if (piv != col) {
      for (int k = col; k < n; ++k) std::swap(A[piv * n + k], A[col * n + k]);
      std::swap(b[piv], b[col]);
    }
    double d = A[col * n + col];
    for (int r = col + 1; r < n; ++r) {
      double m = A[r * n + col] / d;
      if (m == 0.0) continue;
      for (int k = col; k < n; ++k) A[r * n + k] -= m * A[col * n + k];
      b[r] -= m * b[col];
    }
  }
  x.assign(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < n; ++k) s -= A[r * n + k] * x[k];
    x[r] = s / A[r * n + r];
  }
  return true;
}

// central-difference Hessian of the joint loss, column major J[col*kP + row]
std::vector<double> fd_hessian(const ToyInstance& inst, std::vector<double> theta) {
  const double h = 1e-5;
  std::vector<double> H(kP * kP);
  for (int j = 0; j < kP; ++j) {
    double keep = theta[j];
    theta[j] = keep + h;
    std::vector<double> gp = toy_joint_grad(inst, theta);
    theta[j] = keep - h;
    std::vector<double> gm = toy_joint_grad(inst, theta);
    theta[j] = keep;
    for (int r = 0; r < kP; ++r) H[j * kP + r] = (gp[r] - gm[r]) / (2.0 * h);
  }
  return H;
}

}  // namespace

ToyInstance build_toy_instance(uint64_t seed) {
  ToyInstance inst;
  inst.seed = seed;
  inst.lambda = 1.0;

  Rng trng(derive_seed(seed, "toy-theta-star"));
  inst.theta_star.resize(kP);
  for (int k = 0; k < kIn; ++k) inst.theta_star[k] = trng.uniform(-0.15, 0.15);  // w1
  inst.theta_star[kIn] = trng.uniform(-0.2, 0.2);                                // b1
  for (int j = 0; j < kIn; ++j) inst.theta_star[kIn + 1 + j] = trng.uniform(-1.0, 1.0);  // W2

  Rng mrng(derive_seed(seed, "toy-feature-map"));
  inst.feature_map.resize(kFeat * kIn);
  for (auto& m : inst.feature_map) m = mrng.uniform(-0.7, 0.7);

  const int n_light = 5, n_heavy = 3;
  Rng irng(derive_seed(seed, "toy-inputs"));
  std::vector<std::vector<double>> perturb;
  for (int i = 0; i < n_light + n_heavy; ++i) {
    ToySample s;
    s.heavy = i >= n_light;
    s.input.resize(kIn);
    for (int p = 0; p < kIn; ++p)
      s.input[p] = 0.5 + 0.3 * std::sin(6.283185307179586 * (p / 16.0 + i / 8.0));
    std::vector<double> eps(kIn);
    double amp = s.heavy ? 0.30 : 0.05;
    for (int p = 0; p < kIn; ++p) eps[p] = irng.uniform(-amp, amp);
    perturb.push_back(std::move(eps));
    inst.samples.push_back(std::move(s));
    if (i >= n_light) inst.heavy_indices.push_back(i);
  }

  // rescale heavy perturbations to exactly 6x the light mean magnitude, so
  // heavy stays >= 2x the whole-set mean whatever the draws were
  double light_mean = 0.0, heavy_mean = 0.0;
  for (int i = 0; i < n_light; ++i)
    for (double e : perturb[i]) light_mean += std::fabs(e);
  light_mean /= n_light * kIn;
  for (int i = n_light; i < n_light + n_heavy; ++i)
    for (double e : perturb[i]) heavy_mean += std::fabs(e);
  heavy_mean /= n_heavy * kIn;
  double rescale = 6.0 * light_mean / heavy_mean;
  for (int i = 0; i < n_light + n_heavy; ++i) {
    double f = i >= n_light ? rescale : 1.0;
    double mag = 0.0;
    for (int p = 0; p < kIn; ++p) {
      inst.samples[i].input[p] += f * perturb[i][p];
      mag += std::fabs(f * perturb[i][p]);
    }
    inst.samples[i].perturb_mag = mag / kIn;
  }

  for (size_t i = 0; i < inst.samples.size(); ++i)
    inst.samples[i].target = toy_forward(inst, inst.theta_star, static_cast<int>(i));
  return inst;
}

std::vector<double> toy_forward(const ToyInstance& inst, const std::vector<double>& theta,
                                int sample) {
  if (theta.size() != static_cast<size_t>(kP)) throw ShapeError("toy_forward: bad theta size");
  Activation a = activation(inst, theta, sample);
  const double* w2 = w2_of(theta);
  std::vector<double> f(kIn);
  for (int j = 0; j < kIn; ++j) f[j] = w2[j] * a.h;
  return f;
}

double toy_content_loss(const ToyInstance& inst, const std::vector<double>& theta) {
  double s = 0.0;
  for (int i : inst.heavy_indices) {
    std::vector<double> r = residual(inst, theta, i);
    std::vector<double> mr(kFeat, 0.0);
    for (int a = 0; a < kFeat; ++a)
      for (int j = 0; j < kIn; ++j) mr[a] += inst.feature_map[a * kIn + j] * r[j];
    for (double x : mr) s += x * x;
  }
  return s / inst.heavy_indices.size();
}

double toy_mse_loss(const ToyInstance& inst, const std::vector<double>& theta) {
  double s = 0.0;
  for (size_t i = 0; i < inst.samples.size(); ++i) {
    std::vector<double> r = residual(inst, theta, static_cast<int>(i));
    for (double x : r) s += x * x;
  }
  return s / inst.samples.size();
}

double toy_joint_loss(const ToyInstance& inst, const std::vector<double>& theta) {
  return toy_content_loss(inst, theta) + inst.lambda * toy_mse_loss(inst, theta);
}

std::vector<double> toy_content_grad(const ToyInstance& inst, const std::vector<double>& theta) {
  std::vector<double> g(kP, 0.0);
  double c = 2.0 / inst.heavy_indices.size();
  for (int i : inst.heavy_indices) {
    std::vector<double> r = residual(inst, theta, i);
    accumulate_pullback(inst, theta, i, feature_pullback(inst, r), c, g);
  }
  return g;
}

std::vector<double> toy_mse_grad(const ToyInstance& inst, const std::vector<double>& theta) {
  std::vector<double> g(kP, 0.0);
  double c = 2.0 / inst.samples.size();
  for (size_t i = 0; i < inst.samples.size(); ++i)
    accumulate_pullback(inst, theta, static_cast<int>(i),
                        residual(inst, theta, static_cast<int>(i)), c, g);
  return g;
}

std::vector<double> toy_joint_grad(const ToyInstance& inst, const std::vector<double>& theta) {
  std::vector<double> g = toy_content_grad(inst, theta);
  std::vector<double> m = toy_mse_grad(inst, theta);
  for (int k = 0; k < kP; ++k) g[k] += inst.lambda * m[k];
  return g;
}

double toy_jacobian_norm(const ToyInstance& inst, const std::vector<double>& theta,
                         bool heavy_only) {
  // |Ji|_F^2 = 16 h^2 + g^2 |W2|^2 (|I|^2 + 1), summed over the set
  const double* w2 = w2_of(theta);
  double w2sq = 0.0;
  for (int j = 0; j < kIn; ++j) w2sq += w2[j] * w2[j];
  double total = 0.0;
  for (size_t i = 0; i < inst.samples.size(); ++i) {
    if (heavy_only && !inst.samples[i].heavy) continue;
    Activation a = activation(inst, theta, static_cast<int>(i));
    double insq = 0.0;
    for (double x : inst.samples[i].input) insq += x * x;
    total += kIn * a.h * a.h + a.g * a.g * w2sq * (insq + 1.0);
  }
  return std::sqrt(total);
}

double toy_residual_norm(const ToyInstance& inst, const std::vector<double>& theta,
                         bool heavy_only) {
  double total = 0.0;
  for (size_t i = 0; i < inst.samples.size(); ++i) {
    if (heavy_only && !inst.samples[i].heavy) continue;
    std::vector<double> r = residual(inst, theta, static_cast<int>(i));
    for (double x : r) total += x * x;
  }
  return std::sqrt(total);
}

std::string to_string(SolutionClass c) {
  switch (c) {
    case SolutionClass::BothStationary: return "both-stationary";
    case SolutionClass::HeavyGlobalAllStationary: return "heavy-global-all-stationary";
    case SolutionClass::AllGlobalHeavyStationary: return "all-global-heavy-stationary";
    case SolutionClass::BothGlobal: return "both-global";
    case SolutionClass::Unclassified: return "unclassified";
  }
  return "unclassified";
}

ClassifyResult classify_solution(const ToyInstance& inst, const std::vector<double>& theta,
                                 double grad_tol, double resid_tol) {
  ClassifyResult res;
  res.jac_all = toy_jacobian_norm(inst, theta, false);
  res.jac_heavy = toy_jacobian_norm(inst, theta, true);
  res.resid_all = toy_residual_norm(inst, theta, false);
  res.resid_heavy = toy_residual_norm(inst, theta, true);
  bool ja = res.jac_all <= grad_tol, jh = res.jac_heavy <= grad_tol;
  bool ra = res.resid_all <= resid_tol, rh = res.resid_heavy <= resid_tol;
  // most specific pattern first; both-global requires both residuals zero
  if (ra && rh)
    res.cls = SolutionClass::BothGlobal;
  else if (ja && rh)
    res.cls = SolutionClass::HeavyGlobalAllStationary;
  else if (ra && jh)
    res.cls = SolutionClass::AllGlobalHeavyStationary;
  else if (ja && jh)
    res.cls = SolutionClass::BothStationary;
  else
    res.cls = SolutionClass::Unclassified;
  return res;
}

InterferencePoint find_interference_stationary(const ToyInstance& inst, uint64_t seed,
                                               const SearchBudget& budget) {
  InterferencePoint best;
  for (int restart = 0; restart < budget.restarts; ++restart) {
    Rng rng(derive_seed(seed, "search-restart", restart));
    std::vector<double> theta(kP);
    for (auto& t : theta) t = rng.uniform(-1.5, 1.5);

    std::vector<double> r = toy_joint_grad(inst, theta);
    double rn = vec_norm(r);
    double mu = 1e-3;
    for (int step = 0; step < budget.max_steps && rn > 1e-12; ++step) {
      std::vector<double> H = fd_hessian(inst, theta);
      // normal equations (Ht H + mu I) delta = -Ht r
      std::vector<double> A(kP * kP, 0.0), b(kP, 0.0);
      for (int i = 0; i < kP; ++i) {
        for (int j = 0; j < kP; ++j) {
          double s = 0.0;
          for (int k = 0; k < kP; ++k) s += H[i * kP + k] * H[j * kP + k];
          A[i * kP + j] = s;
        }
        A[i * kP + i] += mu;
        double s = 0.0;
        for (int k = 0; k < kP; ++k) s += H[i * kP + k] * r[k];
        b[i] = -s;
      }
      std::vector<double> delta;
      if (!solve_linear(std::move(A), std::move(b), kP, delta)) break;
      std::vector<double> trial(kP);
      for (int k = 0; k < kP; ++k) trial[k] = theta[k] + delta[k];
      std::vector<double> rt = toy_joint_grad(inst, trial);
      double rtn = vec_norm(rt);
      if (rtn < rn) {
        theta = std::move(trial);
        r = std::move(rt);
        rn = rtn;
        mu = std::max(mu / 3.0, 1e-12);
      } else {
        mu *= 10.0;
        if (mu > 1e14) break;
      }
    }

    if (rn > 1e-6) continue;
    double cn = vec_norm(toy_content_grad(inst, theta));
    double mn = vec_norm(toy_mse_grad(inst, theta));
    if (cn < 1e-2 || mn < 1e-2) continue;
    if (!best.found || rn < best.joint_grad_norm) {
      best.found = true;
      best.theta = theta;
      best.joint_grad_norm = rn;
      best.content_grad_norm = cn;
      best.mse_grad_norm = mn;
      best.restart_index = restart;
    }
  }
  return best;
}

ScheduleResult run_schedule(const ToyInstance& inst, ScheduleKind kind,
                            const std::vector<double>& theta0, int steps,
                            const ScheduleParams& params) {
  if (theta0.size() != static_cast<size_t>(kP)) throw ShapeError("run_schedule: bad theta size");
  if (steps < 0) throw ParamError("run_schedule: steps must be >= 0");
  ScheduleResult res;
  std::vector<double> theta = theta0;
  for (int t = 0; t < steps; ++t) {
    std::vector<double> g;
    double lr;
    if (kind == ScheduleKind::Joint) {
      g = toy_joint_grad(inst, theta);
      lr = params.lr_joint;
    } else if (t % (params.cycles + 1) < params.cycles) {
      g = toy_content_grad(inst, theta);
      lr = params.lr_fast;
    } else {
      g = toy_mse_grad(inst, theta);
      lr = params.lr_slow;
    }
    for (int k = 0; k < kP; ++k) theta[k] -= lr * g[k];
    ScheduleStep rec;
    rec.content = toy_content_loss(inst, theta);
    rec.mse = toy_mse_loss(inst, theta);
    rec.joint = rec.content + inst.lambda * rec.mse;
    double d = 0.0;
    for (int k = 0; k < kP; ++k) d += (theta[k] - theta0[k]) * (theta[k] - theta0[k]);
    rec.delta_from_start = std::sqrt(d);
    res.trace.push_back(rec);
  }
  res.final_theta = std::move(theta);
  res.final_class = classify_solution(inst, res.final_theta);
  return res;
}

}  // namespace rainlab
