#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "rainlab/analysis.hpp"

using namespace rainlab;

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> central_fd(const ToyInstance& inst,
                               double (*f)(const ToyInstance&, const std::vector<double>&),
                               std::vector<double> theta, double h = 1e-6) {
  std::vector<double> g(theta.size());
  for (size_t i = 0; i < theta.size(); ++i) {
    double keep = theta[i];
    theta[i] = keep + h;
    double hi = f(inst, theta);
    theta[i] = keep - h;
    double lo = f(inst, theta);
    theta[i] = keep;
    g[i] = (hi - lo) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("toy instances are reproducible bit for bit") {
  ToyInstance a = build_toy_instance(7);
  ToyInstance b = build_toy_instance(7);
  CHECK(a.theta_star == b.theta_star);
  CHECK(a.feature_map == b.feature_map);
  REQUIRE(a.samples.size() == b.samples.size());
  for (size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].input == b.samples[i].input);
    CHECK(a.samples[i].target == b.samples[i].target);
    CHECK(a.samples[i].heavy == b.samples[i].heavy);
  }
  ToyInstance c = build_toy_instance(8);
  CHECK(a.theta_star != c.theta_star);
}

TEST_CASE("instance layout") {
  ToyInstance inst = build_toy_instance(3);
  CHECK(static_cast<int>(inst.theta_star.size()) == kToyParamCount);
  CHECK(inst.samples.size() == 8);
  CHECK(inst.heavy_indices.size() == 3);
  for (int i : inst.heavy_indices) CHECK(inst.samples[i].heavy);
  CHECK(inst.lambda == 1.0);
}

TEST_CASE("heavy samples are perturbed at least twice as hard as the average") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    ToyInstance inst = build_toy_instance(seed);
    double whole = 0.0, heavy = 0.0;
    int nh = 0;
    for (const auto& s : inst.samples) {
      whole += s.perturb_mag;
      if (s.heavy) {
        heavy += s.perturb_mag;
        ++nh;
      }
    }
    whole /= inst.samples.size();
    heavy /= nh;
    CHECK(heavy >= 2.0 * whole);
  }
}

TEST_CASE("targets are generated by the planted parameters") {
  ToyInstance inst = build_toy_instance(11);
  for (size_t i = 0; i < inst.samples.size(); ++i) {
    std::vector<double> out = toy_forward(inst, inst.theta_star, static_cast<int>(i));
    CHECK(out == inst.samples[i].target);
  }
  CHECK(toy_content_loss(inst, inst.theta_star) == 0.0);
  CHECK(toy_mse_loss(inst, inst.theta_star) == 0.0);
  CHECK(toy_joint_loss(inst, inst.theta_star) == 0.0);
}

TEST_CASE("planted parameters classify as globally optimal for both objectives") {
  ToyInstance inst = build_toy_instance(13);
  ClassifyResult r = classify_solution(inst, inst.theta_star);
  CHECK(r.cls == SolutionClass::BothGlobal);
  CHECK(r.resid_all == 0.0);
  CHECK(r.resid_heavy == 0.0);
  CHECK(to_string(r.cls) == "both-global");
}

TEST_CASE("residual and jacobian norms respect subset ordering") {
  ToyInstance inst = build_toy_instance(17);
  std::vector<double> theta = inst.theta_star;
  for (auto& t : theta) t += 0.05;
  CHECK(toy_residual_norm(inst, theta, true) <= toy_residual_norm(inst, theta, false));
  CHECK(toy_jacobian_norm(inst, theta, true) <= toy_jacobian_norm(inst, theta, false));
  CHECK(toy_residual_norm(inst, theta, false) > 0.0);
}

TEST_CASE("analytic gradients match central differences") {
  ToyInstance inst = build_toy_instance(19);
  std::vector<double> theta = inst.theta_star;
  for (size_t i = 0; i < theta.size(); ++i) theta[i] += 0.1 * std::sin(1.0 + 3.0 * i);
  auto content_wrap = [](const ToyInstance& in, const std::vector<double>& th) {
    return toy_content_loss(in, th);
  };
  auto mse_wrap = [](const ToyInstance& in, const std::vector<double>& th) {
    return toy_mse_loss(in, th);
  };
  auto joint_wrap = [](const ToyInstance& in, const std::vector<double>& th) {
    return toy_joint_loss(in, th);
  };
  struct Case {
    std::vector<double> analytic, numeric;
  };
  Case cases[] = {
      {toy_content_grad(inst, theta), central_fd(inst, content_wrap, theta)},
      {toy_mse_grad(inst, theta), central_fd(inst, mse_wrap, theta)},
      {toy_joint_grad(inst, theta), central_fd(inst, joint_wrap, theta)},
  };
  for (const auto& c : cases) {
    REQUIRE(c.analytic.size() == c.numeric.size());
    for (size_t i = 0; i < c.analytic.size(); ++i) {
      double denom = std::max({std::fabs(c.analytic[i]), std::fabs(c.numeric[i]), 1e-3});
      CHECK(std::fabs(c.analytic[i] - c.numeric[i]) / denom <= 1e-6);
    }
  }
  // the joint gradient is the sum of its parts
  for (size_t i = 0; i < cases[2].analytic.size(); ++i)
    CHECK(std::fabs(cases[2].analytic[i] - cases[0].analytic[i] - cases[1].analytic[i]) <= 1e-12);
}

TEST_CASE("both schedules stay put at the planted optimum") {
  ToyInstance inst = build_toy_instance(23);
  ScheduleParams sp;
  for (auto kind : {ScheduleKind::Joint, ScheduleKind::Alternating}) {
    ScheduleResult r = run_schedule(inst, kind, inst.theta_star, 50, sp);
    REQUIRE(r.trace.size() == 50);
    for (const auto& step : r.trace) {
      CHECK(step.joint == 0.0);
      CHECK(step.delta_from_start == 0.0);
    }
    CHECK(r.final_theta == inst.theta_star);
    CHECK(r.final_class.cls == SolutionClass::BothGlobal);
  }
}

TEST_CASE("schedule traces record every step") {
  ToyInstance inst = build_toy_instance(29);
  std::vector<double> start = inst.theta_star;
  for (auto& t : start) t += 0.2;
  ScheduleParams sp;
  ScheduleResult r = run_schedule(inst, ScheduleKind::Joint, start, 17, sp);
  CHECK(r.trace.size() == 17);
  // from a perturbed start the joint schedule descends
  CHECK(r.trace.back().joint < toy_joint_loss(inst, start));
  CHECK(r.trace.back().delta_from_start > 0.0);
}

TEST_CASE("the certified interference point ticks every box") {
  ToyInstance inst = build_toy_instance(1);
  InterferencePoint pt = find_interference_stationary(inst, 1, SearchBudget{});
  REQUIRE(pt.found);
  CHECK(pt.joint_grad_norm <= 1e-6);
  CHECK(pt.content_grad_norm >= 1e-2);
  CHECK(pt.mse_grad_norm >= 1e-2);
  // the stored norms are re-derivable from the stored point
  CHECK(std::fabs(norm2(toy_joint_grad(inst, pt.theta)) - pt.joint_grad_norm) <= 1e-12);
  CHECK(std::fabs(norm2(toy_content_grad(inst, pt.theta)) - pt.content_grad_norm) <= 1e-12);
  CHECK(std::fabs(norm2(toy_mse_grad(inst, pt.theta)) - pt.mse_grad_norm) <= 1e-12);
  // gradients of the two objectives cancel, so the point is stationary for
  // the sum without being good for either part
  ClassifyResult cr = classify_solution(inst, pt.theta);
  CHECK(cr.cls != SolutionClass::BothGlobal);
  CHECK(cr.cls != SolutionClass::HeavyGlobalAllStationary);
  CHECK(cr.cls != SolutionClass::AllGlobalHeavyStationary);

  // the joint schedule is pinned there while the alternating one escapes
  ScheduleParams sp;
  ScheduleResult joint = run_schedule(inst, ScheduleKind::Joint, pt.theta, 100, sp);
  CHECK(joint.trace.back().delta_from_start <= 1e-6);
  ScheduleResult alt = run_schedule(inst, ScheduleKind::Alternating, pt.theta, 10, sp);
  CHECK(alt.trace.back().delta_from_start >= 1e-3);
}

TEST_CASE("the search reports failure honestly on a hopeless budget") {
  ToyInstance inst = build_toy_instance(2);
  SearchBudget tiny;
  tiny.restarts = 1;
  tiny.max_steps = 1;
  InterferencePoint pt = find_interference_stationary(inst, 2, tiny);
  // one Levenberg-Marquardt step from a random start cannot certify; either
  // outcome must be internally consistent
  if (pt.found) {
    CHECK(pt.joint_grad_norm <= 1e-6);
  } else {
    CHECK(pt.theta.empty());
  }
}

TEST_CASE("solution class names are stable") {
  CHECK(to_string(SolutionClass::BothStationary) == "both-stationary");
  CHECK(to_string(SolutionClass::HeavyGlobalAllStationary) == "heavy-global-all-stationary");
  CHECK(to_string(SolutionClass::AllGlobalHeavyStationary) == "all-global-heavy-stationary");
  CHECK(to_string(SolutionClass::BothGlobal) == "both-global");
  CHECK(to_string(SolutionClass::Unclassified) == "unclassified");
}
