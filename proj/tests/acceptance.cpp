// End-to-end acceptance gate: one PASS/FAIL line per criterion, non-zero exit
// if any criterion fails.

#include "kvdpc/analytic_velocity.hpp"
#include "kvdpc/artifacts.hpp"
#include "kvdpc/blas_env.hpp"
#include "kvdpc/harness.hpp"
#include "kvdpc/optim.hpp"
#include "kvdpc/polytope.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace kvdpc;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char * f, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Vec v2(double a, double b)
{
  Vec v(2);
  v << a, b;
  return v;
}

// --- 1: analytic Jacobians vs central differences --------------------------

Outcome gradient_oracle()
{
  const PendulumParams p;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> vel(-3.0, 3.0);
  std::uniform_real_distribution<double> inp(-2.0, 2.0);
  const double h = 1e-6;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Vec x = v2(vel(rng), ang(rng));
    const double u = inp(rng);
    const auto g = analytic_gradients(p, x, u);
    Mat fd(2, 3);
    for (int j = 0; j < 2; ++j) {
      Vec e = Vec::Zero(2);
      e(j) = h;
      fd.col(j) = (pendulum_step(p, x + e, u, 0.0).x_next - pendulum_step(p, x - e, u, 0.0).x_next) / (2.0 * h);
    }
    fd.col(2) = (pendulum_step(p, x, u + h, 0.0).x_next - pendulum_step(p, x, u - h, 0.0).x_next) / (2.0 * h);
    Mat exact(2, 3);
    exact << g.dfdx, g.dfdu;
    worst = std::max(worst, (fd - exact).norm() / exact.norm());
  }
  return {worst <= 1e-6, fmt("worst relative error %.2e", worst)};
}

// --- 2: interpolation regime ------------------------------------------------

Outcome interpolation_regime(const Scenario & base)
{
  const auto u = generate_excitation(base.excitation, 30, base.train_seed());
  const Dataset data = collect_dataset(base.plant, u, base.x0, DisturbanceProfile());
  Scenario s = base;
  s.identification.center_stride = 1;
  const FitResult fit = fit_from_data(s, data);
  const auto v = validate_open_loop(*fit.model, data, 20);
  const bool ok = fit.kx_residual <= 1e-8 && fit.ky_residual <= 1e-8 && v.rmse <= 1e-6;
  return {ok, fmt("residuals %.2e / %.2e, 20-step rmse %.2e", fit.kx_residual, fit.ky_residual, v.rmse)};
}

// --- 3: validation quality --------------------------------------------------

Outcome validation_band(const Scenario & base)
{
  Scenario s = base;
  s.identification.train_samples = 500;
  const FitResult fit = fit_from_data(s, make_training_data(s));
  const auto v = validate_open_loop(*fit.model, make_validation_data(s), 20);
  return {v.rmse <= 0.05, fmt("20-step rmse %.3e rad", v.rmse)};
}

// --- 4: terminal certificate at three references ----------------------------

Outcome terminal_certificate(const Scenario & s, const VelocityModel & model)
{
  const auto & c = s.controller;
  std::ostringstream os;
  bool ok = true;
  for (double y_r : {0.0, 0.5, -0.3}) {
    const auto ti = synthesize_terminal(model, v2(0.0, y_r), Vec::Constant(1, s.plant.equilibrium_input(y_r)), y_r,
                                        c.Q, c.R, c.Z, c.dU);
    const auto rep = check_terminal_conditions(ti, c.Q, c.R, 200, 1e-8);
    ok = ok && rep.ok();
    os << "y_r=" << y_r << ": " << (rep.ok() ? "ok" : rep.summary()) << " (lyapunov " << rep.slack_d << "); ";
  }
  return {ok, os.str()};
}

// --- 5: invariant set vs grid brute force -----------------------------------

Outcome invariant_set_oracle()
{
  Mat A(2, 2);
  A << 0.8, 0.5, -0.4, 0.7;
  Mat K(1, 2);
  K << 0.6, -0.3;
  const Polytope Z = Polytope::symmetric_box(v2(1.0, 1.0));
  const Polytope dU = Polytope::symmetric_box(Vec::Constant(1, 0.4));
  const auto res = max_invariant_set(A, K, Z, dU);
  const Polytope omega0 = Z.intersect(Polytope(dU.A() * K, dU.b()));

  const int n = 200;
  const double cell = 2.0 / n;
  const double slack = cell * std::sqrt(2.0);
  long inside = 0;
  long mismatched = 0;
  long far_mismatched = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec p = v2(-1.0 + (i + 0.5) * cell, -1.0 + (j + 0.5) * cell);
      Vec v = p;
      bool stays = true;
      for (int k = 0; k < 50 && stays; ++k) {
        stays = omega0.contains(v, 0.0);
        v = A * v;
      }
      const bool in_set = res.set.contains(p, 0.0);
      inside += in_set ? 1 : 0;
      if (stays == in_set) { continue; }
      ++mismatched;
      // Rows are unit-norm, so -max_violation is the distance to the boundary inside.
      const double dist = in_set ? -res.set.max_violation(p) : distance_to(res.set, p);
      if (dist > slack) { ++far_mismatched; }
    }
  }
  const bool ok = far_mismatched == 0 && inside > 0;
  std::ostringstream os;
  os << res.set.rows() << " facets after " << res.iterations << " iterations, " << inside << " grid points inside, "
     << mismatched << " boundary-cell mismatches, " << far_mismatched << " beyond one cell";
  return {ok, os.str()};
}

// --- 6: QP oracle -----------------------------------------------------------

Outcome qp_oracle()
{
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<int> nd(1, 6), md(1, 10);
  double worst_value = 0.0;
  double worst_kkt = 0.0;
  int optimal = 0;
  for (int t = 0; t < 30; ++t) {
    const int n = nd(rng);
    const int m = md(rng);
    const Mat L = test::random_matrix(rng, n, n);
    const Mat H = L * L.transpose() + 0.1 * Mat::Identity(n, n);
    const Vec f = test::random_vector(rng, n, 2.0);
    const Mat Ain = test::random_matrix(rng, m, n);
    const Vec b = test::random_vector(rng, m).cwiseAbs() + Vec::Constant(m, 0.05);
    const auto p = optim::QpProblem::make(H, f, Ain, b);
    const auto sol = optim::solve_qp(p);
    if (sol.status != optim::QpStatus::optimal) { continue; }
    ++optimal;
    Vec ref_v;
    const double ref = test::enumerate_active_sets(p, ref_v);
    const double val = 0.5 * sol.v.dot(H * sol.v) + f.dot(sol.v);
    worst_value = std::max(worst_value, std::abs(val - ref));
    worst_kkt = std::max(worst_kkt, sol.kkt_residual);
  }
  const bool ok = optimal == 30 && worst_value <= 1e-6 && worst_kkt <= 1e-6;
  return {ok, fmt("%.0f/30 optimal, worst value gap %.2e, worst KKT residual %.2e", optimal, worst_value, worst_kkt)};
}

// --- 7..11, 13: closed-loop comparison --------------------------------------

Outcome terminal_similarity(const ComparisonRun & run)
{
  const double ratio = run.terminal_hausdorff / run.terminal_diameter;
  return {ratio <= 0.1, fmt("Hausdorff %.3e, diameter %.3f, ratio %.2e", run.terminal_hausdorff,
                            run.terminal_diameter, ratio)};
}

Outcome offset_free(const ComparisonRun & run)
{
  double worst = 0.0;
  for (const auto * m : {&run.metrics_vkdpc, &run.metrics_vnmpc}) {
    for (const auto & seg : m->segments) { worst = std::max(worst, seg.abs_error); }
  }
  const double viol = std::max(run.metrics_vkdpc.max_constraint_violation, run.metrics_vnmpc.max_constraint_violation);
  const bool ok = worst <= 1e-3 && viol <= 1e-6 && !run.metrics_vkdpc.segments.empty();
  return {ok, fmt("worst segment-end error %.2e rad over %.0f segments, worst constraint violation %.2e", worst,
                  static_cast<double>(run.metrics_vkdpc.segments.size()), viol)};
}

Outcome sqp_band(const ComparisonRun & run)
{
  const auto & a = run.metrics_vkdpc;
  const auto & b = run.metrics_vnmpc;
  const bool ok = a.mean_iters >= 2.0 && a.mean_iters <= 10.0 && b.mean_iters >= 2.0 && b.mean_iters <= 10.0 &&
                  a.nonconverged_steps == 0 && b.nonconverged_steps == 0;
  return {ok, fmt("mean iterations vkdpc %.4f, vnmpc %.4f; non-converged steps %.0f / %.0f", a.mean_iters,
                  b.mean_iters, static_cast<double>(a.nonconverged_steps), static_cast<double>(b.nonconverged_steps))};
}

Outcome cross_agreement(const ComparisonRun & run)
{
  return {run.output_deviation <= 0.05, fmt("max |y_vkdpc - y_vnmpc| = %.3e rad", run.output_deviation)};
}

Outcome value_decrease(const ComparisonRun & run)
{
  const auto & a = run.metrics_vkdpc;
  const auto & b = run.metrics_vnmpc;
  const bool ok = b.descent_steps > 0 && b.descent_violation_fraction <= 0.05;
  return {ok, fmt("vnmpc %.2f%% of %.0f steps violate; vkdpc (reported) %.2f%% of %.0f", 100.0 * b.descent_violation_fraction,
                  static_cast<double>(b.descent_steps), 100.0 * a.descent_violation_fraction,
                  static_cast<double>(a.descent_steps))};
}

Outcome timing(const ComparisonRun & run)
{
  const double step = std::max(run.metrics_vkdpc.mean_wall_time, run.metrics_vnmpc.mean_wall_time);
  const bool ok = run.fit_seconds <= 20.0 && step <= 0.7;
  return {ok, fmt("fit %.2f s on %.0f samples, mean control step %.2f ms (vkdpc) / %.2f ms (vnmpc)", run.fit_seconds,
                  static_cast<double>(run.train.samples()), 1e3 * run.metrics_vkdpc.mean_wall_time,
                  1e3 * run.metrics_vnmpc.mean_wall_time)};
}

// --- 12: determinism of the compare command ---------------------------------

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism()
{
  const fs::path root = fs::temp_directory_path() / ("kvdpc_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  for (const char * run : {"a", "b"}) {
    const std::string cmd = std::string(KVDPC_CLI_PATH) + " compare -c " KVDPC_CONFIG_PATH " -o " +
                            (root / run).string() + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      fs::remove_all(root);
      return {false, std::string("compare run ") + run + " failed"};
    }
  }
  int compared = 0;
  std::string differing;
  for (const auto & entry : fs::directory_iterator(root / "a")) {
    const auto ext = entry.path().extension();
    if (ext != ".csv" && ext != ".json" && ext != ".jsonl") { continue; }
    ++compared;
    const fs::path other = root / "b" / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) { differing += entry.path().filename().string() + " "; }
  }
  fs::remove_all(root);
  const bool ok = compared >= 10 && differing.empty();
  return {ok, std::to_string(compared) + " CSV/JSON files compared" + (differing.empty() ? "" : ", differing: " + differing)};
}

}  // namespace

int main(int, char ** argv)
{
  ensure_tuned_blas(argv);
  const Scenario scenario = load_scenario(KVDPC_CONFIG_PATH);

  int failures = 0;
  auto report = [&](int id, const std::string & name, double budget_s, const std::function<Outcome()> & body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception & e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0.0 && secs > budget_s) {
      o.pass = false;
      o.detail += fmt("; runtime %.1f s exceeds %.0f s", secs, budget_s);
    }
    failures += o.pass ? 0 : 1;
    std::printf("AC%02d %s %-28s %s [%.2f s]\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  // One full comparison run feeds criteria 4, 7-11 and 13.
  ComparisonRun run;
  double comparison_seconds = 0.0;
  std::string comparison_error;
  {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      run = run_comparison(scenario);
    } catch (const std::exception & e) {
      comparison_error = e.what();
    }
    comparison_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  auto needs_run = [&](const std::function<Outcome()> & body) {
    return [&, body] { return comparison_error.empty() ? body() : Outcome{false, "comparison failed: " + comparison_error}; };
  };

  report(1, "gradient-oracle", 1.0, gradient_oracle);
  report(2, "interpolation-regime", 5.0, [&] { return interpolation_regime(scenario); });
  report(3, "validation-band", 60.0, [&] { return validation_band(scenario); });
  report(4, "terminal-certificate", 30.0, needs_run([&] { return terminal_certificate(scenario, *run.fit.model); }));
  report(5, "invariant-set-oracle", 30.0, invariant_set_oracle);
  report(6, "qp-oracle", 10.0, qp_oracle);
  report(7, "terminal-set-similarity", 60.0, needs_run([&] { return terminal_similarity(run); }));
  report(8, "offset-free-closed-loop", 0.0, needs_run([&] {
           Outcome o = offset_free(run);
           if (comparison_seconds > 300.0) {
             o.pass = false;
             o.detail += fmt("; comparison took %.0f s", comparison_seconds);
           }
           return o;
         }));
  report(9, "sqp-iteration-band", 0.0, needs_run([&] { return sqp_band(run); }));
  report(10, "cross-controller-agreement", 0.0, needs_run([&] { return cross_agreement(run); }));
  report(11, "value-decrease-diagnostic", 0.0, needs_run([&] { return value_decrease(run); }));
  report(12, "compare-determinism", 0.0, determinism);
  report(13, "timing-sanity", 0.0, needs_run([&] { return timing(run); }));

  std::printf("%d of 13 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
