#include "kvdpc/harness.hpp"

#include "kvdpc/analytic_velocity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <set>

namespace kvdpc {

std::string to_string(Variant v)
{
  return v == Variant::vkdpc ? "vkdpc" : "vnmpc";
}

Variant variant_from_string(const std::string & name)
{
  if (name == "vkdpc") { return Variant::vkdpc; }
  if (name == "vnmpc") { return Variant::vnmpc; }
  throw ConfigError("unknown controller variant '" + name + "' (expected vkdpc or vnmpc)");
}

namespace {

ReferenceMap pendulum_reference_map(const PendulumParams & params)
{
  return [params](double y_r) {
    Vec x_r(2);
    x_r << 0.0, y_r;
    Vec u_r(1);
    u_r << params.equilibrium_input(y_r);
    return std::make_pair(x_r, u_r);
  };
}

std::shared_ptr<const VelocityModel> variant_model(
  const Scenario & scenario, Variant variant, const std::shared_ptr<const VelocityKernelModel> & model)
{
  if (variant == Variant::vnmpc) { return std::make_shared<AnalyticVelocityModel>(scenario.plant); }
  if (!model) { throw ConfigError("vkdpc requires a fitted kernel model"); }
  return model;
}

std::shared_ptr<TerminalCache> make_cache(const Scenario & scenario, std::shared_ptr<const VelocityModel> model)
{
  const ReferenceMap map = pendulum_reference_map(scenario.plant);
  const ControllerConfig cfg = scenario.controller;
  return std::make_shared<TerminalCache>([model = std::move(model), map, cfg](double y_r) {
    const auto [x_r, u_r] = map(y_r);
    return synthesize_terminal(*model, x_r, u_r, y_r, cfg.Q, cfg.R, cfg.Z, cfg.dU);
  });
}

}  // namespace

SimulationLog run_closed_loop(
  const Scenario & scenario, Variant variant, std::shared_ptr<const VelocityKernelModel> model,
  std::shared_ptr<TerminalCache> cache)
{
  const auto vmodel = variant_model(scenario, variant, model);
  if (!cache) { cache = make_cache(scenario, vmodel); }
  Controller ctrl(vmodel, scenario.controller, pendulum_reference_map(scenario.plant), cache);

  SimulationLog log;
  log.variant = variant;
  log.records.reserve(static_cast<std::size_t>(std::max(0L, scenario.duration)));
  Vec x = scenario.x0;
  Vec y_prev(1);
  y_prev << x(1);  // steady start: y_{-1} = y_0
  for (long k = 0; k < scenario.duration; ++k) {
    const double y_r = scenario.reference_at(k);
    ControlOutput out;
    try {
      out = ctrl.control_update(x, y_prev, y_r);
    } catch (const SolverError & e) {
      throw SimulationError(k, e.what());
    }
    const double d = scenario.disturbance.at(k);
    const PlantStep ps = pendulum_step(scenario.plant, x, out.u(0), d);

    StepRecord rec;
    rec.k = k;
    rec.x = x;
    rec.u = out.u(0);
    rec.du = out.du0(0);
    rec.y = ps.y;
    rec.y_r = y_r;
    rec.d = d;
    rec.V = out.report.cost;
    rec.iters = out.report.sqp_iterations;
    rec.converged = out.report.converged;
    rec.terminal_active = out.report.terminal_active;
    rec.wall_time = out.report.wall_time;
    rec.z0 = out.z0;
    rec.constraint_violation =
      std::max(scenario.controller.Z.max_violation(out.z0), scenario.controller.dU.max_violation(out.du0));
    log.records.push_back(std::move(rec));
    log.reports.push_back(out.report);

    y_prev << ps.y;
    x = ps.x_next;
  }
  log.x_final = x;
  return log;
}

double replay_error(const Scenario & scenario, const SimulationLog & log)
{
  Vec x = scenario.x0;
  double worst = 0.0;
  for (const auto & rec : log.records) {
    worst = std::max(worst, (x - rec.x).cwiseAbs().maxCoeff());
    x = pendulum_step(scenario.plant, x, rec.u, rec.d).x_next;
  }
  if (log.x_final.size() == x.size()) { worst = std::max(worst, (x - log.x_final).cwiseAbs().maxCoeff()); }
  return worst;
}

Metrics compute_metrics(const SimulationLog & log, const Scenario & scenario)
{
  Metrics m;
  m.variant = log.variant;
  m.steps = static_cast<long>(log.records.size());
  if (log.records.empty()) { return m; }

  std::set<long> cuts;
  for (const auto & r : scenario.references) { cuts.insert(r.start_step); }
  for (const auto & s : scenario.disturbance.segments()) { cuts.insert(s.start_step); }
  std::vector<long> starts;
  for (long c : cuts) {
    if (c >= 0 && c < m.steps) { starts.push_back(c); }
  }
  if (starts.empty() || starts.front() != 0) { starts.insert(starts.begin(), 0); }
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const long end = (i + 1 < starts.size() ? starts[i + 1] : m.steps) - 1;
    const auto & rec = log.records[static_cast<std::size_t>(end)];
    m.segments.push_back({starts[i], end, rec.y_r, rec.d, std::abs(rec.y - rec.y_r)});
  }

  double iter_sum = 0.0;
  double wall_sum = 0.0;
  for (const auto & rec : log.records) {
    iter_sum += rec.iters;
    m.max_iters = std::max(m.max_iters, rec.iters);
    m.nonconverged_steps += rec.converged ? 0 : 1;
    wall_sum += rec.wall_time;
    m.max_wall_time = std::max(m.max_wall_time, rec.wall_time);
    m.max_constraint_violation = std::max(m.max_constraint_violation, rec.constraint_violation);
    m.terminal_active_steps += rec.terminal_active ? 1 : 0;
  }
  m.mean_iters = iter_sum / static_cast<double>(m.steps);
  m.mean_wall_time = wall_sum / static_cast<double>(m.steps);

  const Mat & Q = scenario.controller.Q;
  for (std::size_t k = 0; k + 1 < log.records.size(); ++k) {
    const auto & a = log.records[k];
    const auto & b = log.records[k + 1];
    const bool quiet = a.d == 0.0 && (k == 0 || log.records[k - 1].d == 0.0);
    if (!quiet || a.y_r != b.y_r || a.terminal_active) { continue; }
    Vec r = Vec::Zero(a.z0.size());
    r(0) = a.y_r;
    const Vec e = a.z0 - r;
    ++m.descent_steps;
    if (b.V - a.V > -e.dot(Q * e) + 1e-3 * (1.0 + a.V)) { ++m.descent_violations; }
  }
  if (m.descent_steps > 0) {
    m.descent_violation_fraction = static_cast<double>(m.descent_violations) / static_cast<double>(m.descent_steps);
  }
  return m;
}

double max_output_deviation(const SimulationLog & a, const SimulationLog & b)
{
  if (a.records.size() != b.records.size()) { throw DimensionError("compare: logs differ in length"); }
  double worst = 0.0;
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    worst = std::max(worst, std::abs(a.records[k].y - b.records[k].y));
  }
  return worst;
}

Dataset make_training_data(const Scenario & scenario)
{
  const auto u = generate_excitation(scenario.excitation, scenario.identification.train_samples, scenario.train_seed());
  return collect_dataset(scenario.plant, u, scenario.x0, DisturbanceProfile());
}

Dataset make_validation_data(const Scenario & scenario)
{
  const auto u =
    generate_excitation(scenario.excitation, scenario.identification.validation_samples, scenario.validation_seed());
  return collect_dataset(scenario.plant, u, scenario.x0, DisturbanceProfile());
}

FitResult fit_from_data(const Scenario & scenario, const Dataset & data)
{
  const auto [cxu, cx] = select_centers(data, scenario.identification.center_stride);
  const auto bundle = build_regressors(data, scenario.kernel, cxu, cx);
  return fit_velocity_model(bundle, scenario.identification.ridge);
}

namespace {

double worst_scheduled_slack(
  const SimulationLog & log, const VelocityModel & model, TerminalCache & cache, const Scenario & scenario)
{
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto & rec : log.records) {
    const auto ti = cache.get(rec.y_r);
    Vec p(3);
    p << rec.x, rec.u;
    worst = std::max(worst, scheduled_lyapunov_slack(model, {p}, *ti, scenario.controller.Q, scenario.controller.R));
  }
  return log.records.empty() ? 0.0 : worst;
}

}  // namespace

ComparisonRun run_comparison(const Scenario & scenario, const ComparisonOptions & opts)
{
  scenario.validate();
  ComparisonRun run;
  run.train = make_training_data(scenario);
  run.validation_data = make_validation_data(scenario);

  if (opts.model) {
    run.fit.model = opts.model;
  } else {
    const auto t0 = std::chrono::steady_clock::now();
    run.fit = fit_from_data(scenario, run.train);
    run.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  const auto kmodel = run.fit.model;
  run.validation = validate_open_loop(*kmodel, run.validation_data, scenario.identification.validation_horizon);

  const auto amodel = std::make_shared<AnalyticVelocityModel>(scenario.plant);
  auto cache_k = make_cache(scenario, kmodel);
  auto cache_a = make_cache(scenario, amodel);
  const double y_fig = scenario.references.front().y_r;
  run.terminal_kernel = *cache_k->get(y_fig);
  run.terminal_analytic = *cache_a->get(y_fig);
  run.certificate_kernel = check_terminal_conditions(run.terminal_kernel, scenario.controller.Q, scenario.controller.R);
  run.certificate_analytic = check_terminal_conditions(run.terminal_analytic, scenario.controller.Q, scenario.controller.R);
  run.terminal_hausdorff = hausdorff_distance(run.terminal_kernel.Z_T, run.terminal_analytic.Z_T);
  run.terminal_diameter = diameter(run.terminal_analytic.Z_T);

  auto sim = [&](Variant v) {
    return run_closed_loop(scenario, v, kmodel, v == Variant::vkdpc ? cache_k : cache_a);
  };
  if (opts.parallel) {
    auto fk = std::async(std::launch::async, sim, Variant::vkdpc);
    auto fa = std::async(std::launch::async, sim, Variant::vnmpc);
    run.log_vkdpc = fk.get();
    run.log_vnmpc = fa.get();
  } else {
    run.log_vkdpc = sim(Variant::vkdpc);
    run.log_vnmpc = sim(Variant::vnmpc);
  }
  run.metrics_vkdpc = compute_metrics(run.log_vkdpc, scenario);
  run.metrics_vnmpc = compute_metrics(run.log_vnmpc, scenario);
  run.output_deviation = max_output_deviation(run.log_vkdpc, run.log_vnmpc);
  run.scheduled_slack_vkdpc = worst_scheduled_slack(run.log_vkdpc, *kmodel, *cache_k, scenario);
  run.scheduled_slack_vnmpc = worst_scheduled_slack(run.log_vnmpc, *amodel, *cache_a, scenario);
  return run;
}

}  // namespace kvdpc
