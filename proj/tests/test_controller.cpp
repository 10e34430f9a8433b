#include "kvdpc/analytic_velocity.hpp"
#include "kvdpc/controller.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace kvdpc;
using kvdpc::test::max_abs;

namespace {

Vec v1(double a)
{
  return Vec::Constant(1, a);
}

Vec v2(double a, double b)
{
  Vec v(2);
  v << a, b;
  return v;
}

Vec v3(double a, double b, double c)
{
  Vec v(3);
  v << a, b, c;
  return v;
}

PendulumParams linear_pendulum()
{
  return {1.0, 1.0, 0.1, 0.0, 1.0 / 30.0};
}

TerminalIngredients ingredients_for(const VelocityModel & model, const PendulumParams & p, double y_r,
                                    const ControllerConfig & c)
{
  return synthesize_terminal(model, v2(0.0, y_r), v1(p.equilibrium_input(y_r)), y_r, c.Q, c.R, c.Z, c.dU);
}

// Terminal data with no terminal set, for unconstrained closed-form checks.
TerminalIngredients unconstrained_terminal(const VelocityMatrices & mats, const ControllerConfig & c, double y_r)
{
  TerminalIngredients ti;
  ti.y_r = y_r;
  ti.r = v3(y_r, 0.0, 0.0);
  const auto cg = compute_terminal_cost_gain(mats.A, mats.B, c.Q, c.R);
  ti.P = cg.P;
  ti.K = cg.K;
  ti.A_ref = mats.A;
  ti.B_ref = mats.B;
  ti.A_cl = mats.A + mats.B * cg.K;
  ti.Z_T = Polytope::full_space(3);
  ti.dU = c.dU;
  return ti;
}

ControllerConfig loose_config(int N)
{
  ControllerConfig c = ControllerConfig::defaults({2, 1, 1});
  c.N = N;
  c.Z = Polytope::full_space(3);
  c.dU = Polytope::full_space(1);
  return c;
}

ControllerState state_with(double u_prev)
{
  ControllerState s;
  s.u_prev = v1(u_prev);
  return s;
}

}  // namespace

TEST_CASE("warm start shifts left and repeats the tail")
{
  ScheduleSequence s{{v1(1.0), v1(2.0), v1(3.0)}};
  const auto w = shift_warm_start(s);
  REQUIRE(w.rho.size() == 3);
  CHECK(w.rho[0](0) == 2.0);
  CHECK(w.rho[1](0) == 3.0);
  CHECK(w.rho[2](0) == 3.0);
  CHECK(shift_warm_start(ScheduleSequence{}).rho.empty());
}

TEST_CASE("unconstrained first move equals the Riccati feedback")
{
  // With the Riccati terminal weight and r a fixed point of A, the finite-horizon
  // problem reproduces the infinite-horizon feedback for every horizon.
  const PendulumParams p = linear_pendulum();
  const AnalyticVelocityModel model(p);
  const auto mats = model.matrices(v2(0.0, 0.0), v1(0.0));
  for (int N : {1, 5}) {
    const ControllerConfig c = loose_config(N);
    const auto ti = unconstrained_terminal(mats, c, 0.4);
    const Vec z0 = v3(0.1, 0.02, -0.01);
    const auto res = solve_sqp(model, state_with(0.0), v2(0.0, 0.1), z0, c, ti);
    const Vec expected = ti.K * (z0 - ti.r);
    CHECK(res.du(0) == doctest::Approx(expected(0)).epsilon(1e-7));
  }
}

TEST_CASE("zero tracking weight gives zero moves")
{
  const PendulumParams p;
  const AnalyticVelocityModel model(p);
  const auto mats = model.matrices(v2(0.0, 0.0), v1(0.0));
  ControllerConfig c = loose_config(6);
  auto ti = unconstrained_terminal(mats, c, 0.4);
  c.Q.setZero();
  ti.P.setZero();
  const auto res = solve_sqp(model, state_with(0.0), v2(0.3, 0.1), v3(0.05, 0.3 / 30.0, 0.01), c, ti);
  CHECK(max_abs(res.du) <= 1e-9);
  CHECK(res.report.cost == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
}

TEST_CASE("a schedule-independent model converges on the second iteration")
{
  const PendulumParams p = linear_pendulum();
  const AnalyticVelocityModel model(p);
  ControllerConfig c = ControllerConfig::defaults(model.dims());
  const auto ti = ingredients_for(model, p, 0.5, c);
  const Vec x = v2(0.0, 0.45);
  const Vec z0 = v3(0.44, 0.0, 0.01);

  const auto res = solve_sqp(model, state_with(0.0), x, z0, c, ti);
  CHECK(res.report.converged);
  CHECK(res.report.sqp_iterations == 2);
  CHECK(res.report.schedule_residual == 0.0);

  c.eps = std::numeric_limits<double>::infinity();
  const auto once = solve_sqp(model, state_with(0.0), x, z0, c, ti);
  CHECK(once.report.sqp_iterations == 1);
  CHECK(once.report.converged);
  CHECK(max_abs(once.du - res.du) <= 1e-12);
}

TEST_CASE("resting at the reference needs no move")
{
  const PendulumParams p;
  const AnalyticVelocityModel model(p);
  const ControllerConfig c = ControllerConfig::defaults(model.dims());
  const auto ti = ingredients_for(model, p, 0.5, c);
  const auto res = solve_sqp(model, state_with(p.equilibrium_input(0.5)), v2(0.0, 0.5), v3(0.5, 0.0, 0.0), c, ti);
  CHECK(res.report.converged);
  CHECK(max_abs(res.du) <= 1e-8);
  CHECK(res.report.cost <= 1e-10);
}

TEST_CASE("predicted trajectory respects the constraints")
{
  const PendulumParams p;
  const AnalyticVelocityModel model(p);
  ControllerConfig c = ControllerConfig::defaults(model.dims());
  const auto ti = ingredients_for(model, p, 0.2, c);
  c.dU = Polytope::symmetric_box(v1(0.3));
  const Vec x = v2(0.0, 0.0);
  const auto res = solve_sqp(model, state_with(0.0), x, v3(0.0, 0.0, 0.0), c, ti);
  REQUIRE(res.report.converged);
  CHECK(res.du.cwiseAbs().maxCoeff() <= 0.3 + 1e-8);
  CHECK(res.du.cwiseAbs().maxCoeff() >= 0.3 - 1e-6);  // the bound binds
  for (const auto & z : res.z_pred) { CHECK(c.Z.max_violation(z) <= 1e-8); }
  CHECK(ti.Z_T.max_violation(res.z_pred.back() - ti.r) <= 1e-7);
}

TEST_CASE("the converged schedule is a fixed point of the rollout")
{
  const PendulumParams p;
  const AnalyticVelocityModel model(p);
  const ControllerConfig c = ControllerConfig::defaults(model.dims());
  const auto ti = ingredients_for(model, p, 0.3, c);
  const Vec x = v2(0.2, 0.1);
  const Vec z0 = v3(0.09, 0.01, 0.2 / 30.0);
  const auto res = solve_sqp(model, state_with(0.2), x, z0, c, ti);
  REQUIRE(res.report.converged);
  CHECK(res.report.schedule_residual <= c.eps);

  const auto pm = build_prediction_matrices(model, res.schedule.rho);
  const Vec z = pm.psi * z0 + pm.gamma * res.du;
  for (std::size_t j = 0; j < res.z_pred.size(); ++j) {
    CHECK(max_abs(z.segment(3 * static_cast<Eigen::Index>(j), 3) - res.z_pred[j]) <= 1e-12);
  }
  // The schedule's inputs are the cumulative moves.
  double u = 0.2;
  for (std::size_t j = 0; j < res.schedule.rho.size(); ++j) {
    u += res.du(static_cast<Eigen::Index>(j));
    CHECK(res.schedule.rho[j](2) == doctest::Approx(u).epsilon(1e-14));
  }
}

TEST_CASE("learned and analytic controllers agree on an exactly represented model")
{
  // A single center with a huge bandwidth makes every kernel section 1 to
  // working precision, so the kernel model reproduces a constant Jacobian.
  const PendulumParams p = linear_pendulum();
  const AnalyticVelocityModel analytic(p);
  const auto g = analytic_gradients(p, v2(0.0, 0.0), 0.0);
  RowMat A_alpha(2, 2);
  A_alpha << g.dfdx;
  RowMat B_alpha(2, 1);
  B_alpha << g.dfdu;
  RowMat C_alpha(1, 2);
  C_alpha << g.dhdx;
  const VelocityKernelModel learned({2, 1, 1}, KernelSpec(KernelFamily::gaussian, 1e20),
                                    CenterSet(Mat::Zero(1, 3)), CenterSet(Mat::Zero(1, 2)), A_alpha, B_alpha,
                                    C_alpha);
  const ControllerConfig c = ControllerConfig::defaults(analytic.dims());
  const auto ti = ingredients_for(analytic, p, 0.5, c);
  const Vec x = v2(0.1, 0.4);
  const Vec z0 = v3(0.39, 0.0, 0.01);
  const auto a = solve_vnmpc(analytic, state_with(0.0), x, z0, c, ti);
  const auto b = solve_vkdpc(learned, state_with(0.0), x, z0, c, ti);
  CHECK(max_abs(a.du - b.du) <= 1e-8);
  CHECK(a.report.cost == doctest::Approx(b.report.cost).epsilon(1e-10));
}

TEST_CASE("an unreachable state constraint raises a solver error")
{
  const PendulumParams p;
  const AnalyticVelocityModel model(p);
  ControllerConfig c = ControllerConfig::defaults(model.dims());
  const auto ti = ingredients_for(model, p, 0.0, c);
  c.Z = Polytope::symmetric_box(Vec::Constant(3, 0.01));
  CHECK_THROWS_AS(solve_sqp(model, state_with(0.0), v2(0.0, 0.5), v3(0.5, 0.0, 0.0), c, ti), SolverError);
}

TEST_CASE("condensed problem dimensions and softening")
{
  const PendulumParams p;
  const AnalyticVelocityModel model(p);
  ControllerConfig c = ControllerConfig::defaults(model.dims());
  c.N = 4;
  const auto ti = ingredients_for(model, p, 0.0, c);
  const std::vector<Vec> rho(4, v3(0.0, 0.0, 0.0));
  const auto pm = build_prediction_matrices(model, rho);
  const auto hard = condense_qp(pm, Vec::Zero(3), ti.r, c, ti);
  CHECK(hard.num_du == 4);
  CHECK(hard.qp.num_vars() == 4);
  CHECK(hard.terminal_row0 == 4 * c.Z.rows() + 4 * c.dU.rows());
  CHECK(hard.qp.A_in.rows() == hard.terminal_row0 + ti.Z_T.rows());

  c.terminal_slack_weight = 50.0;
  const auto soft = condense_qp(pm, Vec::Zero(3), ti.r, c, ti);
  CHECK(soft.qp.num_vars() == 5);
  CHECK(soft.qp.f(4) == 50.0);
  CHECK(soft.qp.A_in.rows() == hard.qp.A_in.rows() + 1);
  CHECK(max_abs(soft.qp.H.topLeftCorner(4, 4) - hard.qp.H) == 0.0);
}

TEST_CASE("controller object tracks its state between updates")
{
  const PendulumParams p;
  auto model = std::make_shared<AnalyticVelocityModel>(p);
  const ReferenceMap map = [p](double y_r) {
    return std::pair<Vec, Vec>{v2(0.0, y_r), v1(p.equilibrium_input(y_r))};
  };
  Controller ctl(model, ControllerConfig::defaults(model->dims()), map);
  ctl.set_initial_input(v1(0.1));

  Vec x = v2(0.0, 0.0);
  double y_prev = 0.0;
  const auto first = ctl.control_update(x, v1(y_prev), 0.2);
  CHECK(first.z0 == v3(0.0, 0.0, 0.0));
  CHECK(first.u(0) == doctest::Approx(0.1 + first.du0(0)));
  CHECK(first.report.step == 0);
  REQUIRE(ctl.state().warm_schedule.has_value());
  CHECK(ctl.state().warm_schedule->rho.size() == 20);
  CHECK_THROWS_AS(ctl.set_initial_input(v1(0.0)), ConfigError);

  const auto step = pendulum_step(p, x, first.u(0), 0.0);
  y_prev = step.y;
  const Vec x_next = step.x_next;
  const auto second = ctl.control_update(x_next, v1(y_prev), 0.2);
  CHECK(second.report.step == 1);
  CHECK(max_abs(second.z0 - v3(y_prev, x_next(0) - x(0), x_next(1) - x(1))) == 0.0);
  CHECK(ctl.state().u_prev(0) == second.u(0));

  const std::string line = second.report.to_json_line(false);
  CHECK(line.find("\"wall_time\":null") != std::string::npos);
  CHECK(line.find("\"step\":1") != std::string::npos);
}

TEST_CASE("controller rejects invalid configurations")
{
  auto model = std::make_shared<AnalyticVelocityModel>(PendulumParams{});
  const ReferenceMap map = [](double y_r) { return std::pair<Vec, Vec>{v2(0.0, y_r), v1(0.0)}; };
  ControllerConfig c = ControllerConfig::defaults(model->dims());
  c.N = 0;
  CHECK_THROWS_AS(Controller(model, c, map), ConfigError);
  c = ControllerConfig::defaults(model->dims());
  c.R = Mat::Zero(1, 1);
  CHECK_THROWS_AS(Controller(model, c, map), ConfigError);
  c = ControllerConfig::defaults(model->dims());
  c.eps = 0.0;
  CHECK_THROWS_AS(Controller(model, c, map), ConfigError);
  CHECK_THROWS_AS(Controller(nullptr, ControllerConfig::defaults({2, 1, 1}), map), ConfigError);
}
