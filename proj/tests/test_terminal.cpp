#include "kvdpc/analytic_velocity.hpp"
#include "kvdpc/optim.hpp"
#include "kvdpc/terminal.hpp"

#include "support.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

using namespace kvdpc;
using kvdpc::test::max_abs;
using kvdpc::test::random_matrix;

namespace {

struct PendulumSetup
{
  PendulumParams params;
  AnalyticVelocityModel model{params};
  Mat Q = 1000.0 * Mat::Identity(3, 3);
  Mat R = 10.0 * Mat::Identity(1, 1);
  Polytope Z = Polytope::symmetric_box(Vec::Constant(3, 2.0));
  Polytope dU = Polytope::symmetric_box(Vec::Constant(1, 2.0));

  TerminalIngredients at(double y_r) const
  {
    Vec x_r(2);
    x_r << 0.0, y_r;
    const Vec u_r = Vec::Constant(1, params.equilibrium_input(y_r));
    return synthesize_terminal(model, x_r, u_r, y_r, Q, R, Z, dU);
  }
};

}  // namespace

TEST_CASE("cost and gain come straight from the Riccati solver")
{
  std::mt19937_64 rng(8);
  const Mat A = random_matrix(rng, 3, 3);
  const Mat B = random_matrix(rng, 3, 1);
  const Mat Q = Mat::Identity(3, 3);
  const Mat R = Mat::Identity(1, 1);
  const auto cg = compute_terminal_cost_gain(A, B, Q, R);
  const auto ref = optim::solve_dare(A, B, Q, R);
  CHECK(cg.P == ref.P);
  CHECK(cg.K == ref.K);
  CHECK(lyapunov_slack(A + B * cg.K, cg.P, Q, R, cg.K) <= 1e-8 * (1.0 + cg.P.norm()));

  CHECK_THROWS_AS(compute_terminal_cost_gain(A, B, Mat::Zero(3, 3), R), ConfigError);
  CHECK_THROWS_AS(compute_terminal_cost_gain(A, B, Q, Mat::Identity(2, 2)), DimensionError);
}

TEST_CASE("scaling both weights scales P and keeps K")
{
  std::mt19937_64 rng(9);
  const Mat A = random_matrix(rng, 3, 3);
  const Mat B = random_matrix(rng, 3, 1);
  const Mat Q = Mat::Identity(3, 3);
  const Mat R = 2.0 * Mat::Identity(1, 1);
  const auto a = compute_terminal_cost_gain(A, B, Q, R);
  const auto b = compute_terminal_cost_gain(A, B, 7.0 * Q, 7.0 * R);
  CHECK(max_abs(b.P - 7.0 * a.P) <= 1e-8 * a.P.norm() * 7.0);
  CHECK(max_abs(b.K - a.K) <= 1e-8);
}

TEST_CASE("pendulum terminal ingredients satisfy the terminal conditions")
{
  const PendulumSetup s;
  const auto ti = s.at(0.5);
  CHECK(ti.r(0) == 0.5);
  CHECK(ti.r.tail(2).isZero());
  CHECK(ti.A_cl.isApprox(ti.A_ref + ti.B_ref * ti.K));
  CHECK(spectral_radius(ti.A_cl) < 1.0);
  CHECK(lyapunov_slack(ti.A_cl, ti.P, s.Q, s.R, ti.K) <= 1e-8);

  const auto rep = check_terminal_conditions(ti, s.Q, s.R);
  INFO(rep.summary());
  CHECK(rep.ok());
  CHECK(rep.points_checked >= 200);
  CHECK(rep.slack_a <= 1e-8);
  CHECK(rep.slack_b <= 1e-8);
  CHECK(rep.slack_c <= 1e-8);

  // Z_T is a subset of the shifted state constraints and contains the origin.
  CHECK(ti.Z_T.subset_of(ti.Z_shift));
  CHECK(ti.Z_T.contains(Vec::Zero(3)));
}

TEST_CASE("an inflated terminal set fails with a witness")
{
  const PendulumSetup s;
  auto ti = s.at(0.5);
  ti.Z_T = ti.Z_T.scaled(3.0);
  const auto rep = check_terminal_conditions(ti, s.Q, s.R);
  REQUIRE_FALSE(rep.ok());
  bool set_condition = false;
  for (const auto & v : rep.violations) {
    if (v.condition == 'a' || v.condition == 'b' || v.condition == 'c') {
      set_condition = true;
      CHECK(v.witness.size() == 3);
      CHECK(v.slack > 1e-8);
    }
  }
  CHECK(set_condition);
  CHECK(rep.summary().find("violated") != std::string::npos);
}

TEST_CASE("a zero gain on the marginal velocity model breaks the Lyapunov condition")
{
  const PendulumSetup s;
  auto ti = s.at(0.5);
  ti.K = Mat::Zero(1, 3);
  ti.A_cl = ti.A_ref;
  const auto rep = check_terminal_conditions(ti, s.Q, s.R);
  bool has_d = false;
  for (const auto & v : rep.violations) { has_d = has_d || v.condition == 'd'; }
  CHECK(has_d);
  CHECK(rep.slack_d > 0.0);
}

TEST_CASE("scheduled slack at the reference point equals the frozen slack")
{
  const PendulumSetup s;
  const auto ti = s.at(0.5);
  Vec rho(3);
  rho << ti.x_r, ti.u_r;
  const double frozen = lyapunov_slack(ti.A_cl, ti.P, s.Q, s.R, ti.K);
  CHECK(scheduled_lyapunov_slack(s.model, {rho}, ti, s.Q, s.R) == doctest::Approx(frozen).epsilon(1e-12));
}

TEST_CASE("cache builds each reference once")
{
  const PendulumSetup s;
  std::atomic<int> calls{0};
  TerminalCache cache([&](double y_r) {
    ++calls;
    return s.at(y_r);
  });
  const auto a = cache.get(0.5);
  const auto b = cache.get(0.5);
  CHECK(a == b);
  CHECK(calls == 1);
  CHECK(cache.size() == 1);
  cache.get(-0.3);
  CHECK(cache.size() == 2);

  std::vector<std::thread> pool;
  std::vector<std::shared_ptr<const TerminalIngredients>> seen(4);
  for (int i = 0; i < 4; ++i) {
    pool.emplace_back([&, i] { seen[i] = cache.get(0.0); });
  }
  for (auto & t : pool) { t.join(); }
  for (const auto & p : seen) { CHECK(p == seen.front()); }
  CHECK(cache.size() == 3);
}
