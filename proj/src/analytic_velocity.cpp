#include "kvdpc/analytic_velocity.hpp"

#include "kvdpc/error.hpp"

#include <cmath>

namespace kvdpc {

PendulumGradients analytic_gradients(const PendulumParams & p, const Vec & x, double /*u*/)
{
  require_dims(x.size() == 2, "analytic_gradients: state must have two entries");
  const double ts = p.ts();
  const double j = p.inertia();
  PendulumGradients g{Mat(2, 2), Mat(2, 1), Mat(1, 2)};
  g.dfdx << 1.0 - p.friction() * ts / j, -p.mass() * p.length() * p.gravity() * ts / (2.0 * j) * std::cos(x(1)),
    ts, 1.0;
  g.dfdu << ts / j, 0.0;
  g.dhdx << 0.0, 1.0;
  return g;
}

VelocityMatrices analytic_velocity_matrices(const PendulumParams & params, const Vec & x, double u)
{
  const PendulumGradients g = analytic_gradients(params, x, u);
  VelocityMatrices out{Mat::Zero(3, 3), Mat::Zero(3, 1), Mat::Zero(1, 3)};
  out.A(0, 0) = 1.0;
  out.A.block(0, 1, 1, 2) = g.dhdx;
  out.A.block(1, 1, 2, 2) = g.dfdx;
  out.B.block(1, 0, 2, 1) = g.dfdu;
  out.C = out.A.topRows(1);
  return out;
}

VelocityMatrices AnalyticVelocityModel::matrices(const Vec & x, const Vec & u) const
{
  require_dims(x.size() == 2 && u.size() == 1, "analytic model: scheduling point has wrong dimensions");
  return analytic_velocity_matrices(params_, x, u(0));
}

}  // namespace kvdpc
