#pragma once

#include "kvdpc/plant.hpp"
#include "kvdpc/velocity_model.hpp"

namespace kvdpc {

struct PendulumGradients
{
  Mat dfdx;  ///< 2 x 2
  Mat dfdu;  ///< 2 x 1
  Mat dhdx;  ///< 1 x 2
};

/// Exact Jacobians of the pendulum map.
PendulumGradients analytic_gradients(const PendulumParams & params, const Vec & x, double u);

/// Velocity-form matrices of the pendulum with the scheduling point taken at
/// the current sample (x~ = x_k, u~ = u_k).
VelocityMatrices analytic_velocity_matrices(const PendulumParams & params, const Vec & x, double u);

class AnalyticVelocityModel final : public VelocityModel
{
public:
  explicit AnalyticVelocityModel(PendulumParams params) : params_(params) {}

  ModelDims dims() const override { return {2, 1, 1}; }
  VelocityMatrices matrices(const Vec & x, const Vec & u) const override;

  const PendulumParams & params() const { return params_; }

private:
  PendulumParams params_;
};

}  // namespace kvdpc
