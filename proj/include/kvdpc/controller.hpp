#pragma once

#include "kvdpc/optim.hpp"
#include "kvdpc/polytope.hpp"
#include "kvdpc/terminal.hpp"
#include "kvdpc/velocity_model.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kvdpc {

struct ControllerConfig
{
  int N = 20;
  Mat Q;  ///< nz x nz stage weight on z - r
  Mat R;  ///< m x m weight on du
  double eps = 1e-8;
  int max_sqp_iters = 30;
  Polytope Z;   ///< constraints on z (absolute coordinates)
  Polytope dU;  ///< constraints on du
  /// Linear penalty on a scalar terminal-set slack; 0 keeps the terminal constraint hard.
  double terminal_slack_weight = 0.0;
  optim::QpOptions qp;

  /// N = 20, Q = 1000 I, R = 10 I, |z_i| <= 2, |du| <= 2.
  static ControllerConfig defaults(const ModelDims & dims);
  void validate(const ModelDims & dims) const;
};

/// rho[j] = col(x_j, u_j), j = 0..N-1.
struct ScheduleSequence
{
  std::vector<Vec> rho;

  Vec stacked() const { return stack(rho); }
};

ScheduleSequence shift_warm_start(const ScheduleSequence & prev);

struct ControllerState
{
  Vec u_prev;
  Vec x_prev;
  Vec y_prev;
  std::optional<ScheduleSequence> warm_schedule;
};

struct SolveReport
{
  long step = 0;
  int sqp_iterations = 0;
  bool converged = false;
  double cost = 0.0;  ///< V including the fixed z_0 stage term
  std::vector<optim::QpStatus> qp_status;
  double schedule_residual = 0.0;
  double terminal_slack_used = 0.0;
  bool terminal_active = false;
  double wall_time = 0.0;  ///< seconds

  /// One JSON object on one line; `with_timing` false writes wall_time as null.
  std::string to_json_line(bool with_timing = true) const;
};

struct CondensedQp
{
  optim::QpProblem qp;
  Eigen::Index num_du = 0;   ///< N m; a trailing slack variable follows when softened
  Eigen::Index terminal_row0 = 0;  ///< first terminal-set row in qp.A_in
};

/// Decision vector is the du stack (plus a slack when softening is enabled).
/// The constant z_0 stage term is not part of the QP.
CondensedQp condense_qp(
  const PredictionMatrices & pm, const Vec & z0, const Vec & r, const ControllerConfig & config,
  const TerminalIngredients & ti);

struct SqpResult
{
  Vec du;  ///< N m stack
  ScheduleSequence schedule;
  std::vector<Vec> z_pred;  ///< z_1..z_N from the final rollout
  SolveReport report;
};

/// Sequential QP: solve at a frozen schedule, roll out, repeat until the schedule settles.
SqpResult solve_sqp(
  const VelocityModel & model, const ControllerState & state, const Vec & x_k, const Vec & z0,
  const ControllerConfig & config, const TerminalIngredients & ti);

/// Learned-model controller.
SqpResult solve_vkdpc(
  const VelocityKernelModel & model, const ControllerState & state, const Vec & x_k, const Vec & z0,
  const ControllerConfig & config, const TerminalIngredients & ti);

/// Analytic-model baseline.
SqpResult solve_vnmpc(
  const VelocityModel & analytic, const ControllerState & state, const Vec & x_k, const Vec & z0,
  const ControllerConfig & config, const TerminalIngredients & ti);

/// Steady-state point (x_r, u_r) for a scalar output reference.
using ReferenceMap = std::function<std::pair<Vec, Vec>(double y_r)>;

struct ControlOutput
{
  Vec u;
  Vec du0;
  SolveReport report;
  std::vector<Vec> z_pred;
  Vec z0;
};

/// Owns the warm start between calls; strictly sequential.
class Controller
{
public:
  Controller(
    std::shared_ptr<const VelocityModel> model, ControllerConfig config, ReferenceMap reference_map,
    std::shared_ptr<TerminalCache> cache = nullptr);

  /// Measurement is (x_k, y_{k-1}). On the first call the previous state is
  /// taken equal to x_k and y_{k-1} as given.
  ControlOutput control_update(const Vec & x_k, const Vec & y_prev, double y_r);

  /// Input assumed applied before the first step (zero unless set).
  void set_initial_input(const Vec & u_init);

  const ControllerState & state() const { return state_; }
  const ControllerConfig & config() const { return config_; }
  std::shared_ptr<const TerminalIngredients> ingredients(double y_r) { return cache_->get(y_r); }
  const VelocityModel & model() const { return *model_; }

private:
  std::shared_ptr<const VelocityModel> model_;
  ControllerConfig config_;
  ReferenceMap reference_map_;
  std::shared_ptr<TerminalCache> cache_;
  ControllerState state_;
  bool started_ = false;
  long step_ = 0;
};

}  // namespace kvdpc
