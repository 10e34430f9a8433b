#pragma once

#include "kvdpc/controller.hpp"
#include "kvdpc/scenario.hpp"
#include "kvdpc/terminal.hpp"
#include "kvdpc/velocity_model.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kvdpc {

enum class Variant { vkdpc, vnmpc };
std::string to_string(Variant v);
Variant variant_from_string(const std::string & name);

struct StepRecord
{
  long k = 0;
  Vec x;         ///< x_k seen by the controller
  double u = 0.0;
  double du = 0.0;
  double y = 0.0;  ///< y_k = h(x_k)
  double y_r = 0.0;
  double d = 0.0;  ///< disturbance applied between k and k+1
  double V = 0.0;
  int iters = 0;
  bool converged = false;
  bool terminal_active = false;
  double wall_time = 0.0;
  Vec z0;
  double constraint_violation = 0.0;  ///< worst of z0 in Z and du in dU
};

struct SimulationLog
{
  Variant variant = Variant::vkdpc;
  std::vector<StepRecord> records;
  std::vector<SolveReport> reports;
  Vec x_final;
};

/// Raised when the controller fails; carries the failing step.
class SimulationError : public SolverError
{
public:
  SimulationError(long step, const std::string & what)
    : SolverError("step " + std::to_string(step) + ": " + what), step_(step) {}
  long step() const { return step_; }

private:
  long step_;
};

/// Simulates the plant under one controller variant. vkdpc needs `model`.
SimulationLog run_closed_loop(
  const Scenario & scenario, Variant variant, std::shared_ptr<const VelocityKernelModel> model = nullptr,
  std::shared_ptr<TerminalCache> cache = nullptr);

/// Maximum state error when the logged inputs and disturbances are replayed
/// through a fresh plant.
double replay_error(const Scenario & scenario, const SimulationLog & log);

struct SegmentError
{
  long start = 0;
  long end = 0;  ///< last step of the segment
  double y_r = 0.0;
  double d = 0.0;
  double abs_error = 0.0;
};

struct Metrics
{
  Variant variant = Variant::vkdpc;
  long steps = 0;
  std::vector<SegmentError> segments;
  double mean_iters = 0.0;
  int max_iters = 0;
  long nonconverged_steps = 0;
  double mean_wall_time = 0.0;
  double max_wall_time = 0.0;
  double max_constraint_violation = 0.0;
  long descent_steps = 0;
  long descent_violations = 0;
  double descent_violation_fraction = 0.0;
  long terminal_active_steps = 0;
};

/// Segments split at every reference or disturbance change. The value-function
/// check uses disturbance-free, constant-reference step pairs with an inactive
/// terminal constraint.
Metrics compute_metrics(const SimulationLog & log, const Scenario & scenario);

/// max_k |y_a(k) - y_b(k)|; throws on length mismatch.
double max_output_deviation(const SimulationLog & a, const SimulationLog & b);

/// Full identification + terminal + closed-loop comparison.
struct ComparisonRun
{
  Dataset train;
  Dataset validation_data;
  FitResult fit;
  double fit_seconds = 0.0;
  ValidationResult validation;
  TerminalIngredients terminal_kernel;
  TerminalIngredients terminal_analytic;
  CertificateReport certificate_kernel;
  CertificateReport certificate_analytic;
  double terminal_hausdorff = 0.0;
  double terminal_diameter = 0.0;
  SimulationLog log_vkdpc;
  SimulationLog log_vnmpc;
  Metrics metrics_vkdpc;
  Metrics metrics_vnmpc;
  double output_deviation = 0.0;
  double scheduled_slack_vkdpc = 0.0;
  double scheduled_slack_vnmpc = 0.0;
};

struct ComparisonOptions
{
  bool parallel = true;
  /// Reuse a fitted model instead of fitting from the generated data.
  std::shared_ptr<const VelocityKernelModel> model;
};

Dataset make_training_data(const Scenario & scenario);
Dataset make_validation_data(const Scenario & scenario);
FitResult fit_from_data(const Scenario & scenario, const Dataset & data);

ComparisonRun run_comparison(const Scenario & scenario, const ComparisonOptions & opts = {});

}  // namespace kvdpc
