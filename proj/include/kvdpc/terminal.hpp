#pragma once

#include "kvdpc/polytope.hpp"
#include "kvdpc/velocity_model.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

namespace kvdpc {

/// Terminal weight, gain and set for one constant reference. Z_T is expressed
/// in deviation coordinates v = z - r.
struct TerminalIngredients
{
  double y_r = 0.0;
  Vec r;      ///< col(y_r, 0_n)
  Vec x_r;
  Vec u_r;
  Mat P;
  Mat K;
  Polytope Z_T;
  Mat A_cl;   ///< A_ref + B_ref K
  Mat A_ref;
  Mat B_ref;
  Polytope Z_shift;  ///< state constraints in deviation coordinates
  Polytope dU;
  int invariant_iterations = 0;
};

struct CostGain
{
  Mat P;
  Mat K;
};

/// DARE-based (P, K); `label` names the reference in error messages.
CostGain compute_terminal_cost_gain(
  const Mat & A, const Mat & B, const Mat & Q, const Mat & R, const std::string & label = "reference");

/// lambda_max(A_cl' P A_cl - P + Q + K' R K).
double lyapunov_slack(const Mat & A_cl, const Mat & P, const Mat & Q, const Mat & R, const Mat & K);

/// Builds (P, K, Z_T) from the model frozen at (x_r, u_r). Z and dU are given
/// in absolute coordinates (z and du).
TerminalIngredients synthesize_terminal(
  const VelocityModel & model, const Vec & x_r, const Vec & u_r, double y_r, const Mat & Q, const Mat & R,
  const Polytope & Z, const Polytope & dU, const InvariantSetOptions & opts = {});

struct CertificateViolation
{
  char condition;  ///< 'a' .. 'd'
  double slack;
  Vec witness;     ///< offending point (empty for 'd')
};

struct CertificateReport
{
  double slack_a = 0.0;  ///< worst max_violation of A_cl v in Z_T
  double slack_b = 0.0;  ///< worst max_violation of K v in dU
  double slack_c = 0.0;  ///< worst max_violation of v in Z
  double slack_d = 0.0;  ///< Lyapunov inequality lambda_max
  std::size_t points_checked = 0;
  std::vector<CertificateViolation> violations;

  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

/// Checks the four terminal conditions at the vertices of Z_T plus
/// `sample_count` seeded boundary points.
CertificateReport check_terminal_conditions(
  const TerminalIngredients & ti, const Mat & Q, const Mat & R, std::size_t sample_count = 200,
  double tol = 1e-8, std::uint64_t seed = 7);

/// Worst Lyapunov slack of (P, K) over the model frozen at each scheduling
/// point in `rho` (quasi-LPV coverage diagnostic).
double scheduled_lyapunov_slack(
  const VelocityModel & model, const std::vector<Vec> & rho, const TerminalIngredients & ti, const Mat & Q,
  const Mat & R);

/// Thread-safe per-reference memo of terminal ingredients.
class TerminalCache
{
public:
  using Factory = std::function<TerminalIngredients(double y_r)>;

  explicit TerminalCache(Factory factory) : factory_(std::move(factory)) {}

  std::shared_ptr<const TerminalIngredients> get(double y_r);
  std::size_t size() const;

private:
  Factory factory_;
  mutable std::shared_mutex mutex_;
  std::map<double, std::shared_ptr<const TerminalIngredients>> entries_;
};

}  // namespace kvdpc
