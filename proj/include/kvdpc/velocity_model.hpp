#pragma once

#include "kvdpc/kernels.hpp"
#include "kvdpc/linalg.hpp"
#include "kvdpc/plant.hpp"

#include <iosfwd>
#include <memory>
#include <vector>

namespace kvdpc {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n states, m inputs, p outputs. The velocity state z = col(y_prev, dx) has p + n entries.
struct ModelDims
{
  Eigen::Index n = 2;
  Eigen::Index m = 1;
  Eigen::Index p = 1;

  Eigen::Index nz() const { return p + n; }
  bool operator==(const ModelDims &) const = default;
};

/// z_{k+1} = A z_k + B du_k,  y_k = C z_k, frozen at one scheduling point.
struct VelocityMatrices
{
  Mat A;
  Mat B;
  Mat C;
};

/// Anything that yields velocity-form matrices at a scheduling point (x, u).
class VelocityModel
{
public:
  virtual ~VelocityModel() = default;
  virtual ModelDims dims() const = 0;
  virtual VelocityMatrices matrices(const Vec & x, const Vec & u) const = 0;
};

/// z = col(y_prev, dx).
struct ExtendedState
{
  Vec y_prev;
  Vec dx;

  Vec stacked() const;
  static ExtendedState split(const Vec & z, const ModelDims & dims);
};

/// Learned velocity model: each gradient block is a kernel expansion over
/// centers drawn from the identification data.
class VelocityKernelModel final : public VelocityModel
{
public:
  VelocityKernelModel(
    ModelDims dims, KernelSpec kernel, CenterSet centers_xu, CenterSet centers_x, RowMat A_alpha, RowMat B_alpha,
    RowMat C_alpha);

  ModelDims dims() const override { return dims_; }
  VelocityMatrices matrices(const Vec & x, const Vec & u) const override;

  const KernelSpec & kernel() const { return kernel_; }
  const CenterSet & centers_xu() const { return centers_xu_; }
  const CenterSet & centers_x() const { return centers_x_; }
  const RowMat & A_alpha() const { return A_alpha_; }
  const RowMat & B_alpha() const { return B_alpha_; }
  const RowMat & C_alpha() const { return C_alpha_; }

private:
  ModelDims dims_;
  KernelSpec kernel_;
  CenterSet centers_xu_;
  CenterSet centers_x_;
  RowMat A_alpha_;
  RowMat B_alpha_;
  RowMat C_alpha_;
};

struct RegressorBundle
{
  ModelDims dims;
  KernelSpec kernel;
  CenterSet centers_xu;
  CenterSet centers_x;
  Mat kx_stack;  ///< ((n+m) s_xu) x (s-1), column k-1 = K^x_k
  Mat ky_stack;  ///< (n s_x) x (s-1), column k-1 = K^y_k
  Mat dx_plus;   ///< n x (s-1), column k-1 = x_{k+1} - x_k
  Mat dy_plus;   ///< p x (s-1), column k-1 = y_k - y_{k-1}
};

struct RankReport
{
  Eigen::Index kx_rank = 0;
  Eigen::Index kx_full = 0;  ///< min(rows, cols) of the stack
  Eigen::Index ky_rank = 0;
  Eigen::Index ky_full = 0;

  bool full_rank() const { return kx_rank == kx_full && ky_rank == ky_full; }
};

struct FitResult
{
  std::shared_ptr<const VelocityKernelModel> model;
  RankReport rank;
  double kx_residual = 0.0;  ///< ||[A B] Kx - dX+||_F
  double ky_residual = 0.0;  ///< ||C Ky - dY+||_F
};

/// Centers taken from rows 0, stride, 2 stride, ... (< s) of the dataset;
/// exact repeats are skipped so the sets stay pairwise distinct.
std::pair<CenterSet, CenterSet> select_centers(const Dataset & data, std::size_t stride);

RegressorBundle build_regressors(
  const Dataset & data, const KernelSpec & kernel, const CenterSet & centers_xu, const CenterSet & centers_x);

/// ridge == 0: min-norm least squares; ridge > 0: Tikhonov solution. The rank
/// report flags stacks that are not full rank (a warning, never an error).
FitResult fit_velocity_model(const RegressorBundle & bundle, double ridge = 0.0);

struct VelocityStep
{
  ExtendedState z_next;
  Vec y_hat;
};

VelocityStep velocity_step(const VelocityModel & model, const ExtendedState & z, const Vec & x, const Vec & u, const Vec & du);

/// Psi: (N nz) x nz, Gamma: (N nz) x (N m); block row j predicts z_{j+1}.
struct PredictionMatrices
{
  Mat psi;
  Mat gamma;
};

/// rho[j] = col(x_j, u_j). Later factors multiply on the left.
PredictionMatrices build_prediction_matrices(const VelocityModel & model, const std::vector<Vec> & rho);

struct ValidationResult
{
  std::vector<std::size_t> k;
  std::vector<double> y;
  std::vector<double> y_hat;
  std::vector<double> e;
  double rmse = 0.0;
};

/// Consecutive non-overlapping windows of `horizon` steps, each started from
/// the measured extended state and driven by the measured inputs; scheduling
/// uses the model's own simulated states after the first step.
ValidationResult validate_open_loop(const VelocityModel & model, const Dataset & data, std::size_t horizon);

void write_validation_csv(std::ostream & os, const ValidationResult & v);

void save_model_json(std::ostream & os, const VelocityKernelModel & model);
std::shared_ptr<const VelocityKernelModel> load_model_json(std::istream & is);

}  // namespace kvdpc
