#include "kvdpc/velocity_model.hpp"

#include "kvdpc/error.hpp"
#include "kvdpc/optim.hpp"
#include "kvdpc/simd.hpp"

#include <json.hpp>

#include <cmath>
#include <iomanip>
#include <ostream>

namespace kvdpc {

Vec ExtendedState::stacked() const
{
  Vec z(y_prev.size() + dx.size());
  z << y_prev, dx;
  return z;
}

ExtendedState ExtendedState::split(const Vec & z, const ModelDims & dims)
{
  require_dims(z.size() == dims.nz(), "extended state: size must be p + n");
  return {z.head(dims.p), z.tail(dims.n)};
}

VelocityKernelModel::VelocityKernelModel(
  ModelDims dims, KernelSpec kernel, CenterSet centers_xu, CenterSet centers_x, RowMat A_alpha, RowMat B_alpha,
  RowMat C_alpha)
    : dims_(dims), kernel_(kernel), centers_xu_(std::move(centers_xu)), centers_x_(std::move(centers_x)),
      A_alpha_(std::move(A_alpha)), B_alpha_(std::move(B_alpha)), C_alpha_(std::move(C_alpha))
{
  const auto sxu = centers_xu_.size();
  const auto sx = centers_x_.size();
  require_dims(centers_xu_.dim() == dims_.n + dims_.m, "kernel model: (x,u) centers must have n + m coordinates");
  require_dims(centers_x_.dim() == dims_.n, "kernel model: x centers must have n coordinates");
  require_dims(A_alpha_.rows() == dims_.n && A_alpha_.cols() == dims_.n * sxu, "kernel model: A_alpha must be n x (n s_xu)");
  require_dims(B_alpha_.rows() == dims_.n && B_alpha_.cols() == dims_.m * sxu, "kernel model: B_alpha must be n x (m s_xu)");
  require_dims(C_alpha_.rows() == dims_.p && C_alpha_.cols() == dims_.n * sx, "kernel model: C_alpha must be p x (n s_x)");
}

namespace {

// coeff (rows x blocks*s), returns rows x blocks with entry (i, j) = coeff(i, j-th block) . k
Mat contract(const RowMat & coeff, Eigen::Index blocks, const Vec & k)
{
  const Eigen::Index s = k.size();
  Mat out(coeff.rows(), blocks);
  for (Eigen::Index i = 0; i < coeff.rows(); ++i) {
    const double * row = coeff.data() + i * coeff.cols();
    for (Eigen::Index j = 0; j < blocks; ++j) {
      out(i, j) = simd::dot(row + j * s, k.data(), static_cast<std::size_t>(s));
    }
  }
  return out;
}

}  // namespace

VelocityMatrices VelocityKernelModel::matrices(const Vec & x, const Vec & u) const
{
  require_dims(x.size() == dims_.n && u.size() == dims_.m, "kernel model: scheduling point has wrong dimensions");
  Vec xu(dims_.n + dims_.m);
  xu << x, u;
  const Vec kxu = kernel_vector(kernel_, centers_xu_, xu);
  const Vec kx = kernel_vector(kernel_, centers_x_, x);

  const Mat dhdx = contract(C_alpha_, dims_.n, kx);
  const Mat dfdx = contract(A_alpha_, dims_.n, kxu);
  const Mat dfdu = contract(B_alpha_, dims_.m, kxu);

  const auto p = dims_.p;
  const auto n = dims_.n;
  VelocityMatrices out;
  out.A = Mat::Zero(p + n, p + n);
  out.A.topLeftCorner(p, p).setIdentity();
  out.A.topRightCorner(p, n) = dhdx;
  out.A.bottomRightCorner(n, n) = dfdx;
  out.B = Mat::Zero(p + n, dims_.m);
  out.B.bottomRows(n) = dfdu;
  out.C = out.A.topRows(p);
  return out;
}

std::pair<CenterSet, CenterSet> select_centers(const Dataset & data, std::size_t stride)
{
  data.check_consistent();
  if (stride < 1) { throw ConfigError("select_centers: stride must be at least 1"); }
  const std::size_t s = data.samples();
  if (s < 1) { throw ConfigError("select_centers: dataset is empty"); }
  const Eigen::Index n = data.x.front().size();
  std::vector<Vec> xu_pts;
  std::vector<Vec> x_pts;
  auto contains = [](const std::vector<Vec> & pts, const Vec & q) {
    for (const auto & p : pts) {
      if (p == q) { return true; }
    }
    return false;
  };
  for (std::size_t k = 0; k < s; k += stride) {
    Vec xu(n + 1);
    xu << data.x[k], data.u[k];
    if (!contains(xu_pts, xu)) { xu_pts.push_back(xu); }
    if (!contains(x_pts, data.x[k])) { x_pts.push_back(data.x[k]); }
  }
  auto to_mat = [](const std::vector<Vec> & pts) {
    Mat m(static_cast<Eigen::Index>(pts.size()), pts.front().size());
    for (std::size_t i = 0; i < pts.size(); ++i) { m.row(static_cast<Eigen::Index>(i)) = pts[i].transpose(); }
    return m;
  };
  return {CenterSet(to_mat(xu_pts)), CenterSet(to_mat(x_pts))};
}

RegressorBundle build_regressors(
  const Dataset & data, const KernelSpec & kernel, const CenterSet & centers_xu, const CenterSet & centers_x)
{
  data.check_consistent();
  const std::size_t s = data.samples();
  if (s < 3) { throw ConfigError("build_regressors: need at least 3 samples"); }
  ModelDims dims{data.x.front().size(), 1, 1};
  require_dims(centers_xu.dim() == dims.n + dims.m, "build_regressors: (x,u) centers must have n + m coordinates");
  require_dims(centers_x.dim() == dims.n, "build_regressors: x centers must have n coordinates");

  const Eigen::Index sxu = centers_xu.size();
  const Eigen::Index sx = centers_x.size();
  const auto cols = static_cast<Eigen::Index>(s - 1);
  RegressorBundle b{dims, kernel, centers_xu, centers_x, Mat(dims.n * sxu + dims.m * sxu, cols),
                    Mat(dims.n * sx, cols), Mat(dims.n, cols), Mat(dims.p, cols)};

  Vec kxu(sxu);
  Vec kx(sx);
  Vec xu(dims.n + dims.m);
  for (std::size_t k = 1; k < s; ++k) {
    const auto c = static_cast<Eigen::Index>(k - 1);
    const Vec dx = data.x[k] - data.x[k - 1];
    const double du = data.u[k] - data.u[k - 1];
    xu << data.x[k], data.u[k];
    kernel_vector_into(kernel, centers_xu, xu, kxu);
    kernel_vector_into(kernel, centers_x, data.x[k], kx);
    for (Eigen::Index j = 0; j < dims.n; ++j) {
      b.kx_stack.col(c).segment(j * sxu, sxu) = kxu * dx(j);
      b.ky_stack.col(c).segment(j * sx, sx) = kx * dx(j);
    }
    b.kx_stack.col(c).segment(dims.n * sxu, sxu) = kxu * du;
    b.dx_plus.col(c) = data.x[k + 1] - data.x[k];
    b.dy_plus(0, c) = data.y[k] - data.y[k - 1];
  }
  return b;
}

FitResult fit_velocity_model(const RegressorBundle & b, double ridge)
{
  if (ridge < 0.0) { throw ConfigError("fit: ridge weight must be non-negative"); }
  require_dims(b.kx_stack.cols() == b.dx_plus.cols() && b.ky_stack.cols() == b.dy_plus.cols(),
               "fit: regressor and target columns disagree");
  const auto n = b.dims.n;
  const auto sxu = b.centers_xu.size();

  FitResult out;
  Mat theta_x;
  Mat theta_y;
  // The rank report always comes from the SVD, also when a ridge is used.
  const auto lx = optim::min_norm_lstsq(b.kx_stack, b.dx_plus);
  const auto ly = optim::min_norm_lstsq(b.ky_stack, b.dy_plus);
  if (ridge == 0.0) {
    theta_x = lx.X;
    theta_y = ly.X;
  } else {
    theta_x = optim::ridge_lstsq(b.kx_stack, b.dx_plus, ridge);
    theta_y = optim::ridge_lstsq(b.ky_stack, b.dy_plus, ridge);
  }
  out.rank.kx_rank = lx.rank;
  out.rank.kx_full = std::min(b.kx_stack.rows(), b.kx_stack.cols());
  out.rank.ky_rank = ly.rank;
  out.rank.ky_full = std::min(b.ky_stack.rows(), b.ky_stack.cols());
  out.kx_residual = (theta_x * b.kx_stack - b.dx_plus).norm();
  out.ky_residual = (theta_y * b.ky_stack - b.dy_plus).norm();

  RowMat A_alpha = theta_x.leftCols(n * sxu);
  RowMat B_alpha = theta_x.rightCols(b.dims.m * sxu);
  RowMat C_alpha = theta_y;
  out.model = std::make_shared<VelocityKernelModel>(b.dims, b.kernel, b.centers_xu, b.centers_x, std::move(A_alpha),
                                                    std::move(B_alpha), std::move(C_alpha));
  return out;
}

VelocityStep velocity_step(const VelocityModel & model, const ExtendedState & z, const Vec & x, const Vec & u, const Vec & du)
{
  const auto dims = model.dims();
  require_dims(z.y_prev.size() == dims.p && z.dx.size() == dims.n, "velocity_step: extended state has wrong dimensions");
  require_dims(du.size() == dims.m, "velocity_step: du has wrong dimension");
  const VelocityMatrices mats = model.matrices(x, u);
  const Vec zs = z.stacked();
  const Vec next = mats.A * zs + mats.B * du;
  return {ExtendedState::split(next, dims), mats.C * zs};
}

PredictionMatrices build_prediction_matrices(const VelocityModel & model, const std::vector<Vec> & rho)
{
  if (rho.empty()) { throw ConfigError("build_prediction_matrices: empty schedule"); }
  const auto dims = model.dims();
  const auto nz = dims.nz();
  const auto m = dims.m;
  const auto N = static_cast<Eigen::Index>(rho.size());
  PredictionMatrices pm{Mat::Zero(N * nz, nz), Mat::Zero(N * nz, N * m)};
  for (Eigen::Index j = 0; j < N; ++j) {
    const Vec & r = rho[static_cast<std::size_t>(j)];
    require_dims(r.size() == dims.n + m, "build_prediction_matrices: scheduling point has wrong dimension");
    const VelocityMatrices mats = model.matrices(r.head(dims.n), r.tail(m));
    if (j == 0) {
      pm.psi.block(0, 0, nz, nz) = mats.A;
    } else {
      pm.psi.block(j * nz, 0, nz, nz) = mats.A * pm.psi.block((j - 1) * nz, 0, nz, nz);
      for (Eigen::Index i = 0; i < j; ++i) {
        pm.gamma.block(j * nz, i * m, nz, m) = mats.A * pm.gamma.block((j - 1) * nz, i * m, nz, m);
      }
    }
    pm.gamma.block(j * nz, j * m, nz, m) = mats.B;
  }
  return pm;
}

ValidationResult validate_open_loop(const VelocityModel & model, const Dataset & data, std::size_t horizon)
{
  data.check_consistent();
  if (horizon < 1) { throw ConfigError("validate_open_loop: horizon must be at least 1"); }
  if (data.x.size() < horizon + 2) { throw ConfigError("validate_open_loop: dataset shorter than horizon + 2"); }
  const auto dims = model.dims();
  require_dims(dims.m == 1 && dims.p == 1 && dims.n == data.x.front().size(),
               "validate_open_loop: model and dataset dimensions disagree");

  const std::size_t s = data.samples();
  ValidationResult out;
  double sq = 0.0;
  for (std::size_t t = 1; t + horizon - 1 <= s; t += horizon) {
    ExtendedState z{Vec::Constant(1, data.y[t - 1]), data.x[t] - data.x[t - 1]};
    Vec x = data.x[t];
    for (std::size_t j = 0; j < horizon; ++j) {
      const std::size_t k = t + j;
      const Vec u = Vec::Constant(1, data.u[k]);
      const Vec du = Vec::Constant(1, data.u[k] - data.u[k - 1]);
      const VelocityStep st = velocity_step(model, z, x, u, du);
      const double e = data.y[k] - st.y_hat(0);
      out.k.push_back(k);
      out.y.push_back(data.y[k]);
      out.y_hat.push_back(st.y_hat(0));
      out.e.push_back(e);
      sq += e * e;
      z = st.z_next;
      x = x + z.dx;
    }
  }
  out.rmse = std::sqrt(sq / static_cast<double>(out.e.size()));
  return out;
}

void write_validation_csv(std::ostream & os, const ValidationResult & v)
{
  os << "k,y,y_hat,e\n" << std::setprecision(17);
  for (std::size_t i = 0; i < v.k.size(); ++i) {
    os << v.k[i] << ',' << v.y[i] << ',' << v.y_hat[i] << ',' << v.e[i] << '\n';
  }
}

namespace {

nlohmann::json rows_json(const Mat & m)
{
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) { row.push_back(m(i, j)); }
    arr.push_back(std::move(row));
  }
  return arr;
}

Mat rows_from_json(const nlohmann::json & arr, Eigen::Index expected_cols)
{
  Mat m(static_cast<Eigen::Index>(arr.size()), expected_cols);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (arr[i].size() != static_cast<std::size_t>(expected_cols)) { throw ConfigError("model json: ragged matrix"); }
    for (std::size_t j = 0; j < arr[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = arr[i][j].get<double>();
    }
  }
  return m;
}

}  // namespace

void save_model_json(std::ostream & os, const VelocityKernelModel & model)
{
  nlohmann::json j;
  const auto d = model.dims();
  j["dims"] = {{"n", d.n}, {"m", d.m}, {"p", d.p}};
  j["kernel"] = {{"family", to_string(model.kernel().family)}, {"sigma2", model.kernel().sigma2}};
  j["centers_xu"] = rows_json(model.centers_xu().points());
  j["centers_x"] = rows_json(model.centers_x().points());
  j["A_alpha"] = rows_json(model.A_alpha());
  j["B_alpha"] = rows_json(model.B_alpha());
  j["C_alpha"] = rows_json(model.C_alpha());
  os << j.dump() << '\n';
}

std::shared_ptr<const VelocityKernelModel> load_model_json(std::istream & is)
{
  nlohmann::json j;
  try {
    is >> j;
    ModelDims d{j.at("dims").at("n").get<Eigen::Index>(), j.at("dims").at("m").get<Eigen::Index>(),
                j.at("dims").at("p").get<Eigen::Index>()};
    KernelSpec k(kernel_family_from_string(j.at("kernel").at("family").get<std::string>()),
                 j.at("kernel").at("sigma2").get<double>());
    CenterSet cxu(rows_from_json(j.at("centers_xu"), d.n + d.m));
    CenterSet cx(rows_from_json(j.at("centers_x"), d.n));
    RowMat A = rows_from_json(j.at("A_alpha"), d.n * cxu.size());
    RowMat B = rows_from_json(j.at("B_alpha"), d.m * cxu.size());
    RowMat C = rows_from_json(j.at("C_alpha"), d.n * cx.size());
    return std::make_shared<VelocityKernelModel>(d, k, std::move(cxu), std::move(cx), std::move(A), std::move(B),
                                                 std::move(C));
  } catch (const nlohmann::json::exception & e) {
    throw ConfigError(std::string("model json: ") + e.what());
  }
}

}  // namespace kvdpc
