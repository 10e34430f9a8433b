#include "kvdpc/analytic_velocity.hpp"
#include "kvdpc/velocity_model.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace kvdpc;
using kvdpc::test::max_abs;
using kvdpc::test::random_matrix;
using kvdpc::test::random_vector;

namespace {

Vec v1(double a)
{
  return Vec::Constant(1, a);
}

// Scalar LTI system x+ = a x + b u observed as y = x.
Dataset scalar_lti_data(double a, double b, std::size_t s, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Dataset d;
  double x = 0.3;
  for (std::size_t k = 0; k <= s; ++k) {
    const double u = dist(rng);
    d.x.push_back(v1(x));
    d.u.push_back(u);
    d.y.push_back(x);
    d.d.push_back(0.0);
    x = a * x + b * u;
  }
  return d;
}

// Schedule-dependent matrices that do not commute, to pin the product order.
class StubModel final : public VelocityModel
{
public:
  ModelDims dims() const override { return {1, 1, 1}; }
  VelocityMatrices matrices(const Vec & x, const Vec & u) const override
  {
    VelocityMatrices m{Mat(2, 2), Mat(2, 1), Mat(1, 2)};
    m.A << 1.0, x(0), u(0), 0.5;
    m.B << 0.0, 1.0 + x(0);
    m.C = m.A.topRows(1);
    return m;
  }
};

std::shared_ptr<VelocityKernelModel> random_kernel_model(std::mt19937_64 & rng)
{
  const ModelDims dims{2, 1, 1};
  const CenterSet cxu(random_matrix(rng, 5, 3));
  const CenterSet cx(random_matrix(rng, 4, 2));
  return std::make_shared<VelocityKernelModel>(dims, KernelSpec(KernelFamily::inverse_multiquadric, 2.0), cxu, cx,
                                               RowMat(random_matrix(rng, 2, 10, 0.2)),
                                               RowMat(random_matrix(rng, 2, 5, 0.2)),
                                               RowMat(random_matrix(rng, 1, 8, 0.2)));
}

}  // namespace

TEST_CASE("regressor columns for a single center")
{
  Dataset d;
  const double xs[] = {0.0, 0.5, 0.2, -0.1};
  const double us[] = {1.0, -1.0, 0.5, 0.5};
  for (int k = 0; k < 4; ++k) {
    d.x.push_back(v1(xs[k]));
    d.u.push_back(us[k]);
    d.y.push_back(2.0 * xs[k]);
    d.d.push_back(0.0);
  }
  const KernelSpec spec(KernelFamily::gaussian, 0.5);
  Mat cxu_pt(1, 2);
  cxu_pt << 0.1, 0.2;
  const CenterSet cxu(cxu_pt);
  const CenterSet cx(Mat::Constant(1, 1, -0.3));
  const auto b = build_regressors(d, spec, cxu, cx);

  REQUIRE(b.kx_stack.rows() == 2);
  REQUIRE(b.kx_stack.cols() == 2);
  REQUIRE(b.ky_stack.rows() == 1);
  REQUIRE(b.dx_plus.cols() == 2);
  REQUIRE(b.dy_plus.rows() == 1);
  for (int k = 1; k <= 2; ++k) {
    const int c = k - 1;
    const double kxu = std::exp(-(std::pow(xs[k] - 0.1, 2) + std::pow(us[k] - 0.2, 2)) / 1.0);
    const double kx = std::exp(-std::pow(xs[k] + 0.3, 2) / 1.0);
    CHECK(b.kx_stack(0, c) == doctest::Approx(kxu * (xs[k] - xs[k - 1])));
    CHECK(b.kx_stack(1, c) == doctest::Approx(kxu * (us[k] - us[k - 1])));
    CHECK(b.ky_stack(0, c) == doctest::Approx(kx * (xs[k] - xs[k - 1])));
    CHECK(b.dx_plus(0, c) == doctest::Approx(xs[k + 1] - xs[k]));
    CHECK(b.dy_plus(0, c) == doctest::Approx(2.0 * (xs[k] - xs[k - 1])));
  }
}

TEST_CASE("regressor shapes follow the center counts")
{
  const Dataset d = scalar_lti_data(0.9, 0.1, 40, 3);
  const auto [cxu, cx] = select_centers(d, 4);
  CHECK(cxu.size() == 10);
  CHECK(cx.size() == 10);
  const auto b = build_regressors(d, KernelSpec{}, cxu, cx);
  CHECK(b.kx_stack.rows() == 2 * 10);
  CHECK(b.kx_stack.cols() == 39);
  CHECK(b.ky_stack.rows() == 10);
  CHECK(b.dx_plus.rows() == 1);
}

TEST_CASE("center selection skips exact repeats")
{
  Dataset d;
  for (int k = 0; k < 6; ++k) {
    d.x.push_back(v1(k < 3 ? 1.0 : 2.0));
    d.u.push_back(0.0);
    d.y.push_back(0.0);
    d.d.push_back(0.0);
  }
  const auto [cxu, cx] = select_centers(d, 1);
  CHECK(cxu.size() == 2);
  CHECK(cx.size() == 2);
  CHECK_THROWS_AS(select_centers(d, 0), ConfigError);
}

TEST_CASE("zero targets give zero coefficients")
{
  Dataset d;
  for (int k = 0; k < 10; ++k) {
    d.x.push_back(v1(1.0));
    d.u.push_back(0.1 * k);
    d.y.push_back(1.0);
    d.d.push_back(0.0);
  }
  const auto [cxu, cx] = select_centers(d, 1);
  const auto fit = fit_velocity_model(build_regressors(d, KernelSpec{}, cxu, cx));
  CHECK(max_abs(fit.model->A_alpha()) == 0.0);
  CHECK(max_abs(fit.model->B_alpha()) == 0.0);
  CHECK(max_abs(fit.model->C_alpha()) == 0.0);
}

TEST_CASE("an LTI scalar system is interpolated on the training data")
{
  const Dataset d = scalar_lti_data(0.8, 0.3, 30, 11);
  const auto [cxu, cx] = select_centers(d, 1);
  const auto b = build_regressors(d, KernelSpec(KernelFamily::inverse_multiquadric, 1.0), cxu, cx);
  const auto fit = fit_velocity_model(b);
  CHECK(fit.rank.kx_full == 29);
  CHECK(fit.kx_residual <= 1e-8 * b.dx_plus.norm());
  CHECK(fit.ky_residual <= 1e-8 * b.dy_plus.norm());

  // One-step velocity prediction reproduces every training transition.
  for (std::size_t k = 1; k + 1 < d.x.size(); ++k) {
    const ExtendedState z{v1(d.y[k - 1]), d.x[k] - d.x[k - 1]};
    const auto st = velocity_step(*fit.model, z, d.x[k], v1(d.u[k]), v1(d.u[k] - d.u[k - 1]));
    CHECK(st.z_next.dx(0) == doctest::Approx(d.x[k + 1](0) - d.x[k](0)).epsilon(1e-7));
    CHECK(st.y_hat(0) == doctest::Approx(d.y[k]).epsilon(1e-7));
  }
}

TEST_CASE("ridge fit shrinks the coefficients")
{
  const Dataset d = scalar_lti_data(0.8, 0.3, 30, 12);
  const auto [cxu, cx] = select_centers(d, 1);
  const auto b = build_regressors(d, KernelSpec(KernelFamily::inverse_multiquadric, 1.0), cxu, cx);
  const auto plain = fit_velocity_model(b);
  const auto ridge = fit_velocity_model(b, 1e-2);
  CHECK(ridge.model->A_alpha().norm() < plain.model->A_alpha().norm());
  CHECK_THROWS_AS(fit_velocity_model(b, -1.0), ConfigError);
}

TEST_CASE("zero coefficients give the bare velocity structure")
{
  const ModelDims dims{2, 1, 1};
  std::mt19937_64 rng(5);
  const VelocityKernelModel m(dims, KernelSpec{}, CenterSet(random_matrix(rng, 3, 3)), CenterSet(random_matrix(rng, 3, 2)),
                              RowMat::Zero(2, 6), RowMat::Zero(2, 3), RowMat::Zero(1, 6));
  const auto mats = m.matrices(random_vector(rng, 2), random_vector(rng, 1));
  Mat A = Mat::Zero(3, 3);
  A(0, 0) = 1.0;
  CHECK(mats.A == A);
  CHECK(mats.B == Mat::Zero(3, 1));
  CHECK(mats.C == A.topRows(1));
}

TEST_CASE("kernel model matrices equal the contracted expansions")
{
  std::mt19937_64 rng(21);
  const auto m = random_kernel_model(rng);
  const Vec x = random_vector(rng, 2);
  const Vec u = random_vector(rng, 1);
  Vec xu(3);
  xu << x, u;
  const Vec kxu = kernel_vector(m->kernel(), m->centers_xu(), xu);
  const Vec kx = kernel_vector(m->kernel(), m->centers_x(), x);
  const auto mats = m->matrices(x, u);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(mats.A(1 + i, 1 + j) == doctest::Approx(m->A_alpha().row(i).segment(5 * j, 5).dot(kxu.transpose())));
    }
    CHECK(mats.B(1 + i, 0) == doctest::Approx(m->B_alpha().row(i).dot(kxu.transpose())));
  }
  for (int j = 0; j < 2; ++j) {
    CHECK(mats.A(0, 1 + j) == doctest::Approx(m->C_alpha().row(0).segment(4 * j, 4).dot(kx.transpose())));
  }
  CHECK(mats.C == mats.A.topRows(1));
}

TEST_CASE("prediction matrices multiply later factors on the left")
{
  const StubModel m;
  std::vector<Vec> rho;
  const double xs[] = {0.3, -0.7, 1.1};
  const double us[] = {0.2, 0.9, -0.4};
  std::vector<VelocityMatrices> mats;
  for (int j = 0; j < 3; ++j) {
    Vec r(2);
    r << xs[j], us[j];
    rho.push_back(r);
    mats.push_back(m.matrices(v1(xs[j]), v1(us[j])));
  }
  const auto pm = build_prediction_matrices(m, rho);
  REQUIRE(pm.psi.rows() == 6);
  REQUIRE(pm.gamma.cols() == 3);
  const Mat & A0 = mats[0].A;
  const Mat & A1 = mats[1].A;
  const Mat & A2 = mats[2].A;
  CHECK(max_abs(pm.psi.block(0, 0, 2, 2) - A0) < 1e-15);
  CHECK(max_abs(pm.psi.block(2, 0, 2, 2) - A1 * A0) < 1e-15);
  CHECK(max_abs(pm.psi.block(4, 0, 2, 2) - A2 * A1 * A0) < 1e-15);
  CHECK(max_abs(pm.gamma.block(4, 0, 2, 1) - A2 * A1 * mats[0].B) < 1e-15);
  CHECK(max_abs(pm.gamma.block(4, 1, 2, 1) - A2 * mats[1].B) < 1e-15);
  CHECK(max_abs(pm.gamma.block(4, 2, 2, 1) - mats[2].B) < 1e-15);
  CHECK(max_abs(pm.gamma.block(0, 1, 2, 2)) == 0.0);
  CHECK(max_abs(pm.gamma.block(2, 2, 2, 1)) == 0.0);
  CHECK_THROWS_AS(build_prediction_matrices(m, {}), ConfigError);
}

TEST_CASE("stacked prediction agrees with iterated velocity steps")
{
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = random_kernel_model(rng);
    const int N = 8;
    std::vector<Vec> rho;
    for (int j = 0; j < N; ++j) { rho.push_back(random_vector(rng, 3)); }
    const Vec z0 = random_vector(rng, 3);
    const Vec du = random_vector(rng, N);
    const auto pm = build_prediction_matrices(*m, rho);
    const Vec stacked = pm.psi * z0 + pm.gamma * du;

    ExtendedState z = ExtendedState::split(z0, m->dims());
    for (int j = 0; j < N; ++j) {
      const auto st = velocity_step(*m, z, rho[j].head(2), rho[j].tail(1), du.segment(j, 1));
      z = st.z_next;
      CHECK(max_abs(z.stacked() - stacked.segment(3 * j, 3)) <= 1e-12);
    }
  }
}

TEST_CASE("model JSON round trip is lossless")
{
  std::mt19937_64 rng(44);
  const auto m = random_kernel_model(rng);
  std::stringstream ss;
  save_model_json(ss, *m);
  const auto back = load_model_json(ss);
  CHECK(back->dims() == m->dims());
  CHECK(back->kernel().family == m->kernel().family);
  CHECK(back->kernel().sigma2 == m->kernel().sigma2);
  CHECK(back->centers_xu().points() == m->centers_xu().points());
  CHECK(back->centers_x().points() == m->centers_x().points());
  CHECK(back->A_alpha() == m->A_alpha());
  CHECK(back->B_alpha() == m->B_alpha());
  CHECK(back->C_alpha() == m->C_alpha());

  std::istringstream bad("{\"dims\": 3}");
  CHECK_THROWS_AS(load_model_json(bad), ConfigError);
}

TEST_CASE("open-loop validation is exact for a linear plant with its own model")
{
  const PendulumParams params(1.0, 1.0, 0.1, 0.0, 1.0 / 30.0);
  std::vector<double> inputs;
  for (int k = 0; k < 120; ++k) { inputs.push_back(std::sin(0.3 * k) + 0.2 * std::cos(1.7 * k)); }
  Vec x0(2);
  x0 << 0.1, -0.2;
  const Dataset d = collect_dataset(params, inputs, x0, DisturbanceProfile{});
  const AnalyticVelocityModel model(params);
  const auto v = validate_open_loop(model, d, 20);
  CHECK(v.e.size() == 120);
  CHECK(v.rmse <= 1e-12);
  CHECK_THROWS_AS(validate_open_loop(model, d, 0), ConfigError);
  CHECK_THROWS_AS(validate_open_loop(model, d, 500), ConfigError);
}
