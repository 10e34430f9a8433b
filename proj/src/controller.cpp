#include "kvdpc/controller.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <limits>

namespace kvdpc {

ControllerConfig ControllerConfig::defaults(const ModelDims & dims)
{
  ControllerConfig c;
  c.Q = 1000.0 * Mat::Identity(dims.nz(), dims.nz());
  c.R = 10.0 * Mat::Identity(dims.m, dims.m);
  c.Z = Polytope::symmetric_box(Vec::Constant(dims.nz(), 2.0));
  c.dU = Polytope::symmetric_box(Vec::Constant(dims.m, 2.0));
  return c;
}

void ControllerConfig::validate(const ModelDims & dims) const
{
  if (N < 1) { throw ConfigError("controller: horizon N must be at least 1"); }
  if (!(eps > 0.0)) { throw ConfigError("controller: eps must be positive"); }
  if (max_sqp_iters < 1) { throw ConfigError("controller: max_sqp_iters must be at least 1"); }
  if (terminal_slack_weight < 0.0) { throw ConfigError("controller: terminal_slack_weight must be non-negative"); }
  if (Q.rows() != dims.nz() || Q.cols() != dims.nz()) { throw ConfigError("controller: Q has wrong shape"); }
  if (R.rows() != dims.m || R.cols() != dims.m) { throw ConfigError("controller: R has wrong shape"); }
  if (lambda_min_sym(Q) <= 0.0) { throw ConfigError("controller: Q must be positive definite"); }
  if (lambda_min_sym(R) <= 0.0) { throw ConfigError("controller: R must be positive definite"); }
  if (Z.dim() != dims.nz()) { throw ConfigError("controller: Z has wrong dimension"); }
  if (dU.dim() != dims.m) { throw ConfigError("controller: dU has wrong dimension"); }
}

ScheduleSequence shift_warm_start(const ScheduleSequence & prev)
{
  ScheduleSequence out;
  if (prev.rho.empty()) { return out; }
  out.rho.assign(prev.rho.begin() + 1, prev.rho.end());
  out.rho.push_back(prev.rho.back());
  return out;
}

std::string SolveReport::to_json_line(bool with_timing) const
{
  nlohmann::json j;
  j["step"] = step;
  j["sqp_iterations"] = sqp_iterations;
  j["converged"] = converged;
  j["cost"] = cost;
  auto statuses = nlohmann::json::array();
  for (auto s : qp_status) { statuses.push_back(optim::to_string(s)); }
  j["qp_status"] = statuses;
  j["schedule_residual"] = schedule_residual;
  j["terminal_slack_used"] = terminal_slack_used;
  j["terminal_active"] = terminal_active;
  j["wall_time"] = with_timing ? nlohmann::json(wall_time) : nlohmann::json(nullptr);
  return j.dump();
}

CondensedQp condense_qp(
  const PredictionMatrices & pm, const Vec & z0, const Vec & r, const ControllerConfig & config,
  const TerminalIngredients & ti)
{
  const Eigen::Index nz = z0.size();
  require_dims(pm.psi.cols() == nz && pm.psi.rows() % nz == 0, "condense_qp: Psi does not match z0");
  const Eigen::Index N = pm.psi.rows() / nz;
  require_dims(pm.gamma.rows() == N * nz && pm.gamma.cols() % N == 0, "condense_qp: Gamma does not match Psi");
  const Eigen::Index m = pm.gamma.cols() / N;
  require_dims(r.size() == nz, "condense_qp: reference has wrong dimension");
  require_dims(config.Q.rows() == nz && config.R.rows() == m, "condense_qp: weights do not match the model");
  require_dims(ti.P.rows() == nz && ti.Z_T.dim() == nz, "condense_qp: terminal ingredients do not match the model");
  require_dims(config.Z.dim() == nz && config.dU.dim() == m, "condense_qp: constraint sets do not match the model");

  const bool soft = config.terminal_slack_weight > 0.0;
  const Eigen::Index nv = N * m + (soft ? 1 : 0);

  // Q̄ Γ and Q̄ e0 block by block.
  const Vec e0 = pm.psi * z0 - r.replicate(N, 1);
  Mat QG(N * nz, N * m);
  Vec Qe(N * nz);
  for (Eigen::Index i = 0; i < N; ++i) {
    const Mat & W = (i + 1 == N) ? ti.P : config.Q;
    QG.middleRows(i * nz, nz) = W * pm.gamma.middleRows(i * nz, nz);
    Qe.segment(i * nz, nz) = W * e0.segment(i * nz, nz);
  }

  Mat H = Mat::Zero(nv, nv);
  Vec f = Vec::Zero(nv);
  H.topLeftCorner(N * m, N * m) = pm.gamma.transpose() * QG;
  for (Eigen::Index i = 0; i < N; ++i) { H.block(i * m, i * m, m, m) += config.R; }
  f.head(N * m) = pm.gamma.transpose() * Qe;
  if (soft) { f(N * m) = config.terminal_slack_weight; }

  const Eigen::Index zr = config.Z.rows();
  const Eigen::Index ur = config.dU.rows();
  const Eigen::Index tr = ti.Z_T.rows();
  const Eigen::Index rows = N * zr + N * ur + tr + (soft ? 1 : 0);
  Mat A = Mat::Zero(rows, nv);
  Vec b(rows);
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < N; ++i) {
    A.block(at, 0, zr, N * m) = config.Z.A() * pm.gamma.middleRows(i * nz, nz);
    b.segment(at, zr) = config.Z.b() - config.Z.A() * pm.psi.middleRows(i * nz, nz) * z0;
    at += zr;
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    A.block(at, i * m, ur, m) = config.dU.A();
    b.segment(at, ur) = config.dU.b();
    at += ur;
  }
  const Eigen::Index terminal_row0 = at;
  A.block(at, 0, tr, N * m) = ti.Z_T.A() * pm.gamma.bottomRows(nz);
  b.segment(at, tr) = ti.Z_T.b() - ti.Z_T.A() * (pm.psi.bottomRows(nz) * z0 - r);
  if (soft) { A.block(at, N * m, tr, 1).setConstant(-1.0); }
  at += tr;
  if (soft) {
    A(at, N * m) = -1.0;
    b(at) = 0.0;
  }

  return {optim::QpProblem::make(H, f, A, b), N * m, terminal_row0};
}

namespace {

double stage_cost(const Vec & e, const Mat & W) { return e.dot(W * e); }

}  // namespace

SqpResult solve_sqp(
  const VelocityModel & model, const ControllerState & state, const Vec & x_k, const Vec & z0,
  const ControllerConfig & config, const TerminalIngredients & ti)
{
  const auto start = std::chrono::steady_clock::now();
  const auto dims = model.dims();
  const Eigen::Index n = dims.n;
  const Eigen::Index m = dims.m;
  const Eigen::Index nz = dims.nz();
  const auto N = static_cast<std::size_t>(config.N);
  require_dims(x_k.size() == n && z0.size() == nz && state.u_prev.size() == m, "solve_sqp: state dimensions");

  ScheduleSequence rho;
  if (state.warm_schedule && state.warm_schedule->rho.size() == N) {
    rho = shift_warm_start(*state.warm_schedule);
  } else {
    Vec p(n + m);
    p << x_k, state.u_prev;
    rho.rho.assign(N, p);
  }

  SqpResult res;
  Vec z_qp;
  for (int it = 1; it <= config.max_sqp_iters; ++it) {
    const PredictionMatrices pm = build_prediction_matrices(model, rho.rho);
    const CondensedQp cq = condense_qp(pm, z0, ti.r, config, ti);
    const auto sol = optim::solve_qp(cq.qp, config.qp);
    res.report.qp_status.push_back(sol.status);
    if (sol.status == optim::QpStatus::infeasible) {
      throw SolverError("condensed QP infeasible at SQP iteration " + std::to_string(it));
    }
    if (!sol.v.allFinite()) { throw SolverError("condensed QP returned a non-finite minimizer"); }
    res.du = sol.v.head(cq.num_du);
    res.report.terminal_slack_used = cq.num_du < sol.v.size() ? std::max(0.0, sol.v(cq.num_du)) : 0.0;
    z_qp = pm.psi * z0 + pm.gamma * res.du;
    {
      const Vec zN = z_qp.tail(nz) - ti.r;
      res.report.terminal_active = ti.Z_T.rows() > 0 && ti.Z_T.max_violation(zN) > -1e-6;
    }

    // Roll the model along its own schedule; states are recovered by summing increments.
    ScheduleSequence next;
    next.rho.reserve(N);
    res.z_pred.clear();
    Vec z = z0;
    Vec x = x_k;
    Vec u = state.u_prev;
    for (std::size_t j = 0; j < N; ++j) {
      const Vec du = res.du.segment(static_cast<Eigen::Index>(j) * m, m);
      u += du;
      Vec p(n + m);
      p << x, u;
      next.rho.push_back(p);
      const VelocityMatrices mats = model.matrices(x, u);
      z = mats.A * z + mats.B * du;
      x += z.tail(n);
      res.z_pred.push_back(z);
    }
    res.report.schedule_residual = (next.stacked() - rho.stacked()).norm();
    res.report.sqp_iterations = it;
    rho = std::move(next);
    if (res.report.schedule_residual <= config.eps) {
      res.report.converged = true;
      break;
    }
  }

  double V = stage_cost(z0 - ti.r, config.Q);
  for (std::size_t i = 0; i < N; ++i) {
    const Vec e = z_qp.segment(static_cast<Eigen::Index>(i) * nz, nz) - ti.r;
    V += stage_cost(e, i + 1 == N ? ti.P : config.Q);
    const Vec du = res.du.segment(static_cast<Eigen::Index>(i) * m, m);
    V += stage_cost(du, config.R);
  }
  res.report.cost = V;
  res.schedule = std::move(rho);
  res.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

SqpResult solve_vkdpc(
  const VelocityKernelModel & model, const ControllerState & state, const Vec & x_k, const Vec & z0,
  const ControllerConfig & config, const TerminalIngredients & ti)
{
  return solve_sqp(model, state, x_k, z0, config, ti);
}

SqpResult solve_vnmpc(
  const VelocityModel & analytic, const ControllerState & state, const Vec & x_k, const Vec & z0,
  const ControllerConfig & config, const TerminalIngredients & ti)
{
  return solve_sqp(analytic, state, x_k, z0, config, ti);
}

Controller::Controller(
  std::shared_ptr<const VelocityModel> model, ControllerConfig config, ReferenceMap reference_map,
  std::shared_ptr<TerminalCache> cache)
  : model_(std::move(model)), config_(std::move(config)), reference_map_(std::move(reference_map)),
    cache_(std::move(cache))
{
  if (!model_) { throw ConfigError("controller: model is required"); }
  const auto dims = model_->dims();
  config_.validate(dims);
  if (!cache_) {
    cache_ = std::make_shared<TerminalCache>(
      [model = model_, cfg = config_, map = reference_map_](double y_r) {
        const auto [x_r, u_r] = map(y_r);
        return synthesize_terminal(*model, x_r, u_r, y_r, cfg.Q, cfg.R, cfg.Z, cfg.dU);
      });
  }
  state_.u_prev = Vec::Zero(dims.m);
}

void Controller::set_initial_input(const Vec & u_init)
{
  require_dims(u_init.size() == model_->dims().m, "controller: initial input has wrong dimension");
  if (started_) { throw ConfigError("controller: initial input must be set before the first update"); }
  state_.u_prev = u_init;
}

ControlOutput Controller::control_update(const Vec & x_k, const Vec & y_prev, double y_r)
{
  const auto dims = model_->dims();
  require_dims(x_k.size() == dims.n && y_prev.size() == dims.p, "control_update: measurement has wrong dimension");
  if (!started_) {
    state_.x_prev = x_k;
    started_ = true;
  }
  ControlOutput out;
  out.z0 = ExtendedState{y_prev, x_k - state_.x_prev}.stacked();
  const auto ti = cache_->get(y_r);
  SqpResult res = solve_sqp(*model_, state_, x_k, out.z0, config_, *ti);
  out.du0 = res.du.head(dims.m);
  out.u = state_.u_prev + out.du0;
  out.report = std::move(res.report);
  out.report.step = step_++;
  out.z_pred = std::move(res.z_pred);

  state_.u_prev = out.u;
  state_.x_prev = x_k;
  state_.y_prev = y_prev;
  state_.warm_schedule = std::move(res.schedule);
  return out;
}

}  // namespace kvdpc
