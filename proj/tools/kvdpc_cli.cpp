// Command-line front end: data generation, fitting, validation, terminal
// synthesis and closed-loop simulation for the pendulum benchmark.

#include "kvdpc/analytic_velocity.hpp"
#include "kvdpc/artifacts.hpp"
#include "kvdpc/blas_env.hpp"
#include "kvdpc/harness.hpp"
#include "kvdpc/scenario.hpp"
#include "kvdpc/simd.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace kvdpc;

namespace {

struct Common
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long> duration;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> stride;
  std::string simd = "auto";
  std::string out = "out";
};

void add_common(CLI::App & cmd, Common & c)
{
  cmd.add_option("-c,--config", c.config, "Scenario TOML file (built-in defaults when omitted)");
  cmd.add_option("--seed", c.seed, "Override the scenario seed");
  cmd.add_option("--duration", c.duration, "Override the closed-loop duration in steps");
  cmd.add_option("--samples", c.samples, "Override the number of training samples");
  cmd.add_option("--stride", c.stride, "Override the kernel center stride");
  cmd.add_option("--simd", c.simd, "Kernel backend: auto, scalar or avx2")->check(CLI::IsMember({"auto", "scalar", "avx2"}));
  cmd.add_option("-o,--out", c.out, "Output directory");
}

Scenario load(const Common & c)
{
  if (c.simd == "scalar") { simd::set_active_level(simd::Level::scalar); }
  if (c.simd == "avx2") { simd::set_active_level(simd::Level::avx2); }
  Scenario s = c.config.empty() ? default_scenario() : load_scenario(c.config);
  if (c.seed) { s.seed = *c.seed; }
  if (c.duration) { s.duration = *c.duration; }
  if (c.samples) { s.identification.train_samples = *c.samples; }
  if (c.stride) { s.identification.center_stride = *c.stride; }
  s.validate();
  return s;
}

Dataset read_csv(const std::string & path)
{
  std::ifstream in(path);
  if (!in) { throw ConfigError("cannot open " + path); }
  return read_dataset_csv(in);
}

std::shared_ptr<const VelocityKernelModel> model_or_fit(const Scenario & s, const std::string & path)
{
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) { throw ConfigError("cannot open " + path); }
    return load_model_json(in);
  }
  const auto fit = fit_from_data(s, make_training_data(s));
  if (!fit.rank.full_rank()) { std::cerr << "warning: regressor stacks are rank deficient\n"; }
  return fit.model;
}

}  // namespace

int main(int argc, char ** argv)
{
  ensure_tuned_blas(argv);
  CLI::App app{"Offset-free kernelized velocity-form predictive control toolkit"};
  app.require_subcommand(1);

  Common c;
  std::string data_path;
  std::string model_path;
  std::string variant = "vkdpc";
  double y_r = 0.5;
  bool record_timing = false;
  bool stamp = false;
  bool sequential = false;

  auto * gen = app.add_subcommand("generate-data", "Write training and validation datasets");
  add_common(*gen, c);

  auto * fit = app.add_subcommand("fit", "Fit the kernel velocity model and save it as JSON");
  add_common(*fit, c);
  fit->add_option("--data", data_path, "Training CSV (generated from the scenario when omitted)");

  auto * val = app.add_subcommand("validate", "Multi-step open-loop validation");
  add_common(*val, c);
  val->add_option("--model", model_path, "Model JSON (fitted from the scenario when omitted)");
  val->add_option("--data", data_path, "Validation CSV (generated from the scenario when omitted)");

  auto * term = app.add_subcommand("terminal", "Terminal ingredients and certificate for one reference");
  add_common(*term, c);
  term->add_option("--model", model_path, "Model JSON (fitted from the scenario when omitted)");
  term->add_option("--yr", y_r, "Output reference");

  auto * sim = app.add_subcommand("simulate", "Closed-loop simulation of one controller");
  add_common(*sim, c);
  sim->add_option("--variant", variant, "vkdpc or vnmpc")->check(CLI::IsMember({"vkdpc", "vnmpc"}));
  sim->add_option("--model", model_path, "Model JSON (fitted from the scenario when omitted)");

  auto * cmp = app.add_subcommand("compare", "Run both controllers on the same realization and emit all artifacts");
  add_common(*cmp, c);
  cmp->add_option("--model", model_path, "Model JSON (fitted from the scenario when omitted)");
  cmp->add_flag("--sequential", sequential, "Do not run the two controllers concurrently");

  for (auto * sc : {sim, cmp, val, term}) {
    sc->add_flag("--record-timing", record_timing, "Write measured wall times into the outputs");
    sc->add_flag("--stamp", stamp, "Embed a timestamp in SVG outputs");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const ArtifactOptions aopts{record_timing, stamp};
  try {
    const Scenario s = load(c);
    const fs::path out(c.out);

    if (*gen) {
      {
        auto os = open_output(out / "train.csv");
        write_dataset_csv(os, make_training_data(s));
      }
      auto os = open_output(out / "validation_data.csv");
      write_dataset_csv(os, make_validation_data(s));
      std::cout << "wrote " << (out / "train.csv").string() << " and " << (out / "validation_data.csv").string() << '\n';
    } else if (*fit) {
      const Dataset data = data_path.empty() ? make_training_data(s) : read_csv(data_path);
      const auto t0 = std::chrono::steady_clock::now();
      const FitResult res = fit_from_data(s, data);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      auto os = open_output(out / "model.json");
      save_model_json(os, *res.model);
      std::cout << "samples " << data.samples() << ", Kx rank " << res.rank.kx_rank << '/' << res.rank.kx_full
                << ", Ky rank " << res.rank.ky_rank << '/' << res.rank.ky_full << ", residuals " << res.kx_residual
                << ' ' << res.ky_residual << ", " << secs << " s\n";
      if (!res.rank.full_rank()) { std::cerr << "warning: regressor stacks are rank deficient\n"; }
    } else if (*val) {
      const auto model = model_or_fit(s, model_path);
      const Dataset data = data_path.empty() ? make_validation_data(s) : read_csv(data_path);
      const auto v = validate_open_loop(*model, data, s.identification.validation_horizon);
      {
        auto os = open_output(out / "validation.csv");
        write_validation_csv(os, v);
      }
      auto os = open_output(out / "validation.svg");
      write_validation_svg(os, v, aopts);
      std::cout << "rmse " << v.rmse << " rad over " << v.k.size() << " predictions\n";
    } else if (*term) {
      const auto model = model_or_fit(s, model_path);
      const AnalyticVelocityModel analytic(s.plant);
      Vec x_r(2);
      x_r << 0.0, y_r;
      const Vec u_r = Vec::Constant(1, s.plant.equilibrium_input(y_r));
      const auto & cfg = s.controller;
      const auto tk = synthesize_terminal(*model, x_r, u_r, y_r, cfg.Q, cfg.R, cfg.Z, cfg.dU);
      const auto ta = synthesize_terminal(analytic, x_r, u_r, y_r, cfg.Q, cfg.R, cfg.Z, cfg.dU);
      {
        auto os = open_output(out / "terminal_set.csv");
        write_halfspaces_csv(os, tk.Z_T);
      }
      {
        auto os = open_output(out / "terminal_set_vertices.csv");
        write_vertices_csv(os, tk.Z_T);
      }
      {
        auto os = open_output(out / "terminal_set_analytic.csv");
        write_halfspaces_csv(os, ta.Z_T);
      }
      {
        auto os = open_output(out / "terminal_slice.svg");
        write_terminal_slice_svg(os, {{"kernel model", tk.Z_T}, {"analytic model", ta.Z_T}}, aopts);
      }
      const auto ck = check_terminal_conditions(tk, cfg.Q, cfg.R);
      const auto ca = check_terminal_conditions(ta, cfg.Q, cfg.R);
      std::cout << "kernel:   " << tk.Z_T.rows() << " rows, " << (ck.ok() ? "certified" : "FAILED") << " (" << ck.summary()
                << ")\n"
                << "analytic: " << ta.Z_T.rows() << " rows, " << (ca.ok() ? "certified" : "FAILED") << " (" << ca.summary()
                << ")\n"
                << "hausdorff " << hausdorff_distance(tk.Z_T, ta.Z_T) << ", analytic diameter " << diameter(ta.Z_T)
                << '\n';
      if (!ck.ok() || !ca.ok()) { return 3; }
    } else if (*sim) {
      const Variant v = variant_from_string(variant);
      const auto model = v == Variant::vkdpc ? model_or_fit(s, model_path) : nullptr;
      const auto log = run_closed_loop(s, v, model);
      const auto m = compute_metrics(log, s);
      {
        auto os = open_output(out / ("trajectories_" + variant + ".csv"));
        write_trajectories_csv(os, log, record_timing);
      }
      {
        auto os = open_output(out / ("reports_" + variant + ".jsonl"));
        write_reports_jsonl(os, log, record_timing);
      }
      {
        auto os = open_output(out / "metrics.json");
        os << metrics_json(m, record_timing) << '\n';
      }
      auto os = open_output(out / "closed_loop.svg");
      write_closed_loop_svg(os, {&log}, aopts);
      std::cout << variant << ": mean SQP iterations " << m.mean_iters << ", max " << m.max_iters << '\n';
    } else if (*cmp) {
      ComparisonOptions copts;
      copts.parallel = !sequential;
      if (!model_path.empty()) { copts.model = model_or_fit(s, model_path); }
      const auto run = run_comparison(s, copts);
      const auto files = write_comparison_artifacts(run, s, out, aopts);
      std::cout << "validation rmse " << run.validation.rmse << " rad\n"
                << "mean SQP iterations: vkdpc " << run.metrics_vkdpc.mean_iters << ", vnmpc "
                << run.metrics_vnmpc.mean_iters << '\n'
                << "max output deviation " << run.output_deviation << " rad\n"
                << "wrote " << files.size() << " files to " << out.string() << '\n';
    }
  } catch (const SimulationError & e) {
    std::cerr << "solver failure at step " << e.step() << ": " << e.what() << '\n';
    return 3;
  } catch (const SolverError & e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument & e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
