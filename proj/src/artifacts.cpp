#include "kvdpc/artifacts.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace kvdpc {

std::ofstream open_output(const std::filesystem::path & path)
{
  std::error_code ec;
  if (path.has_parent_path()) { std::filesystem::create_directories(path.parent_path(), ec); }
  std::ofstream os(path, std::ios::binary);
  if (!os) { throw ConfigError("cannot write " + path.string()); }
  return os;
}

void write_trajectories_csv(std::ostream & os, const SimulationLog & log, bool record_timing)
{
  os << "k,x1,x2,u,du,y,yr,d,V,iters,ms\n" << std::setprecision(17);
  for (const auto & r : log.records) {
    os << r.k << ',' << r.x(0) << ',' << r.x(1) << ',' << r.u << ',' << r.du << ',' << r.y << ',' << r.y_r << ','
       << r.d << ',' << r.V << ',' << r.iters << ',' << (record_timing ? 1e3 * r.wall_time : 0.0) << '\n';
  }
}

void write_reports_jsonl(std::ostream & os, const SimulationLog & log, bool record_timing)
{
  for (const auto & rep : log.reports) { os << rep.to_json_line(record_timing) << '\n'; }
}

// ---------------------------------------------------------------------------
// Minimal SVG line charts.

namespace {

struct Series
{
  std::vector<double> x;
  std::vector<double> y;
  std::string color;
  std::string label;
  bool dashed = false;
};

struct Panel
{
  std::string ylabel;
  std::vector<Series> series;
};

std::string esc(const std::string & s)
{
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

void svg_open(std::ostream & os, int w, int h, const std::string & title, const ArtifactOptions & opts)
{
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  if (opts.stamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    os << "<!-- generated " << buf << " -->\n";
  }
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << w / 2 << "\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">" << esc(title) << "</text>\n";
}

struct Box
{
  double x0, y0, w, h;
  double xmin, xmax, ymin, ymax;
  double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
  double py(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

void limits(const std::vector<Series> & series, double & lo, double & hi, bool use_x)
{
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const auto & s : series) {
    for (double v : use_x ? s.x : s.y) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!std::isfinite(lo)) { lo = 0.0, hi = 1.0; }
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  } else if (!use_x) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
}

void draw_axes(std::ostream & os, const Box & b, const std::string & xlabel, const std::string & ylabel)
{
  os << "<rect x=\"" << num(b.x0) << "\" y=\"" << num(b.y0) << "\" width=\"" << num(b.w) << "\" height=\"" << num(b.h)
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = b.xmin + (b.xmax - b.xmin) * i / 4.0;
    const double yv = b.ymin + (b.ymax - b.ymin) * i / 4.0;
    os << "<line x1=\"" << num(b.px(xv)) << "\" y1=\"" << num(b.y0) << "\" x2=\"" << num(b.px(xv)) << "\" y2=\""
       << num(b.y0 + b.h) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << num(b.px(xv)) << "\" y=\"" << num(b.y0 + b.h + 13) << "\" text-anchor=\"middle\">"
       << tick(xv) << "</text>\n";
    os << "<line x1=\"" << num(b.x0) << "\" y1=\"" << num(b.py(yv)) << "\" x2=\"" << num(b.x0 + b.w) << "\" y2=\""
       << num(b.py(yv)) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << num(b.x0 - 4) << "\" y=\"" << num(b.py(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
       << "</text>\n";
  }
  if (!xlabel.empty()) {
    os << "<text x=\"" << num(b.x0 + b.w / 2) << "\" y=\"" << num(b.y0 + b.h + 27) << "\" text-anchor=\"middle\">"
       << esc(xlabel) << "</text>\n";
  }
  os << "<text x=\"" << num(b.x0 - 45) << "\" y=\"" << num(b.y0 + b.h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 "
     << num(b.x0 - 45) << ' ' << num(b.y0 + b.h / 2) << ")\">" << esc(ylabel) << "</text>\n";
}

void draw_series(std::ostream & os, const Box & b, const Series & s)
{
  os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.3\"";
  if (s.dashed) { os << " stroke-dasharray=\"5,3\""; }
  os << " points=\"";
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    os << (i ? " " : "") << num(b.px(s.x[i])) << ',' << num(b.py(s.y[i]));
  }
  os << "\"/>\n";
}

void draw_legend(std::ostream & os, const Box & b, const std::vector<Series> & series)
{
  double y = b.y0 + 12;
  for (const auto & s : series) {
    if (s.label.empty()) { continue; }
    const double x = b.x0 + b.w - 110;
    os << "<line x1=\"" << num(x) << "\" y1=\"" << num(y - 4) << "\" x2=\"" << num(x + 18) << "\" y2=\"" << num(y - 4)
       << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "")
       << "/>\n<text x=\"" << num(x + 22) << "\" y=\"" << num(y) << "\">" << esc(s.label) << "</text>\n";
    y += 14;
  }
}

void render_panels(
  std::ostream & os, const std::string & title, const std::string & xlabel, const std::vector<Panel> & panels,
  const ArtifactOptions & opts)
{
  const int width = 820;
  const int panel_h = 170;
  const int gap = 45;
  const int top = 30;
  const int height = top + static_cast<int>(panels.size()) * (panel_h + gap) + 10;
  svg_open(os, width, height, title, opts);
  for (std::size_t i = 0; i < panels.size(); ++i) {
    Box b{70.0, static_cast<double>(top + static_cast<int>(i) * (panel_h + gap)), width - 90.0, double(panel_h),
          0, 0, 0, 0};
    limits(panels[i].series, b.xmin, b.xmax, true);
    limits(panels[i].series, b.ymin, b.ymax, false);
    draw_axes(os, b, i + 1 == panels.size() ? xlabel : "", panels[i].ylabel);
    for (const auto & s : panels[i].series) { draw_series(os, b, s); }
    draw_legend(os, b, panels[i].series);
  }
  os << "</svg>\n";
}

std::vector<double> as_doubles(const std::vector<std::size_t> & v)
{
  return {v.begin(), v.end()};
}

/// 2D slice {(a, b) : (0, a, b) in P} as an angularly sorted vertex loop.
std::vector<Vec> slice_polygon(const Polytope & p)
{
  if (p.dim() < 3) { return p.vertices(); }
  const Polytope slice(p.A().middleCols(1, 2), p.b());
  auto verts = slice.vertices();
  if (verts.empty()) { return verts; }
  Vec c = Vec::Zero(2);
  for (const auto & v : verts) { c += v; }
  c /= static_cast<double>(verts.size());
  std::sort(verts.begin(), verts.end(), [&](const Vec & a, const Vec & b) {
    return std::atan2(a(1) - c(1), a(0) - c(0)) < std::atan2(b(1) - c(1), b(0) - c(0));
  });
  return verts;
}

}  // namespace

void write_validation_svg(std::ostream & os, const ValidationResult & v, const ArtifactOptions & opts)
{
  const auto k = as_doubles(v.k);
  Panel top{"y [rad]", {{k, v.y, "#1f77b4", "measured", false}, {k, v.y_hat, "#ff7f0e", "predicted", true}}};
  Panel bottom{"error [rad]", {{k, v.e, "#d62728", "y - y_hat", false}}};
  render_panels(os, "Open-loop multi-step prediction", "k", {top, bottom}, opts);
}

void write_terminal_slice_svg(
  std::ostream & os, const std::vector<std::pair<std::string, Polytope>> & sets, const ArtifactOptions & opts)
{
  static const char * colors[] = {"#ff7f0e", "#1f77b4", "#2ca02c", "#9467bd"};
  std::vector<Series> series;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    Series s;
    s.color = colors[i % 4];
    s.label = sets[i].first;
    s.dashed = i % 2 == 1;
    const auto poly = slice_polygon(sets[i].second);
    for (const auto & v : poly) {
      s.x.push_back(v(0));
      s.y.push_back(v(1));
    }
    if (!poly.empty()) {
      s.x.push_back(poly.front()(0));
      s.y.push_back(poly.front()(1));
    }
    series.push_back(std::move(s));
  }
  const int size = 520;
  svg_open(os, size, size, "Terminal set slice at y_prev - y_r = 0", opts);
  Box b{70.0, 30.0, size - 100.0, size - 90.0, 0, 0, 0, 0};
  limits(series, b.xmin, b.xmax, true);
  limits(series, b.ymin, b.ymax, false);
  const double padx = 0.05 * (b.xmax - b.xmin);
  b.xmin -= padx;
  b.xmax += padx;
  draw_axes(os, b, "dx1 - 0", "dx2 - 0");
  for (const auto & s : series) {
    os << "<polygon fill=\"" << s.color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) { os << (i ? " " : "") << num(b.px(s.x[i])) << ',' << num(b.py(s.y[i])); }
    os << "\"/>\n";
    draw_series(os, b, s);
  }
  draw_legend(os, b, series);
  os << "</svg>\n";
}

void write_closed_loop_svg(std::ostream & os, const std::vector<const SimulationLog *> & logs, const ArtifactOptions & opts)
{
  Panel py{"y [rad]", {}};
  Panel pu{"u", {}};
  Panel pdu{"du", {}};
  Panel pd{"d", {}};
  for (const auto * log : logs) {
    const bool kern = log->variant == Variant::vkdpc;
    const std::string color = kern ? "#ff7f0e" : "#1f77b4";
    Series y{{}, {}, color, to_string(log->variant), !kern};
    Series u = y;
    Series du = y;
    for (const auto & r : log->records) {
      const double t = static_cast<double>(r.k);
      y.x.push_back(t), y.y.push_back(r.y);
      u.x.push_back(t), u.y.push_back(r.u);
      du.x.push_back(t), du.y.push_back(r.du);
    }
    py.series.push_back(y);
    pu.series.push_back(u);
    pdu.series.push_back(du);
  }
  if (!logs.empty()) {
    Series ref{{}, {}, "#000000", "reference", true};
    Series dist{{}, {}, "#2ca02c", "disturbance", false};
    for (const auto & r : logs.front()->records) {
      ref.x.push_back(static_cast<double>(r.k)), ref.y.push_back(r.y_r);
      dist.x.push_back(static_cast<double>(r.k)), dist.y.push_back(r.d);
    }
    py.series.push_back(ref);
    pd.series.push_back(dist);
  }
  render_panels(os, "Closed-loop tracking", "k", {py, pu, pdu, pd}, opts);
}

namespace {

nlohmann::json metrics_object(const Metrics & m, bool record_timing)
{
  using nlohmann::json;
  json j;
  j["variant"] = to_string(m.variant);
  j["steps"] = m.steps;
  const bool empty = m.steps == 0;
  auto segs = json::array();
  for (const auto & s : m.segments) {
    segs.push_back({{"start", s.start}, {"end", s.end}, {"y_r", s.y_r}, {"d", s.d}, {"abs_error", s.abs_error}});
  }
  j["segments"] = segs;
  j["mean_sqp_iterations"] = empty ? json(nullptr) : json(m.mean_iters);
  j["max_sqp_iterations"] = empty ? json(nullptr) : json(m.max_iters);
  j["nonconverged_steps"] = m.nonconverged_steps;
  j["mean_wall_time_s"] = (empty || !record_timing) ? json(nullptr) : json(m.mean_wall_time);
  j["max_wall_time_s"] = (empty || !record_timing) ? json(nullptr) : json(m.max_wall_time);
  j["max_constraint_violation"] = empty ? json(nullptr) : json(m.max_constraint_violation);
  j["terminal_active_steps"] = m.terminal_active_steps;
  j["value_decrease_steps"] = m.descent_steps;
  j["value_decrease_violations"] = m.descent_violations;
  j["value_decrease_violation_fraction"] = m.descent_steps ? json(m.descent_violation_fraction) : json(nullptr);
  return j;
}

nlohmann::json certificate_object(const CertificateReport & c)
{
  return {{"ok", c.ok()},        {"slack_invariance", c.slack_a}, {"slack_input", c.slack_b},
          {"slack_state", c.slack_c}, {"slack_lyapunov", c.slack_d},  {"points_checked", c.points_checked}};
}

}  // namespace

std::string metrics_json(const Metrics & m, bool record_timing)
{
  return metrics_object(m, record_timing).dump(2);
}

std::vector<std::string> write_comparison_artifacts(
  const ComparisonRun & run, const Scenario & scenario, const std::filesystem::path & dir, const ArtifactOptions & opts)
{
  std::vector<std::string> files;
  auto emit = [&](const std::string & name, auto && body) {
    auto os = open_output(dir / name);
    body(os);
    if (!os) { throw ConfigError("failed writing " + (dir / name).string()); }
    files.push_back(name);
  };

  emit("trajectories_vkdpc.csv", [&](std::ostream & os) { write_trajectories_csv(os, run.log_vkdpc, opts.record_timing); });
  emit("trajectories_vnmpc.csv", [&](std::ostream & os) { write_trajectories_csv(os, run.log_vnmpc, opts.record_timing); });
  emit("reports_vkdpc.jsonl", [&](std::ostream & os) { write_reports_jsonl(os, run.log_vkdpc, opts.record_timing); });
  emit("reports_vnmpc.jsonl", [&](std::ostream & os) { write_reports_jsonl(os, run.log_vnmpc, opts.record_timing); });
  emit("validation.csv", [&](std::ostream & os) { write_validation_csv(os, run.validation); });
  emit("terminal_set.csv", [&](std::ostream & os) { write_halfspaces_csv(os, run.terminal_kernel.Z_T); });
  emit("terminal_set_vertices.csv", [&](std::ostream & os) { write_vertices_csv(os, run.terminal_kernel.Z_T); });
  emit("terminal_set_analytic.csv", [&](std::ostream & os) { write_halfspaces_csv(os, run.terminal_analytic.Z_T); });
  emit("terminal_set_analytic_vertices.csv", [&](std::ostream & os) {
    write_vertices_csv(os, run.terminal_analytic.Z_T);
  });

  using nlohmann::json;
  json j;
  j["seed"] = scenario.seed;
  j["duration"] = scenario.duration;
  j["fit"] = {
    {"train_samples", run.train.samples()},
    {"kx_rank", run.fit.rank.kx_rank},
    {"kx_full", run.fit.rank.kx_full},
    {"ky_rank", run.fit.rank.ky_rank},
    {"ky_full", run.fit.rank.ky_full},
    {"kx_residual", run.fit.kx_residual},
    {"ky_residual", run.fit.ky_residual},
    {"seconds", opts.record_timing ? json(run.fit_seconds) : json(nullptr)}};
  j["validation"] = {
    {"samples", run.validation_data.samples()},
    {"horizon", scenario.identification.validation_horizon},
    {"rmse", run.validation.rmse}};
  j["terminal"] = {
    {"y_r", run.terminal_kernel.y_r},
    {"kernel", certificate_object(run.certificate_kernel)},
    {"analytic", certificate_object(run.certificate_analytic)},
    {"kernel_rows", run.terminal_kernel.Z_T.rows()},
    {"analytic_rows", run.terminal_analytic.Z_T.rows()},
    {"hausdorff", run.terminal_hausdorff},
    {"analytic_diameter", run.terminal_diameter}};
  j["vkdpc"] = metrics_object(run.metrics_vkdpc, opts.record_timing);
  j["vnmpc"] = metrics_object(run.metrics_vnmpc, opts.record_timing);
  j["vkdpc"]["worst_scheduled_lyapunov_slack"] = run.scheduled_slack_vkdpc;
  j["vnmpc"]["worst_scheduled_lyapunov_slack"] = run.scheduled_slack_vnmpc;
  j["max_output_deviation"] = run.output_deviation;
  emit("metrics.json", [&](std::ostream & os) { os << j.dump(2) << '\n'; });

  emit("validation.svg", [&](std::ostream & os) { write_validation_svg(os, run.validation, opts); });
  emit("terminal_slice.svg", [&](std::ostream & os) {
    write_terminal_slice_svg(os, {{"kernel model", run.terminal_kernel.Z_T}, {"analytic model", run.terminal_analytic.Z_T}}, opts);
  });
  emit("closed_loop.svg", [&](std::ostream & os) { write_closed_loop_svg(os, {&run.log_vkdpc, &run.log_vnmpc}, opts); });
  return files;
}

}  // namespace kvdpc
