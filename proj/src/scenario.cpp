#include "kvdpc/scenario.hpp"

#include <toml.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace kvdpc {

namespace {

// Default carrier for the identification input: levels inside +-1 held for
// 60..140 samples, 1000 samples per cycle.
std::vector<ExcitationConfig::Level> default_levels()
{
  // Short holds: the sampled pendulum is oscillatory-unstable near the bottom,
  // and long holds let carrier steps pump it over the top.
  return {{15, 0.6}, {10, -0.8}, {12, 1.0}, {7, -0.4}, {17, 0.2},
          {11, -1.0}, {13, 0.8}, {8, -0.6}, {16, 0.4}, {12, 0.0}};
}

void reject_unknown(const toml::table & t, const std::set<std::string> & allowed, const std::string & where)
{
  for (const auto & [key, _] : t) {
    const std::string k(key.str());
    if (!allowed.count(k)) { throw ConfigError("scenario: unknown key '" + k + "' in " + where); }
  }
}

const toml::table * sub_table(const toml::table & t, const char * key)
{
  const auto * node = t.get(key);
  if (!node) { return nullptr; }
  const auto * tbl = node->as_table();
  if (!tbl) { throw ConfigError(std::string("scenario: '") + key + "' must be a table"); }
  return tbl;
}

double get_double(const toml::table & t, const char * key, double fallback)
{
  const auto * node = t.get(key);
  if (!node) { return fallback; }
  if (auto v = node->value<double>()) { return *v; }
  throw ConfigError(std::string("scenario: '") + key + "' must be a number");
}

long get_long(const toml::table & t, const char * key, long fallback)
{
  const auto * node = t.get(key);
  if (!node) { return fallback; }
  if (node->is_integer()) { return static_cast<long>(*node->value<std::int64_t>()); }
  throw ConfigError(std::string("scenario: '") + key + "' must be an integer");
}

std::size_t get_count(const toml::table & t, const char * key, std::size_t fallback)
{
  const long v = get_long(t, key, static_cast<long>(fallback));
  if (v < 0) { throw ConfigError(std::string("scenario: '") + key + "' must be non-negative"); }
  return static_cast<std::size_t>(v);
}

std::vector<double> get_numbers(const toml::table & t, const char * key, std::vector<double> fallback)
{
  const auto * node = t.get(key);
  if (!node) { return fallback; }
  const auto * arr = node->as_array();
  if (!arr) { throw ConfigError(std::string("scenario: '") + key + "' must be an array of numbers"); }
  std::vector<double> out;
  for (const auto & el : *arr) {
    auto v = el.value<double>();
    if (!v) { throw ConfigError(std::string("scenario: '") + key + "' must be an array of numbers"); }
    out.push_back(*v);
  }
  return out;
}

Vec to_vec(const std::vector<double> & v)
{
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Mat diag_matrix(const std::vector<double> & d, Eigen::Index expect, const char * what)
{
  if (static_cast<Eigen::Index>(d.size()) != expect) {
    throw ConfigError(std::string("scenario: ") + what + " needs " + std::to_string(expect) + " entries");
  }
  return to_vec(d).asDiagonal();
}

template <typename F>
void each_table(const toml::table & root, const char * key, F && fn)
{
  const auto * node = root.get(key);
  if (!node) { return; }
  const auto * arr = node->as_array();
  if (!arr) { throw ConfigError(std::string("scenario: '") + key + "' must be an array of tables"); }
  for (const auto & el : *arr) {
    const auto * tbl = el.as_table();
    if (!tbl) { throw ConfigError(std::string("scenario: '") + key + "' entries must be tables"); }
    fn(*tbl);
  }
}

}  // namespace

double Scenario::reference_at(long step) const
{
  double y = references.empty() ? 0.0 : references.front().y_r;
  for (const auto & seg : references) {
    if (seg.start_step <= step) { y = seg.y_r; }
  }
  return y;
}

void Scenario::validate() const
{
  excitation.validate();
  if (duration < 0) { throw ConfigError("scenario: duration must be non-negative"); }
  if (references.empty()) { throw ConfigError("scenario: at least one reference segment is required"); }
  if (references.front().start_step != 0) { throw ConfigError("scenario: first reference segment must start at 0"); }
  for (std::size_t i = 1; i < references.size(); ++i) {
    if (references[i].start_step <= references[i - 1].start_step) {
      throw ConfigError("scenario: reference segments must have strictly increasing start steps");
    }
  }
  if (x0.size() != 2) { throw ConfigError("scenario: x0 must have 2 entries"); }
  if (identification.train_samples < 3) { throw ConfigError("scenario: train_samples must be at least 3"); }
  if (identification.validation_horizon < 1) { throw ConfigError("scenario: validation horizon must be at least 1"); }
  if (identification.center_stride < 1) { throw ConfigError("scenario: center_stride must be at least 1"); }
  if (identification.ridge < 0.0) { throw ConfigError("scenario: ridge must be non-negative"); }
  controller.validate(ModelDims{});
}

Scenario default_scenario()
{
  Scenario s;
  s.excitation.base_levels = default_levels();
  s.references = {{0, 0.5}, {200, -0.3}, {400, 0.0}};
  // Small enough that the loop stays well inside the state constraints.
  s.disturbance = DisturbanceProfile({{0, 0.0}, {100, 0.03}, {300, -0.02}, {500, 0.03}});
  return s;
}

Scenario parse_scenario(const std::string & toml_text, const std::string & source)
{
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error & e) {
    std::ostringstream os;
    os << "scenario: " << e.description() << " (" << e.source().begin << ")";
    throw ConfigError(os.str());
  }
  reject_unknown(
    root, {"seed", "duration", "plant", "excitation", "identification", "kernel", "controller", "reference",
           "disturbance"},
    "top level");

  Scenario s = default_scenario();
  s.seed = static_cast<std::uint64_t>(get_long(root, "seed", static_cast<long>(s.seed)));
  s.duration = get_long(root, "duration", s.duration);

  if (const auto * t = sub_table(root, "plant")) {
    reject_unknown(*t, {"mass", "length", "friction", "gravity", "ts", "x0"}, "[plant]");
    try {
      s.plant = PendulumParams(
        get_double(*t, "mass", s.plant.mass()), get_double(*t, "length", s.plant.length()),
        get_double(*t, "friction", s.plant.friction()), get_double(*t, "gravity", s.plant.gravity()),
        get_double(*t, "ts", s.plant.ts()));
    } catch (const std::invalid_argument & e) {
      throw ConfigError(std::string("scenario: [plant] ") + e.what());
    }
    s.x0 = to_vec(get_numbers(*t, "x0", {s.x0(0), s.x0(1)}));
  }

  if (const auto * t = sub_table(root, "excitation")) {
    reject_unknown(*t, {"amp_range", "band", "num_sines", "levels"}, "[excitation]");
    auto & ms = s.excitation.multisine;
    const auto amp = get_numbers(*t, "amp_range", {ms.amp_lo, ms.amp_hi});
    const auto band = get_numbers(*t, "band", {ms.band_lo, ms.band_hi});
    if (amp.size() != 2 || band.size() != 2) { throw ConfigError("scenario: amp_range and band need 2 entries"); }
    ms.amp_lo = amp[0];
    ms.amp_hi = amp[1];
    ms.band_lo = band[0];
    ms.band_hi = band[1];
    ms.num_sines = static_cast<int>(get_long(*t, "num_sines", ms.num_sines));
    if (t->get("levels")) {
      s.excitation.base_levels.clear();
      each_table(*t, "levels", [&](const toml::table & lv) {
        reject_unknown(lv, {"hold", "level"}, "[[excitation.levels]]");
        s.excitation.base_levels.push_back({get_long(lv, "hold", 0), get_double(lv, "level", 0.0)});
      });
    }
  }

  if (const auto * t = sub_table(root, "identification")) {
    reject_unknown(
      *t, {"train_samples", "validation_samples", "validation_horizon", "center_stride", "ridge"}, "[identification]");
    auto & id = s.identification;
    id.train_samples = get_count(*t, "train_samples", id.train_samples);
    id.validation_samples = get_count(*t, "validation_samples", id.validation_samples);
    id.validation_horizon = get_count(*t, "validation_horizon", id.validation_horizon);
    id.center_stride = get_count(*t, "center_stride", id.center_stride);
    id.ridge = get_double(*t, "ridge", id.ridge);
  }

  if (const auto * t = sub_table(root, "kernel")) {
    reject_unknown(*t, {"family", "sigma2"}, "[kernel]");
    KernelFamily fam = s.kernel.family;
    if (const auto * node = t->get("family")) {
      auto name = node->value<std::string>();
      if (!name) { throw ConfigError("scenario: kernel family must be a string"); }
      try {
        fam = kernel_family_from_string(*name);
      } catch (const std::invalid_argument & e) {
        throw ConfigError(std::string("scenario: ") + e.what());
      }
    }
    try {
      s.kernel = KernelSpec(fam, get_double(*t, "sigma2", s.kernel.sigma2));
    } catch (const std::invalid_argument & e) {
      throw ConfigError(std::string("scenario: [kernel] ") + e.what());
    }
  }

  if (const auto * t = sub_table(root, "controller")) {
    reject_unknown(
      *t, {"N", "Q_diag", "R_diag", "eps", "max_sqp_iters", "z_bound", "du_bound", "terminal_slack_weight"},
      "[controller]");
    auto & c = s.controller;
    const ModelDims dims;
    c.N = static_cast<int>(get_long(*t, "N", c.N));
    if (t->get("Q_diag")) { c.Q = diag_matrix(get_numbers(*t, "Q_diag", {}), dims.nz(), "Q_diag"); }
    if (t->get("R_diag")) { c.R = diag_matrix(get_numbers(*t, "R_diag", {}), dims.m, "R_diag"); }
    c.eps = get_double(*t, "eps", c.eps);
    c.max_sqp_iters = static_cast<int>(get_long(*t, "max_sqp_iters", c.max_sqp_iters));
    if (t->get("z_bound")) {
      const auto zb = get_numbers(*t, "z_bound", {});
      if (static_cast<Eigen::Index>(zb.size()) != dims.nz()) { throw ConfigError("scenario: z_bound needs 3 entries"); }
      c.Z = Polytope::symmetric_box(to_vec(zb));
    }
    if (t->get("du_bound")) {
      const auto ub = get_numbers(*t, "du_bound", {});
      if (static_cast<Eigen::Index>(ub.size()) != dims.m) { throw ConfigError("scenario: du_bound needs 1 entry"); }
      c.dU = Polytope::symmetric_box(to_vec(ub));
    }
    c.terminal_slack_weight = get_double(*t, "terminal_slack_weight", c.terminal_slack_weight);
  }

  if (root.get("reference")) {
    s.references.clear();
    each_table(root, "reference", [&](const toml::table & r) {
      reject_unknown(r, {"start", "y_r"}, "[[reference]]");
      s.references.push_back({get_long(r, "start", 0), get_double(r, "y_r", 0.0)});
    });
  }
  if (root.get("disturbance")) {
    std::vector<DisturbanceProfile::Segment> segs;
    each_table(root, "disturbance", [&](const toml::table & r) {
      reject_unknown(r, {"start", "value"}, "[[disturbance]]");
      segs.push_back({get_long(r, "start", 0), get_double(r, "value", 0.0)});
    });
    try {
      s.disturbance = DisturbanceProfile(std::move(segs));
    } catch (const std::invalid_argument & e) {
      throw ConfigError(std::string("scenario: ") + e.what());
    }
  }

  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) { throw ConfigError("scenario: cannot open " + path.string()); }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path.string());
}

}  // namespace kvdpc
