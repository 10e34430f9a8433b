#include "kvdpc/plant.hpp"

#include "kvdpc/error.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace kvdpc {

PendulumParams::PendulumParams(double mass, double length, double friction, double gravity, double ts)
    : mass_(mass), length_(length), friction_(friction), gravity_(gravity), ts_(ts),
      inertia_(mass * length * length / 3.0)
{
  if (!(ts > 0.0)) { throw ConfigError("pendulum: sampling time must be positive"); }
  if (!(mass > 0.0)) { throw ConfigError("pendulum: mass must be positive"); }
  if (!(length > 0.0)) { throw ConfigError("pendulum: length must be positive"); }
  if (!(friction >= 0.0)) { throw ConfigError("pendulum: friction must be non-negative"); }
}

double PendulumParams::equilibrium_input(double y_r) const
{
  return mass_ * gravity_ * length_ / 2.0 * std::sin(y_r);
}

DisturbanceProfile::DisturbanceProfile(std::vector<Segment> segments) : segments_(std::move(segments))
{
  if (segments_.empty() || segments_.front().start_step != 0) {
    throw ConfigError("disturbance: first segment must start at step 0");
  }
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    if (segments_[i].start_step <= segments_[i - 1].start_step) {
      throw ConfigError("disturbance: segment start steps must be strictly increasing");
    }
  }
}

double DisturbanceProfile::at(long step) const
{
  double value = segments_.front().value;
  for (const auto & s : segments_) {
    if (s.start_step > step) { break; }
    value = s.value;
  }
  return value;
}

void ExcitationConfig::validate() const
{
  if (multisine.num_sines < 1) { throw ConfigError("excitation: num_sines must be at least 1"); }
  if (!(multisine.band_hi > multisine.band_lo)) { throw ConfigError("excitation: empty frequency band"); }
  if (multisine.band_lo < 0.0 || multisine.band_hi > 1.0) {
    throw ConfigError("excitation: band must lie in [0, 1] (fraction of Nyquist)");
  }
  if (multisine.amp_hi < multisine.amp_lo) { throw ConfigError("excitation: amplitude range is inverted"); }
  for (const auto & l : base_levels) {
    if (l.hold_steps < 1) { throw ConfigError("excitation: hold_steps must be positive"); }
    if (std::abs(l.level) > 1.0) { throw ConfigError("excitation: carrier levels must lie within +-1"); }
  }
}

void Dataset::check_consistent() const
{
  const auto rows = x.size();
  if (u.size() != rows || y.size() != rows || d.size() != rows) {
    throw DimensionError("dataset: sequences differ in length");
  }
}

PlantStep pendulum_step(const PendulumParams & p, const Vec & x, double u, double d)
{
  require_dims(x.size() == 2, "pendulum_step: state must have two entries");
  const double ts = p.ts();
  const double j = p.inertia();
  Vec next(2);
  next(0) = (1.0 - p.friction() * ts / j) * x(0) + ts / j * u
    - p.mass() * p.length() * p.gravity() * ts / (2.0 * j) * std::sin(x(1)) + d;
  next(1) = ts * x(0) + x(1);
  return {next, x(1)};
}

std::vector<double> generate_excitation(const ExcitationConfig & config, std::size_t length, std::uint64_t seed)
{
  config.validate();
  if (length < 1) { throw ConfigError("excitation: length must be at least 1"); }

  std::vector<double> carrier(length, 0.0);
  if (!config.base_levels.empty()) {
    std::size_t k = 0;
    while (k < length) {
      for (const auto & lvl : config.base_levels) {
        for (long h = 0; h < lvl.hold_steps && k < length; ++h) { carrier[k++] = lvl.level; }
        if (k >= length) { break; }
      }
    }
  }

  const auto & ms = config.multisine;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::vector<double> freq(ms.num_sines);
  std::vector<double> phase(ms.num_sines);
  for (int i = 0; i < ms.num_sines; ++i) {
    // Interior points of the band, so neither DC nor Nyquist is hit exactly.
    const double frac = static_cast<double>(i + 1) / static_cast<double>(ms.num_sines + 1);
    freq[i] = ms.band_lo + frac * (ms.band_hi - ms.band_lo);
    phase[i] = phase_dist(rng);
  }

  std::vector<double> raw(length, 0.0);
  for (std::size_t k = 0; k < length; ++k) {
    double acc = 0.0;
    for (int i = 0; i < ms.num_sines; ++i) {
      acc += std::sin(std::numbers::pi * freq[i] * static_cast<double>(k) + phase[i]);
    }
    raw[k] = acc;
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : raw) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  std::vector<double> out(length);
  const double span = hi - lo;
  for (std::size_t k = 0; k < length; ++k) {
    double dither = 0.5 * (ms.amp_lo + ms.amp_hi);
    if (span > 0.0) { dither = ms.amp_lo + (raw[k] - lo) / span * (ms.amp_hi - ms.amp_lo); }
    if (ms.amp_lo == ms.amp_hi) { dither = ms.amp_lo; }
    out[k] = carrier[k] + dither;
  }
  return out;
}

Dataset collect_dataset(
  const PendulumParams & params,
  const std::vector<double> & inputs,
  const Vec & x0,
  const DisturbanceProfile & disturbance)
{
  if (inputs.empty()) { throw ConfigError("collect_dataset: no inputs"); }
  require_dims(x0.size() == 2, "collect_dataset: x0 must have two entries");
  Dataset data;
  const std::size_t s = inputs.size();
  data.x.reserve(s + 1);
  data.x.push_back(x0);
  for (std::size_t k = 0; k < s; ++k) {
    const double dk = disturbance.at(static_cast<long>(k));
    const auto step = pendulum_step(params, data.x.back(), inputs[k], dk);
    data.u.push_back(inputs[k]);
    data.d.push_back(dk);
    data.y.push_back(step.y);
    data.x.push_back(step.x_next);
  }
  data.u.push_back(inputs.back());
  data.d.push_back(data.d.back());
  data.y.push_back(data.x.back()(1));
  return data;
}

void write_dataset_csv(std::ostream & os, const Dataset & data)
{
  data.check_consistent();
  os << "k,x1,x2,u,y,d\n";
  os << std::setprecision(17);
  for (std::size_t k = 0; k < data.x.size(); ++k) {
    os << k << ',' << data.x[k](0) << ',' << data.x[k](1) << ',' << data.u[k] << ',' << data.y[k] << ','
       << data.d[k] << '\n';
  }
}

Dataset read_dataset_csv(std::istream & is)
{
  std::string line;
  if (!std::getline(is, line) || line.rfind("k,x1,x2,u,y,d", 0) != 0) {
    throw ConfigError("dataset csv: missing header k,x1,x2,u,y,d");
  }
  Dataset data;
  while (std::getline(is, line)) {
    if (line.empty()) { continue; }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) { vals.push_back(std::stod(cell)); }
    if (vals.size() != 6) { throw ConfigError("dataset csv: expected 6 columns"); }
    Vec x(2);
    x << vals[1], vals[2];
    data.x.push_back(x);
    data.u.push_back(vals[3]);
    data.y.push_back(vals[4]);
    data.d.push_back(vals[5]);
  }
  return data;
}

}  // namespace kvdpc
