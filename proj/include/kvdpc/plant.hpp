#pragma once

#include "kvdpc/linalg.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace kvdpc {

/// Physical constants of the damped pendulum. The inertia is derived, J = M L^2 / 3.
class PendulumParams
{
public:
  PendulumParams() : PendulumParams(1.0, 1.0, 0.1, 9.81, 1.0 / 30.0) {}
  PendulumParams(double mass, double length, double friction, double gravity, double ts);

  double mass() const { return mass_; }
  double length() const { return length_; }
  double friction() const { return friction_; }
  double gravity() const { return gravity_; }
  double ts() const { return ts_; }
  double inertia() const { return inertia_; }

  /// Input that holds the pendulum at rest at angle `y_r`.
  double equilibrium_input(double y_r) const;

private:
  double mass_;
  double length_;
  double friction_;
  double gravity_;
  double ts_;
  double inertia_;
};

/// Piecewise-constant additive disturbance on the angular-velocity channel.
class DisturbanceProfile
{
public:
  struct Segment
  {
    long start_step;
    double value;
  };

  /// Zero everywhere.
  DisturbanceProfile() : segments_{{0, 0.0}} {}
  explicit DisturbanceProfile(std::vector<Segment> segments);

  double at(long step) const;
  const std::vector<Segment> & segments() const { return segments_; }

private:
  std::vector<Segment> segments_;
};

struct MultisineConfig
{
  double amp_lo = -0.2;
  double amp_hi = 0.2;
  /// Band edges in units of the Nyquist frequency.
  double band_lo = 0.0;
  double band_hi = 1.0;
  int num_sines = 25;
  std::uint64_t seed = 1;
};

/// Piecewise-constant carrier dithered with a multisine.
struct ExcitationConfig
{
  struct Level
  {
    long hold_steps;
    double level;
  };
  std::vector<Level> base_levels;
  MultisineConfig multisine;

  void validate() const;
};

/// Recorded plant trajectory. Row k holds x_k, u_k, y_k = h(x_k) and d_k for
/// k = 0..s; x_{k+1} = f(x_k, u_k) + E d_k for k < s. The input and
/// disturbance on the final row repeat the last applied values.
struct Dataset
{
  std::vector<Vec> x;
  std::vector<double> u;
  std::vector<double> y;
  std::vector<double> d;

  /// Number of applied inputs s (rows minus one).
  std::size_t samples() const { return x.empty() ? 0 : x.size() - 1; }
  void check_consistent() const;
};

struct PlantStep
{
  Vec x_next;
  double y;
};

PlantStep pendulum_step(const PendulumParams & params, const Vec & x, double u, double d);

std::vector<double> generate_excitation(const ExcitationConfig & config, std::size_t length, std::uint64_t seed);

Dataset collect_dataset(
  const PendulumParams & params,
  const std::vector<double> & inputs,
  const Vec & x0,
  const DisturbanceProfile & disturbance);

/// CSV with header `k,x1,x2,u,y,d`, 17 significant digits.
void write_dataset_csv(std::ostream & os, const Dataset & data);
Dataset read_dataset_csv(std::istream & is);

}  // namespace kvdpc
