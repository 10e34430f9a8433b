#pragma once

#include "kvdpc/controller.hpp"
#include "kvdpc/kernels.hpp"
#include "kvdpc/plant.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace kvdpc {

struct ReferenceSegment
{
  long start_step;
  double y_r;
};

struct IdentificationConfig
{
  std::size_t train_samples = 2000;
  std::size_t validation_samples = 500;
  std::size_t validation_horizon = 20;
  std::size_t center_stride = 1;
  double ridge = 0.0;
};

/// Everything needed to reproduce one identification + closed-loop experiment.
struct Scenario
{
  PendulumParams plant;
  Vec x0 = Vec::Zero(2);
  ExcitationConfig excitation;
  IdentificationConfig identification;
  KernelSpec kernel;
  ControllerConfig controller = ControllerConfig::defaults(ModelDims{});
  std::vector<ReferenceSegment> references;
  DisturbanceProfile disturbance;
  long duration = 600;
  std::uint64_t seed = 1;

  double reference_at(long step) const;
  /// Training data uses `seed`, validation data `seed + 1`.
  std::uint64_t train_seed() const { return seed; }
  std::uint64_t validation_seed() const { return seed + 1; }
  void validate() const;
};

/// Built-in defaults; identical to config/pendulum.toml.
Scenario default_scenario();

/// Missing keys keep their defaults; unknown keys are rejected.
Scenario parse_scenario(const std::string & toml_text, const std::string & source = "<string>");
Scenario load_scenario(const std::filesystem::path & path);

}  // namespace kvdpc
