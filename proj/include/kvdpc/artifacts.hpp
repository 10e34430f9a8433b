#pragma once

#include "kvdpc/harness.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace kvdpc {

struct ArtifactOptions
{
  /// Write measured wall times; off by default so repeated runs are byte-identical.
  bool record_timing = false;
  /// Embed a generation timestamp in SVG files.
  bool stamp = false;
};

/// Header `k,x1,x2,u,du,y,yr,d,V,iters,ms`.
void write_trajectories_csv(std::ostream & os, const SimulationLog & log, bool record_timing);
void write_reports_jsonl(std::ostream & os, const SimulationLog & log, bool record_timing);

void write_validation_svg(std::ostream & os, const ValidationResult & v, const ArtifactOptions & opts = {});
/// Slice of each set at v_0 = 0, drawn over (v_1, v_2).
void write_terminal_slice_svg(
  std::ostream & os, const std::vector<std::pair<std::string, Polytope>> & sets, const ArtifactOptions & opts = {});
void write_closed_loop_svg(
  std::ostream & os, const std::vector<const SimulationLog *> & logs, const ArtifactOptions & opts = {});

/// Metrics object for one variant; null-valued fields for an empty log.
std::string metrics_json(const Metrics & m, bool record_timing);

/// Writes every artifact of a comparison run into `dir` and returns the file names.
std::vector<std::string> write_comparison_artifacts(
  const ComparisonRun & run, const Scenario & scenario, const std::filesystem::path & dir,
  const ArtifactOptions & opts = {});

/// Opens `path` for writing, creating parent directories; throws ConfigError if unwritable.
std::ofstream open_output(const std::filesystem::path & path);

}  // namespace kvdpc
