#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uwbaudio/scenario.hpp"
#include "uwbaudio/simulator.hpp"

namespace uwb {

/// One JSON object, keys sorted, fixed shape.
std::string metrics_json(const RunMetrics& metrics, const ScenarioConfig& config, const AudioFormat& format,
                         std::uint64_t seed);

inline constexpr const char* kSweepHeader =
    "bandwidth_profile,channel,sampling_rate,bit_depth,bit_rate_kbps,preset_latency_ms,real_latency_ms,"
    "link_utilization,success_rate,status";

/// One CSV row (no newline) in the sweep column layout.
std::string metrics_csv_row(const RunMetrics& metrics, const ScenarioConfig& config, const AudioFormat& format);

struct SweepOutput {
  std::string csv;
  std::string trace;  // every cell's trace, each preceded by a "# cell" line
  std::size_t infeasible = 0;
};

/// Runs every (profile, preset) cell, profile-major. Cells run on up to
/// `workers` threads and are merged by cell index, so output does not depend
/// on scheduling. An infeasible cell yields a row with status "infeasible".
SweepOutput run_sweep(const ScenarioConfig& base, std::uint64_t seed, const std::vector<std::string>& profiles,
                      const std::vector<double>& presets_ms, bool with_trace, unsigned workers = 0);

}  // namespace uwb
