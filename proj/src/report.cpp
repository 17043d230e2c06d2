#include "uwbaudio/report.hpp"

#include <atomic>
#include <cstdio>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "uwbaudio/error.hpp"

namespace uwb {
namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string trim_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string row_prefix(const std::string& profile, const AudioFormat& f, double preset) {
  return profile + "," + std::to_string(f.channels) + "," + std::to_string(f.sampling_rate_hz) + "," +
         std::to_string(f.bit_depth) + "," + compute_bitrate(f).kbps_string() + "," + trim_number(preset) + ",";
}

std::string row_metrics(const RunMetrics& m) {
  return fixed(m.latency.mean_us / 1000.0, 3) + "," + fixed(m.link_utilization, 4) + "," +
         fixed(m.success_rate, 5) + ",ok";
}

}  // namespace

std::string metrics_csv_row(const RunMetrics& metrics, const ScenarioConfig& config, const AudioFormat& format) {
  return row_prefix(config.phy_profile, format, config.preset_latency_ms) + row_metrics(metrics);
}

std::string metrics_json(const RunMetrics& m, const ScenarioConfig& config, const AudioFormat& format,
                         std::uint64_t seed) {
  nlohmann::json j;
  j["seed"] = seed;
  j["bandwidth_profile"] = config.phy_profile;
  j["phy_rate_bps"] = config.phy_rate_bps();
  j["sampling_rate"] = format.sampling_rate_hz;
  j["bit_depth"] = format.bit_depth;
  j["channels"] = format.channels;
  j["bit_rate_kbps"] = compute_bitrate(format).kbps_string();
  j["preset_latency_ms"] = config.preset_latency_ms;
  j["loss_prob"] = config.loss_prob;
  j["real_latency_us"] = {{"mean", m.latency.mean_us}, {"p95", m.latency.p95_us}, {"max", m.latency.max_us},
                          {"min", m.latency.min_us}};
  j["link_utilization"] = m.link_utilization;
  j["success_rate"] = m.success_rate;
  j["sync_loss_events"] = m.sync_loss_events;
  j["concealment_events"] = m.concealment_events;
  j["blocks"] = {{"captured", m.blocks_captured}, {"played", m.blocks_played},
                 {"concealed", m.blocks_concealed}, {"in_flight", m.blocks_in_flight}};
  j["frames"] = {{"data_sent", m.data_frames_sent}, {"retransmissions", m.retransmissions},
                 {"lost", m.frames_lost}, {"dropped", m.frames_dropped}, {"sync_sent", m.sync_frames_sent},
                 {"acks_sent", m.acks_sent}};
  j["jitter_buffer"] = {{"underflow_events", m.underflow_events}, {"overflow_events", m.overflow_events},
                        {"late_frames", m.late_frames}, {"min_lead_fraction", m.min_lead_fraction},
                        {"max_lead_fraction", m.max_lead_fraction}, {"final_ratio", m.final_ratio}};
  j["simulated_us"] = m.simulated_us;
  nlohmann::json nets = nlohmann::json::array();
  for (const auto& n : m.networks) {
    nets.push_back({{"network", n.network}, {"success_rate", n.success_rate},
                    {"link_utilization", n.link_utilization}, {"mean_latency_us", n.mean_latency_us},
                    {"sync_loss_events", n.sync_loss_events}});
  }
  j["networks"] = nets;
  return j.dump(2) + "\n";
}

SweepOutput run_sweep(const ScenarioConfig& base, std::uint64_t seed, const std::vector<std::string>& profiles,
                      const std::vector<double>& presets_ms, bool with_trace, unsigned workers) {
  struct Cell {
    std::string row;
    std::string trace;
    bool infeasible = false;
  };
  const std::size_t n = profiles.size() * presets_ms.size();
  std::vector<Cell> cells(n);
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      ScenarioConfig cfg = base;
      const std::string& profile = profiles[i / presets_ms.size()];
      const double preset = presets_ms[i % presets_ms.size()];
      cfg.phy_profile = profile;
      cfg.preset_latency_ms = preset;
      const std::string prefix = row_prefix(profile, cfg.audio, preset);
      Cell& cell = cells[i];
      try {
        RunOptions opt;
        opt.keep_audio = false;
        opt.keep_trace = with_trace;
        RunResult r = run_scenario(cfg, seed, opt);
        cell.row = prefix + row_metrics(r.metrics);
        if (with_trace) {
          std::ostringstream os;
          os << "# cell " << i << " profile=" << profile << " preset_ms=" << trim_number(preset) << "\n";
          write_trace(os, r.trace);
          cell.trace = os.str();
        }
      } catch (const Error& e) {
        cell.row = prefix + ",,,infeasible";
        cell.infeasible = true;
        if (with_trace) {
          cell.trace = "# cell " + std::to_string(i) + " profile=" + profile + " preset_ms=" + trim_number(preset) +
                       " infeasible: " + e.what() + "\n";
        }
      }
    }
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  SweepOutput out;
  out.csv = std::string(kSweepHeader) + "\n";
  for (const auto& c : cells) {
    out.csv += c.row + "\n";
    out.trace += c.trace;
    if (c.infeasible) ++out.infeasible;
  }
  return out;
}

}  // namespace uwb
