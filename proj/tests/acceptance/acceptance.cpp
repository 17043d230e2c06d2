// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Optional args: path to the uwba binary and the configs directory, used to
// check sweep determinism through the command line as well.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "../support/schedule_oracle.hpp"
#include "uwbaudio/audio_format.hpp"
#include "uwbaudio/error.hpp"
#include "uwbaudio/frame_codec.hpp"
#include "uwbaudio/report.hpp"
#include "uwbaudio/simulator.hpp"

using namespace uwb;

namespace {

std::string uwba_path, configs_dir;

struct Verdict {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

ScenarioConfig baseline_config() {
  ScenarioConfig c;  // the library defaults
  c.audio = {48000, 16, 2};
  c.phy_profile = "1.2GHz";
  c.preset_latency_ms = 10;
  return c;
}

std::string fmt(const char* f, double a, double b = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

Verdict c1_bitrate_table() {
  Verdict v;
  const char* expected[] = {"1411.2", "2304", "4608", "2304", "4608", "9216", "9216"};
  const auto rows = quality_table();
  v.require(rows.size() == 7, "table has " + std::to_string(rows.size()) + " rows");
  for (std::size_t i = 0; i < rows.size() && i < 7; ++i) {
    const auto got = compute_bitrate(rows[i].format).kbps_string();
    v.require(got == expected[i], std::string(rows[i].name) + ": " + got + " kbps");
  }
  v.detail = v.ok ? "7/7 rows exact" : v.detail;
  return v;
}

Verdict c2_frames() {
  Verdict v;
  std::mt19937_64 rng(20240601);
  for (int i = 0; i < 10'000 && v.ok; ++i) {
    Frame f;
    f.header.frame_type = static_cast<FrameType>(rng() % 3);
    f.header.network_id = static_cast<std::uint8_t>(rng());
    f.header.connection_id = static_cast<std::uint8_t>(rng());
    f.header.flags = static_cast<std::uint8_t>(rng() & 3);
    f.header.sequence = static_cast<std::uint16_t>(rng());
    f.header.timestamp_ticks = static_cast<std::uint32_t>(rng());
    for (auto& b : f.mac_reserved) b = static_cast<std::uint8_t>(rng());
    if (f.header.frame_type != FrameType::Ack) {
      f.payload.resize(rng() % 1200);
      for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng());
    }
    v.require(decode_frame(encode_frame(f)) == f, "roundtrip mismatch at frame " + std::to_string(i));
  }
  std::vector<std::uint8_t> payload(64 - kFrameOverhead);
  for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<std::uint8_t>(rng());
  const auto bytes = encode_frame(make_data_frame(1, 1, 99, 123456, payload));
  v.require(bytes.size() == 64, "fixed frame is not 64 bytes");
  std::size_t detected = 0;
  for (std::size_t bit = 0; bit < bytes.size() * 8; ++bit) {
    auto bad = bytes;
    bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    try {
      decode_frame(bad);
    } catch (const FrameError&) {
      ++detected;
    }
  }
  v.require(detected == bytes.size() * 8, std::to_string(detected) + "/512 corruptions detected");
  if (v.ok) v.detail = "10000 roundtrips, 512/512 bit flips detected";
  return v;
}

Verdict c3_lossless() {
  Verdict v;
  WavData in;
  in.format = {48000, 16, 2};
  std::mt19937_64 rng(314159);
  in.samples.resize(48000 * 60 * 2);
  for (auto& s : in.samples) s = static_cast<std::int16_t>(rng());
  ScenarioConfig c = baseline_config();
  c.loss_prob = 0;
  RunOptions opt;
  opt.input = &in;
  opt.keep_trace = false;
  const RunResult r = run_scenario(c, 1, opt);
  v.require(r.output_samples.size() == in.samples.size(), "output length differs");
  std::size_t diff = 0;
  for (std::size_t i = 0; i < std::min(r.output_samples.size(), in.samples.size()); ++i)
    diff += r.output_samples[i] != in.samples[i];
  v.require(diff == 0, std::to_string(diff) + " samples differ");
  v.require(r.metrics.blocks_concealed == 0, "concealment in a lossless run");
  if (v.ok) v.detail = "60 s, " + std::to_string(in.samples.size()) + " samples bit-exact";
  return v;
}

Verdict c4_latency_trend() {
  Verdict v;
  std::string d;
  for (const char* profile : {"1.2GHz", "1.6GHz"}) {
    for (double preset : {5.0, 10.0, 20.0}) {
      ScenarioConfig c = baseline_config();
      c.phy_profile = profile;
      c.preset_latency_ms = preset;
      RunOptions opt;
      opt.keep_audio = false;
      opt.keep_trace = false;
      const auto r = run_scenario(c, 1, opt);
      const double ms = r.metrics.latency.mean_us / 1000.0;
      v.require(ms <= preset && ms >= preset - 1.5,
                std::string(profile) + fmt(" preset %.0f ms: mean %.3f ms", preset, ms));
      d += fmt(" %.3f", ms);
    }
  }
  if (v.ok) v.detail = "mean latency (ms):" + d;
  return v;
}

Verdict c5_success() {
  Verdict v;
  ScenarioConfig c = baseline_config();
  c.loss_prob = 0.01;
  c.auto_reply = true;
  c.duration_s = 60;
  RunOptions opt;
  opt.keep_audio = false;
  opt.keep_trace = true;
  const auto r = run_scenario(c, 1, opt);
  v.require(r.metrics.frames_lost > 0, "no frames were lost");
  v.require(r.metrics.success_rate >= 0.999, fmt("success rate %.5f", r.metrics.success_rate));
  v.detail = fmt("success rate %.5f", r.metrics.success_rate) + ", " + std::to_string(r.metrics.frames_lost) +
             " frames lost, " + std::to_string(r.metrics.retransmissions) + " retransmissions";
  return v;
}

Verdict c6_utilization() {
  Verdict v;
  std::string d;
  for (const char* profile : {"1.2GHz", "1.6GHz"}) {
    ScenarioConfig c = baseline_config();
    c.phy_profile = profile;
    RunOptions opt;
    opt.keep_audio = false;
    const auto r = run_scenario(c, 1, opt);
    const double u = r.metrics.link_utilization;
    v.require(u >= 0.70 && u <= 0.82, std::string(profile) + fmt(" utilization %.4f", u));
    d += std::string(" ") + profile + fmt("=%.4f", u);
  }
  if (v.ok) v.detail = "utilization" + d;
  return v;
}

Verdict c7_sync() {
  Verdict v;
  ScenarioConfig c = baseline_config();
  c.source = SourceKind::Idle;
  c.duration_s = 60;
  c.auto_sync = true;
  const auto on = run_scenario(c, 1);
  v.require(on.metrics.sync_loss_events == 0,
            std::to_string(on.metrics.sync_loss_events) + " sync-loss events with auto_sync");
  c.auto_sync = false;
  c.duration_s = 0.1;
  const auto off = run_scenario(c, 1);
  std::int64_t first = -1;
  for (const auto& e : off.trace) {
    if (e.kind == EventKind::SyncLoss) {
      first = e.time_us;
      break;
    }
  }
  v.require(first >= 0 && first <= 20'000, "first sync loss at " + std::to_string(first) + " us");
  if (v.ok) v.detail = "0 losses with auto_sync; loss at " + std::to_string(first) + " us without";
  return v;
}

Verdict c8_drift() {
  Verdict v;
  std::string d;
  for (double ppm : {100.0, -100.0}) {
    ScenarioConfig c = baseline_config();
    c.drift_ppm = ppm;
    c.duration_s = 60;
    c.drift_compensation = true;
    RunOptions opt;
    opt.keep_audio = false;
    opt.keep_trace = false;
    const auto r = run_scenario(c, 1, opt);
    const auto& m = r.metrics;
    v.require(m.min_lead_fraction >= 0.25 && m.max_lead_fraction <= 4.0,
              fmt("%+.0f ppm: occupancy ", ppm) + fmt("[%.3f, %.3f] of target", m.min_lead_fraction, m.max_lead_fraction));
    v.require(m.underflow_events == 0 && m.overflow_events == 0,
              fmt("%+.0f ppm: ", ppm) + std::to_string(m.underflow_events) + " underflows, " +
                  std::to_string(m.overflow_events) + " overflows");
    d += fmt(" %+.0f ppm:", ppm) + fmt("[%.4f, %.4f]", m.min_lead_fraction, m.max_lead_fraction);
  }
  if (v.ok) v.detail = "occupancy/target" + d + ", no underflow/overflow";
  return v;
}

Verdict c9_scheduler() {
  Verdict v;
  std::mt19937_64 rng(9);
  int agree = 0, feasible = 0;
  const int total = 600;
  for (int i = 0; i < total; ++i) {
    const auto inst = oracle::random_instance(rng);
    bool got = true;
    try {
      build_schedule(inst.connections, inst.params);
    } catch (const AdmissionError&) {
      got = false;
    }
    const bool expect = oracle::feasible(inst);
    agree += got == expect;
    feasible += expect;
  }
  v.require(agree == total, std::to_string(total - agree) + " disagreements");
  v.detail = std::to_string(agree) + "/" + std::to_string(total) + " instances agree (" +
             std::to_string(feasible) + " feasible)";
  return v;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict c10_determinism() {
  Verdict v;
  const ScenarioConfig c = baseline_config();
  const auto a = run_sweep(c, 42, {"1.2GHz", "1.6GHz"}, {5, 10, 20}, true);
  const auto b = run_sweep(c, 42, {"1.2GHz", "1.6GHz"}, {5, 10, 20}, true, 1);
  v.require(a.csv == b.csv, "sweep CSV differs between runs");
  v.require(a.trace == b.trace, "sweep trace differs between runs");
  v.require(std::count(a.csv.begin(), a.csv.end(), '\n') == 7, "expected header + 6 rows");
  std::string how = "library";
  if (!uwba_path.empty()) {
    std::string outputs[2][2];
    for (int run = 0; run < 2; ++run) {
      const std::string csv = "acc_sweep_" + std::to_string(run) + ".csv";
      const std::string trace = "acc_sweep_" + std::to_string(run) + ".trace";
      const std::string cmd = "\"" + uwba_path + "\" sweep --config \"" + configs_dir +
                              "/baseline.conf\" --seed 42 --out " + csv + " --trace " + trace;
      v.require(std::system(cmd.c_str()) == 0, "uwba sweep failed");
      outputs[run][0] = slurp(csv);
      outputs[run][1] = slurp(trace);
      std::remove(csv.c_str());
      std::remove(trace.c_str());
    }
    v.require(!outputs[0][0].empty() && outputs[0][0] == outputs[1][0], "CLI CSV bytes differ");
    v.require(!outputs[0][1].empty() && outputs[0][1] == outputs[1][1], "CLI trace bytes differ");
    how += " and CLI";
  }
  if (v.ok) v.detail = how + ": CSV " + std::to_string(a.csv.size()) + " B and trace " +
                       std::to_string(a.trace.size()) + " B identical";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) uwba_path = argv[1];
  if (argc > 2) configs_dir = argv[2];
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Verdict()> run;
  };
  const Criterion criteria[] = {
      {1, "bit-rate table", 1, c1_bitrate_table},
      {2, "frame roundtrip and corruption detection", 10, c2_frames},
      {3, "lossless end-to-end", 60, c3_lossless},
      {4, "latency trend", 120, c4_latency_trend},
      {5, "success rate under 1% loss", 60, c5_success},
      {6, "utilization calibration", 60, c6_utilization},
      {7, "sync deadline", 30, c7_sync},
      {8, "drift boundedness", 60, c8_drift},
      {9, "scheduler oracle", 120, c9_scheduler},
      {10, "sweep determinism", 120, c10_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (v.ok && secs > c.limit_s) {
      v.ok = false;
      v.detail += fmt(" (over the %.0f s budget)", c.limit_s);
    }
    std::printf("%s %d %s: %s [%.2f s]\n", v.ok ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.ok;
  }
  return failed == 0 ? 0 : 1;
}
