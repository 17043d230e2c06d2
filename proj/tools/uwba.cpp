// uwba: run, sweep and inspect the simulated UWB audio link.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uwbaudio/audio_format.hpp"
#include "uwbaudio/error.hpp"
#include "uwbaudio/frame_codec.hpp"
#include "uwbaudio/report.hpp"
#include "uwbaudio/scenario.hpp"
#include "uwbaudio/simulator.hpp"
#include "uwbaudio/trace.hpp"
#include "uwbaudio/wav.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::string key_listing() {
  std::string out = "Scenario config keys (key = value, '#' starts a comment):\n";
  for (const auto& [key, what] : uwb::scenario_key_help()) {
    out += "  " + key + std::string(key.size() < 30 ? 30 - key.size() : 1, ' ') + what + "\n";
  }
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw uwb::Error("cannot write " + path);
  out << text;
  if (!out) throw uwb::Error("failed writing " + path);
}

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string trace;
  std::optional<double> loss_prob;
  std::optional<double> drift_ppm;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "scenario config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "simulation seed")->capture_default_str();
  cmd->add_option("--trace", c.trace, "write the event trace here");
  cmd->add_option("--loss-prob", c.loss_prob, "override loss_prob");
  cmd->add_option("--drift-ppm", c.drift_ppm, "override drift_ppm");
  cmd->add_option("--set", c.sets, "override any config key, as key=value (repeatable)");
  cmd->footer(key_listing());
}

uwb::ScenarioConfig load(const Common& c) {
  uwb::ScenarioConfig cfg = uwb::load_scenario(c.config);
  auto apply = [&](const std::string& key, const std::string& value) {
    try {
      cfg.set(key, value);
    } catch (const uwb::ConfigError& e) {
      throw uwb::ConfigError(std::string("command line: ") + e.what());
    }
  };
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw uwb::ConfigError("--set expects key=value, got '" + kv + "'");
    apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.loss_prob) apply("loss_prob", std::to_string(*c.loss_prob));
  if (c.drift_ppm) apply("drift_ppm", std::to_string(*c.drift_ppm));
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated UWB lossless audio link"};
  app.require_subcommand(1);

  Common run_opts;
  std::string in_wav, out_wav, metrics_out, csv_out;
  std::optional<double> run_preset;
  std::string run_profile;
  auto* run = app.add_subcommand("run", "simulate one scenario and report metrics");
  add_common(run, run_opts);
  run->add_option("--in", in_wav, "input WAV (default: synthetic source from the config)")
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_wav, "write the receiver playout as WAV");
  run->add_option("--metrics", metrics_out, "write metrics JSON here (default stdout)");
  run->add_option("--csv", csv_out, "also write the metrics as a sweep-layout CSV row");
  run->add_option("--preset-latency-ms", run_preset, "override preset_latency_ms");
  run->add_option("--profile", run_profile, "override phy_profile");

  Common sweep_opts;
  std::string sweep_out, sweep_presets, sweep_profiles;
  bool presets_given = false;
  unsigned jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "run every (profile, preset latency) cell, CSV out");
  add_common(sweep, sweep_opts);
  sweep->add_option("--preset-latency-ms", sweep_presets, "comma list of presets (default sweep.presets_ms)");
  sweep->add_option("--profile", sweep_profiles, "comma list of profiles (default sweep.profiles)");
  sweep->add_option("--out", sweep_out, "write CSV here (default stdout)");
  sweep->add_option("--jobs", jobs, "worker threads (default: hardware concurrency)");

  std::uint32_t rate = 0, bits = 0, channels = 0;
  auto* bitrate = app.add_subcommand("bitrate", "exact PCM bit rate and quality tier");
  bitrate->add_option("--rate", rate, "sampling rate, Hz")->required()->check(CLI::PositiveNumber);
  bitrate->add_option("--bits", bits, "bit depth (16 or 24)")->required()->check(CLI::IsMember({16u, 24u}));
  bitrate->add_option("--channels", channels, "channel count")->required()->check(CLI::PositiveNumber);

  bool golden = false;
  std::string decode_hex;
  auto* frames = app.add_subcommand("frames", "print reference frames or decode one");
  frames->add_flag("--golden", golden, "print the reference frames as hex");
  frames->add_option("--decode", decode_hex, "decode a hex-encoded frame");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  presets_given = sweep->count("--preset-latency-ms") > 0;

  try {
    if (*run) {
      uwb::ScenarioConfig cfg = load(run_opts);
      if (run_preset) cfg.set("preset_latency_ms", std::to_string(*run_preset));
      if (!run_profile.empty()) cfg.set("phy_profile", run_profile);
      std::optional<uwb::WavData> wav;
      uwb::RunOptions opt;
      if (!in_wav.empty()) {
        wav = uwb::read_wav(in_wav);
        opt.input = &*wav;
      }
      opt.keep_audio = !out_wav.empty();
      opt.keep_trace = !run_opts.trace.empty();
      uwb::RunResult r = uwb::run_scenario(cfg, run_opts.seed, opt);
      const std::string json = uwb::metrics_json(r.metrics, cfg, r.format, run_opts.seed);
      if (metrics_out.empty()) {
        std::cout << json;
      } else {
        write_file(metrics_out, json);
      }
      if (!csv_out.empty()) {
        write_file(csv_out, std::string(uwb::kSweepHeader) + "\n" + uwb::metrics_csv_row(r.metrics, cfg, r.format) + "\n");
      }
      if (!run_opts.trace.empty()) {
        std::ofstream t(run_opts.trace, std::ios::binary);
        if (!t) throw uwb::Error("cannot write " + run_opts.trace);
        uwb::write_trace(t, r.trace);
      }
      if (!out_wav.empty()) uwb::write_wav(out_wav, r.format, r.output_samples);
      std::fprintf(stderr, "real latency %.3f ms, utilization %.4f, success rate %.5f\n",
                   r.metrics.latency.mean_us / 1000.0, r.metrics.link_utilization, r.metrics.success_rate);
      return 0;
    }
    if (*sweep) {
      uwb::ScenarioConfig cfg = load(sweep_opts);
      const auto presets = presets_given ? uwb::parse_number_list(sweep_presets, "--preset-latency-ms")
                                         : cfg.sweep_presets_ms;
      const auto profiles =
          sweep->count("--profile") ? uwb::parse_word_list(sweep_profiles) : cfg.sweep_profiles;
      const auto out = uwb::run_sweep(cfg, sweep_opts.seed, profiles, presets, !sweep_opts.trace.empty(), jobs);
      if (sweep_out.empty()) {
        std::cout << out.csv;
      } else {
        write_file(sweep_out, out.csv);
      }
      if (!sweep_opts.trace.empty()) write_file(sweep_opts.trace, out.trace);
      if (out.infeasible) std::fprintf(stderr, "%zu infeasible cell(s)\n", out.infeasible);
      return 0;
    }
    if (*bitrate) {
      const uwb::AudioFormat f{rate, bits, channels};
      const auto br = uwb::compute_bitrate(f);
      std::string line = br.kbps_string() + " kbps";
      try {
        line += ", " + std::string(uwb::to_string(uwb::classify_tier(f)));
      } catch (const uwb::ValidationError&) {
        line += ", non-standard rate";
      }
      if (uwb::hires_wireless_eligible(f)) line += ", Hi-Res-wireless eligible";
      std::cout << line << "\n";
      return 0;
    }
    if (*frames) {
      if (golden) {
        for (const auto& [name, frame] : uwb::reference_frames()) {
          std::cout << name << " " << uwb::to_hex(uwb::encode_frame(frame)) << "\n";
        }
      }
      if (!decode_hex.empty()) {
        const uwb::Frame f = uwb::decode_frame(uwb::from_hex(decode_hex));
        std::cout << "type=" << uwb::to_string(f.header.frame_type) << " network=" << int{f.header.network_id}
                  << " connection=" << int{f.header.connection_id} << " flags=" << int{f.header.flags}
                  << " seq=" << f.header.sequence << " ts=" << f.header.timestamp_ticks
                  << " payload_len=" << f.payload.size() << " crc=" << uwb::frame_crc(f) << "\n";
      }
      if (!golden && decode_hex.empty()) {
        std::cerr << frames->help();
        return kExitConfig;
      }
      return 0;
    }
  } catch (const uwb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const uwb::AdmissionError& e) {
    std::cerr << "admission error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const uwb::ValidationError& e) {
    std::cerr << "invalid value for " << e.field() << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
