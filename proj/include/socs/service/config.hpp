#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "socs/audio/engine.hpp"
#include "socs/capture.hpp"
#include "socs/metrics.hpp"

namespace socs::service {

struct SourceSpec {
  enum class Kind { None, Live, Replay };
  Kind kind = Kind::None;
  std::string interface_name;  // Live
  ReplaySpec replay;           // Replay
  LocalAddressSet local;

  bool operator==(const SourceSpec&) const = default;
};

struct SessionConfig {
  SourceSpec source;
  double tick_seconds = 1.0;
  ReturnMode mode = ReturnMode::Signed;
  audio::EngineConfig engine;
  audio::MixerState mixer;
  std::array<bool, 4> taps{true, true, true, true};
  AlertParams alert;
  std::string listen = "127.0.0.1:8765";
  int telemetry_window = 120;     // frames kept for join snapshots
  int aggregate_downsample = 5;   // ticks per aggregate plot point
  int subscriber_queue = 256;     // messages buffered per subscriber

  // Throws Error(InvalidConfig).
  void validate() const;
  bool operator==(const SessionConfig&) const = default;
};

// Parses the key = value format. Blank lines and '#' comments are ignored;
// unknown keys are errors. Unset keys keep their defaults.
//
//   tick = 1.0                 mode = signed | squared
//   source = live:<iface> | replay:<path>
//   speed = 1.0                local = 10.0.0.2,fe80::1
//   listen = 127.0.0.1:8765
//   sample_rate, block_size, ramp_ms, warmup, seed
//   alert.window, alert.trigger, alert.threshold
//   mixer.master, mixer.<ch>   tap.<ch> = on | off      (<ch> is bs|ps|br|pr)
//   voice<N>.channel = <ch>    voice<N>.kind = loop:<asset> | noise
//   voice<N>.gain | .center | .resonance = in_min,in_max,out_min,out_max
//   voice<N>.pan = -1..1       (N is 0..3)
//   telemetry.window, telemetry.downsample, telemetry.queue
SessionConfig parse_config(std::string_view text, SessionConfig base = {});
SessionConfig load_config(const std::filesystem::path& path, SessionConfig base = {});

// Canonical text form; parse_config(to_config_text(c)) == c.
std::string to_config_text(const SessionConfig& config);

// SOCS_LISTEN overrides the listen address.
void apply_environment(SessionConfig& config);

// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const SessionConfig& config);

nlohmann::json to_json(const SessionConfig& config);

}  // namespace socs::service
