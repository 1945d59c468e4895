#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "socs/service/config.hpp"
#include "socs/service/telemetry.hpp"

namespace socs::service {

struct TapControl {
  Channel channel;
  bool enabled;
};

struct MixerControl {
  // Absent entries keep their current value.
  std::array<std::optional<double>, 4> gains;
  std::optional<double> master;
};

struct ScalerControl {
  enum class Target { Gain, Center, Resonance };
  Channel channel;
  Target target;
  ScalerSpec spec;
};

struct AlertControl {
  AlertParams params;
};

using Control = std::variant<TapControl, MixerControl, ScalerControl, AlertControl>;

// Parses one client message. Throws Error(MalformedInput).
Control parse_control(std::string_view text);
Control control_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Control& control);

// The per-tick orchestration step: samples in, telemetry frames and audio
// parameters out. Owns taps, mixer, scalers and alert state.
class Pipeline {
 public:
  // Throws Error(InvalidConfig).
  explicit Pipeline(SessionConfig config);

  TelemetryFrame step(const IntervalSample& sample);
  // Replays a recorded tick whose returns are already known.
  TelemetryFrame step_with(const IntervalSample& sample, const LogReturnVector& returns);

  // Validates then applies; throws Error(InvalidArgument) and leaves state
  // unchanged on a bad control.
  void apply(const Control& control);

  // Audio targets for the most recent returns under current controls.
  audio::EngineParams engine_params() const;

  const SessionConfig& config() const { return config_; }
  const AlertState& alert() const { return alert_; }
  std::int64_t frames() const { return frames_; }

 private:
  SessionConfig config_;
  std::optional<IntervalSample> previous_;
  LogReturnVector last_returns_;
  AlertState alert_;
  AggregateSeries aggregate_;
  std::int64_t frames_ = 0;
};

}  // namespace socs::service
