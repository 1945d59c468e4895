#include "socs/service/pipeline.hpp"

#include "socs/error.hpp"

namespace socs::service {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedInput, what); }

Channel channel_field(const json& j) {
  const auto c = parse_channel(j.at("channel").get<std::string>());
  if (!c) malformed("unknown channel '" + j.at("channel").get<std::string>() + "'");
  return *c;
}

std::string_view target_name(ScalerControl::Target t) {
  switch (t) {
    case ScalerControl::Target::Gain: return "gain";
    case ScalerControl::Target::Center: return "center";
    case ScalerControl::Target::Resonance: return "resonance";
  }
  return "gain";
}

ScalerSpec& target_of(audio::VoiceSpec& v, ScalerControl::Target t) {
  switch (t) {
    case ScalerControl::Target::Gain: return v.gain;
    case ScalerControl::Target::Center: return v.center;
    case ScalerControl::Target::Resonance: return v.resonance;
  }
  return v.gain;
}

}  // namespace

Control control_from_json(const json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "tap") return TapControl{channel_field(j), j.at("enabled").get<bool>()};
    if (type == "mixer") {
      MixerControl m;
      if (j.contains("master")) m.master = j.at("master").get<double>();
      if (j.contains("gains")) {
        for (const auto& [name, value] : j.at("gains").items()) {
          const auto c = parse_channel(name);
          if (!c) malformed("unknown channel '" + name + "'");
          m.gains[index_of(*c)] = value.get<double>();
        }
      }
      return m;
    }
    if (type == "scaler") {
      ScalerControl s{channel_field(j), ScalerControl::Target::Gain, {}};
      const auto target = j.at("target").get<std::string>();
      if (target == "gain") {
        s.target = ScalerControl::Target::Gain;
      } else if (target == "center") {
        s.target = ScalerControl::Target::Center;
      } else if (target == "resonance") {
        s.target = ScalerControl::Target::Resonance;
      } else {
        malformed("unknown scaler target '" + target + "'");
      }
      s.spec = {j.at("in_min").get<double>(), j.at("in_max").get<double>(), j.at("out_min").get<double>(),
                j.at("out_max").get<double>()};
      return s;
    }
    if (type == "alert_params") {
      return AlertControl{{j.at("window").get<int>(), j.at("trigger").get<int>(), j.at("threshold").get<double>()}};
    }
    malformed("unknown control type '" + type + "'");
  } catch (const json::exception& e) {
    malformed(std::string("bad control message: ") + e.what());
  }
}

Control parse_control(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    malformed(std::string("control is not JSON: ") + e.what());
  }
  return control_from_json(j);
}

json to_json(const Control& control) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, TapControl>) {
          return {{"type", "tap"}, {"channel", channel_name(c.channel)}, {"enabled", c.enabled}};
        } else if constexpr (std::is_same_v<T, MixerControl>) {
          json j = {{"type", "mixer"}, {"gains", json::object()}};
          if (c.master) j["master"] = *c.master;
          for (Channel ch : kChannels) {
            if (const auto& g = c.gains[index_of(ch)]) j["gains"][channel_name(ch)] = *g;
          }
          return j;
        } else if constexpr (std::is_same_v<T, ScalerControl>) {
          return {{"type", "scaler"},       {"channel", channel_name(c.channel)}, {"target", target_name(c.target)},
                  {"in_min", c.spec.in_min}, {"in_max", c.spec.in_max},           {"out_min", c.spec.out_min},
                  {"out_max", c.spec.out_max}};
        } else {
          return {{"type", "alert_params"},
                  {"window", c.params.window},
                  {"trigger", c.params.trigger},
                  {"threshold", c.params.threshold}};
        }
      },
      control);
}

Pipeline::Pipeline(SessionConfig config)
    : config_(std::move(config)), alert_(config_.alert), aggregate_(config_.aggregate_downsample) {
  config_.validate();
}

TelemetryFrame Pipeline::step(const IntervalSample& sample) {
  LogReturnVector r;
  r.index = sample.index;
  if (previous_ && previous_->index + 1 == sample.index) r = log_return(*previous_, sample, config_.mode);
  previous_ = sample;
  return step_with(sample, r);
}

TelemetryFrame Pipeline::step_with(const IntervalSample& sample, const LogReturnVector& returns) {
  previous_ = sample;
  last_returns_ = returns;
  alert_ = update_alert(std::move(alert_), returns);
  TelemetryFrame f;
  f.index = sample.index;
  f.sample = sample;
  f.returns = returns;
  f.params = engine_params();
  f.alert = alert_.firing();
  f.exceedances = alert_.exceedance_count();
  f.alert_params = alert_.params();
  f.aggregate = sample.bs + sample.br;
  f.aggregate_point = aggregate_.push(sample.index, f.aggregate);
  ++frames_;
  return f;
}

void Pipeline::apply(const Control& control) {
  std::visit(
      [this](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, TapControl>) {
          config_.taps[index_of(c.channel)] = c.enabled;
        } else if constexpr (std::is_same_v<T, MixerControl>) {
          auto m = config_.mixer;
          for (std::size_t i = 0; i < 4; ++i) {
            if (c.gains[i]) m.gains[i] = *c.gains[i];
          }
          if (c.master) m.master = *c.master;
          if (!m.valid()) throw Error(ErrorCode::InvalidArgument, "mixer gains must lie in [0, 1]");
          config_.mixer = m;
        } else if constexpr (std::is_same_v<T, ScalerControl>) {
          auto engine = config_.engine;
          for (auto& v : engine.voices) {
            if (v.channel == c.channel) target_of(v, c.target) = c.spec;
          }
          try {
            engine.validate();
          } catch (const Error& e) {
            throw Error(ErrorCode::InvalidArgument, e.what());
          }
          config_.engine = std::move(engine);
        } else {
          if (!c.params.valid()) {
            throw Error(ErrorCode::InvalidArgument, "alert parameters need 1 <= trigger <= window and threshold > 0");
          }
          config_.alert = c.params;
          alert_.set_params(c.params);
        }
      },
      control);
}

audio::EngineParams Pipeline::engine_params() const {
  return audio::map_returns(config_.engine, last_returns_, config_.mixer, config_.taps);
}

}  // namespace socs::service
