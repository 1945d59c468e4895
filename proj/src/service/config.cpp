#include "socs/service/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "socs/error.hpp"

namespace socs::service {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out)) {
    fail(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    fail(std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool parse_switch(std::string_view key, std::string_view v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  fail(std::string(key) + ": expected on or off, got '" + std::string(v) + "'");
}

Channel parse_channel_value(std::string_view key, std::string_view v) {
  const auto c = parse_channel(v);
  if (!c) fail(std::string(key) + ": unknown channel '" + std::string(v) + "'");
  return *c;
}

ScalerSpec parse_scaler(std::string_view key, std::string_view v) {
  double parts[4];
  std::size_t n = 0;
  while (true) {
    const auto comma = v.find(',');
    if (n == 4) fail(std::string(key) + ": expected in_min,in_max,out_min,out_max");
    parts[n++] = parse_double(key, trim(v.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (n != 4) fail(std::string(key) + ": expected in_min,in_max,out_min,out_max");
  return {parts[0], parts[1], parts[2], parts[3]};
}

std::string scaler_text(const ScalerSpec& s) {
  return num(s.in_min) + "," + num(s.in_max) + "," + num(s.out_min) + "," + num(s.out_max);
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

void set_key(SessionConfig& c, std::string_view key, std::string_view v) {
  auto& e = c.engine;
  if (key == "tick") {
    c.tick_seconds = parse_double(key, v);
  } else if (key == "mode") {
    const auto m = parse_return_mode(v);
    if (!m) fail("mode: expected signed or squared");
    c.mode = *m;
  } else if (key == "source") {
    if (v == "none") {
      c.source.kind = SourceSpec::Kind::None;
    } else if (v.starts_with("live:")) {
      c.source.kind = SourceSpec::Kind::Live;
      c.source.interface_name = std::string(v.substr(5));
    } else if (v.starts_with("replay:")) {
      c.source.kind = SourceSpec::Kind::Replay;
      c.source.replay.path = std::string(v.substr(7));
    } else {
      fail("source: expected none, live:<iface> or replay:<path>");
    }
  } else if (key == "speed") {
    c.source.replay.speed = parse_double(key, v);
  } else if (key == "local") {
    c.source.local = split_list(v);
  } else if (key == "listen") {
    c.listen = std::string(v);
  } else if (key == "sample_rate") {
    e.sample_rate = parse_double(key, v);
  } else if (key == "block_size") {
    e.block_size = parse_int<int>(key, v);
  } else if (key == "ramp_ms") {
    e.ramp_ms = parse_double(key, v);
  } else if (key == "warmup") {
    e.warmup_seconds = parse_double(key, v);
  } else if (key == "seed") {
    e.seed = parse_int<std::uint64_t>(key, v);
  } else if (key == "alert.window") {
    c.alert.window = parse_int<int>(key, v);
  } else if (key == "alert.trigger") {
    c.alert.trigger = parse_int<int>(key, v);
  } else if (key == "alert.threshold") {
    c.alert.threshold = parse_double(key, v);
  } else if (key == "mixer.master") {
    c.mixer.master = parse_double(key, v);
  } else if (key.starts_with("mixer.")) {
    c.mixer.gains[index_of(parse_channel_value(key, key.substr(6)))] = parse_double(key, v);
  } else if (key.starts_with("tap.")) {
    c.taps[index_of(parse_channel_value(key, key.substr(4)))] = parse_switch(key, v);
  } else if (key == "telemetry.window") {
    c.telemetry_window = parse_int<int>(key, v);
  } else if (key == "telemetry.downsample") {
    c.aggregate_downsample = parse_int<int>(key, v);
  } else if (key == "telemetry.queue") {
    c.subscriber_queue = parse_int<int>(key, v);
  } else if (key.starts_with("voice") && key.size() > 7 && key[6] == '.' && key[5] >= '0' && key[5] <= '3') {
    const auto i = static_cast<std::size_t>(key[5] - '0');
    if (e.voices.size() <= i) e.voices.resize(i + 1);
    auto& voice = e.voices[i];
    const auto field = key.substr(7);
    if (field == "channel") {
      voice.channel = parse_channel_value(key, v);
    } else if (field == "kind") {
      if (v == "noise") {
        voice.kind = audio::VoiceKind::NoiseSynth;
        voice.asset.clear();
      } else if (v.starts_with("loop:") && v.size() > 5) {
        voice.kind = audio::VoiceKind::Loop;
        voice.asset = std::string(v.substr(5));
      } else {
        fail(std::string(key) + ": expected noise or loop:<asset>");
      }
    } else if (field == "gain") {
      voice.gain = parse_scaler(key, v);
    } else if (field == "center") {
      voice.center = parse_scaler(key, v);
    } else if (field == "resonance") {
      voice.resonance = parse_scaler(key, v);
    } else if (field == "pan") {
      voice.pan = parse_double(key, v);
    } else {
      fail("unknown key '" + std::string(key) + "'");
    }
  } else {
    fail("unknown key '" + std::string(key) + "'");
  }
}

}  // namespace

void SessionConfig::validate() const {
  if (!(std::isfinite(tick_seconds) && tick_seconds > 0.0)) fail("tick must be positive");
  if (source.kind == SourceSpec::Kind::Live && source.interface_name.empty()) fail("live source needs an interface");
  if (source.kind == SourceSpec::Kind::Replay && source.replay.path.empty()) fail("replay source needs a path");
  if (!(std::isfinite(source.replay.speed) && source.replay.speed > 0.0)) fail("speed must be positive");
  if (!alert.valid()) fail("alert parameters need 1 <= trigger <= window and threshold > 0");
  if (!mixer.valid()) fail("mixer gains must lie in [0, 1]");
  if (telemetry_window < 1) fail("telemetry.window must be at least 1");
  if (aggregate_downsample < 1) fail("telemetry.downsample must be at least 1");
  if (subscriber_queue < 2) fail("telemetry.queue must be at least 2");
  engine.validate();
}

SessionConfig parse_config(std::string_view text, SessionConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("line " + std::to_string(line_no) + ": expected key = value");
    try {
      set_key(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

SessionConfig load_config(const std::filesystem::path& path, SessionConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_config_text(const SessionConfig& c) {
  std::ostringstream o;
  switch (c.source.kind) {
    case SourceSpec::Kind::None: o << "source = none\n"; break;
    case SourceSpec::Kind::Live: o << "source = live:" << c.source.interface_name << "\n"; break;
    case SourceSpec::Kind::Replay: o << "source = replay:" << c.source.replay.path.string() << "\n"; break;
  }
  o << "speed = " << num(c.source.replay.speed) << "\n";
  o << "local = ";
  for (std::size_t i = 0; i < c.source.local.size(); ++i) o << (i ? "," : "") << c.source.local[i];
  o << "\n";
  o << "tick = " << num(c.tick_seconds) << "\n";
  o << "mode = " << to_string(c.mode) << "\n";
  o << "listen = " << c.listen << "\n";
  const auto& e = c.engine;
  o << "sample_rate = " << num(e.sample_rate) << "\n";
  o << "block_size = " << e.block_size << "\n";
  o << "ramp_ms = " << num(e.ramp_ms) << "\n";
  o << "warmup = " << num(e.warmup_seconds) << "\n";
  o << "seed = " << e.seed << "\n";
  o << "alert.window = " << c.alert.window << "\n";
  o << "alert.trigger = " << c.alert.trigger << "\n";
  o << "alert.threshold = " << num(c.alert.threshold) << "\n";
  o << "mixer.master = " << num(c.mixer.master) << "\n";
  for (Channel ch : kChannels) o << "mixer." << channel_name(ch) << " = " << num(c.mixer.gains[index_of(ch)]) << "\n";
  for (Channel ch : kChannels) o << "tap." << channel_name(ch) << " = " << (c.taps[index_of(ch)] ? "on" : "off") << "\n";
  for (std::size_t i = 0; i < e.voices.size(); ++i) {
    const auto& v = e.voices[i];
    const std::string p = "voice" + std::to_string(i) + ".";
    o << p << "channel = " << channel_name(v.channel) << "\n";
    o << p << "kind = " << (v.kind == audio::VoiceKind::NoiseSynth ? std::string("noise") : "loop:" + v.asset) << "\n";
    o << p << "gain = " << scaler_text(v.gain) << "\n";
    o << p << "center = " << scaler_text(v.center) << "\n";
    o << p << "resonance = " << scaler_text(v.resonance) << "\n";
    o << p << "pan = " << num(v.pan) << "\n";
  }
  o << "telemetry.window = " << c.telemetry_window << "\n";
  o << "telemetry.downsample = " << c.aggregate_downsample << "\n";
  o << "telemetry.queue = " << c.subscriber_queue << "\n";
  return o.str();
}

void apply_environment(SessionConfig& config) {
  if (const char* listen = std::getenv("SOCS_LISTEN"); listen && *listen) config.listen = listen;
}

std::string config_hash(const SessionConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_config_text(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json to_json(const SessionConfig& c) {
  using nlohmann::json;
  json voices = json::array();
  const auto scaler = [](const ScalerSpec& s) {
    return json{{"in_min", s.in_min}, {"in_max", s.in_max}, {"out_min", s.out_min}, {"out_max", s.out_max}};
  };
  for (const auto& v : c.engine.voices) {
    voices.push_back({{"channel", channel_name(v.channel)},
                      {"kind", v.kind == audio::VoiceKind::NoiseSynth ? "noise" : "loop"},
                      {"asset", v.asset},
                      {"gain", scaler(v.gain)},
                      {"center", scaler(v.center)},
                      {"resonance", scaler(v.resonance)},
                      {"pan", v.pan}});
  }
  json mixer = {{"master", c.mixer.master}};
  json taps = json::object();
  for (Channel ch : kChannels) {
    mixer["gains"][channel_name(ch)] = c.mixer.gains[index_of(ch)];
    taps[channel_name(ch)] = c.taps[index_of(ch)];
  }
  return {{"tick", c.tick_seconds},
          {"mode", to_string(c.mode)},
          {"sample_rate", c.engine.sample_rate},
          {"block_size", c.engine.block_size},
          {"ramp_ms", c.engine.ramp_ms},
          {"seed", c.engine.seed},
          {"alert", {{"window", c.alert.window}, {"trigger", c.alert.trigger}, {"threshold", c.alert.threshold}}},
          {"mixer", mixer},
          {"taps", taps},
          {"voices", voices},
          {"telemetry", {{"window", c.telemetry_window}, {"downsample", c.aggregate_downsample}}},
          {"text", to_config_text(c)}};
}

}  // namespace socs::service
