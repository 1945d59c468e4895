#include "socs/cli.hpp"

#include <chrono>
#include <fstream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "socs/analysis.hpp"
#include "socs/error.hpp"
#include "socs/service/session.hpp"

namespace socs::cli {

namespace {

using nlohmann::json;
using service::SessionConfig;

// Options shared by the subcommands that build a session config.
struct Common {
  std::string config_path;
  std::string resume_path;
  double tick = 0.0;
  std::string mode;
  std::uint64_t seed = 0;
  std::string listen;
  std::vector<std::string> local;
  CLI::Option* tick_opt = nullptr;
  CLI::Option* mode_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* listen_opt = nullptr;
  CLI::Option* local_opt = nullptr;
};

// Options of the live subcommands (monitor, replay).
struct Live {
  bool no_audio = false;
  bool no_serve = false;
  std::string audio_device;
  std::string audio_out = "socs-session.wav";
  std::string log_path;
};

const CLI::Validator kPositive(
    [](std::string& v) {
      double x = 0.0;
      return CLI::detail::lexical_cast(v, x) && x > 0.0 ? std::string() : std::string("must be a positive number");
    },
    "POSITIVE");

void add_common(CLI::App& app, Common& c, bool network) {
  app.add_option("--config", c.config_path, "Configuration file (key = value)")->check(CLI::ExistingFile);
  c.tick_opt = app.add_option("--tick", c.tick, "Tick length in seconds")->check(kPositive);
  c.mode_opt = app.add_option("--mode", c.mode, "Return mode")->check(CLI::IsMember({"signed", "squared"}));
  c.seed_opt = app.add_option("--seed", c.seed, "Seed for every random source");
  if (network) {
    app.add_option("--resume", c.resume_path, "Restore mixer, taps, scalers and alert from a session log")
        ->check(CLI::ExistingFile);
    c.listen_opt = app.add_option("--listen", c.listen, "Console endpoint host:port");
    c.local_opt = app.add_option("--local", c.local, "Local addresses (sent traffic)")->delimiter(',');
  }
}

void add_live(CLI::App& app, Live& l) {
  app.add_flag("--no-audio", l.no_audio, "Telemetry only; no audio output is opened");
  app.add_flag("--no-serve", l.no_serve, "Do not open the console endpoint");
  app.add_option("--audio-device", l.audio_device, "Audio device name");
  app.add_option("--audio-out", l.audio_out, "WAV file used when no audio device is available")->capture_default_str();
  app.add_option("--log", l.log_path, "Write a session log (JSONL)");
}

// Config file, then environment, then a resumed session's state, then flags.
SessionConfig build_config(const Common& c) {
  SessionConfig config = c.config_path.empty() ? SessionConfig{} : service::load_config(c.config_path);
  service::apply_environment(config);
  if (!c.resume_path.empty()) {
    const auto restored = service::read_session_log(c.resume_path).restored_config();
    config.mixer = restored.mixer;
    config.taps = restored.taps;
    config.alert = restored.alert;
    config.engine.voices = restored.engine.voices;
  }
  if (c.tick_opt && c.tick_opt->count()) config.tick_seconds = c.tick;
  if (c.mode_opt && c.mode_opt->count()) config.mode = *parse_return_mode(c.mode);
  if (c.seed_opt && c.seed_opt->count()) config.engine.seed = c.seed;
  if (c.listen_opt && c.listen_opt->count()) config.listen = c.listen;
  if (c.local_opt && c.local_opt->count()) config.source.local = c.local;
  return config;
}

class Reporter {
 public:
  Reporter(std::ostream& err, const bool& machine) : err_(err), machine_(machine) {}

  void info(const std::string& event, const json& fields, const std::string& text) {
    if (machine_) {
      json j = fields;
      j["event"] = event;
      err_ << j.dump() << '\n';
    } else {
      err_ << text << '\n';
    }
  }

  int error(const std::string& code, const std::string& message, int status) {
    if (machine_) {
      err_ << json{{"error", {{"code", code}, {"message", message}, {"exit", status}}}}.dump() << '\n';
    } else {
      err_ << "socs: error: " << message << '\n';
    }
    return status;
  }

  void warning(const std::string& message) { info("warning", {{"message", message}}, "socs: warning: " + message); }

 private:
  std::ostream& err_;
  const bool& machine_;
};

int run_session(std::unique_ptr<service::Session> session, Reporter& report, const std::atomic<bool>* interrupted) {
  json started = {{"audio", session->audio_output()}};
  std::string text = "audio: " + session->audio_output();
  if (session->port()) {
    started["port"] = session->port();
    text += "; console endpoint on port " + std::to_string(session->port());
  }
  report.info("started", started, text);
  while (!session->wait_for(std::chrono::milliseconds(50))) {
    if (interrupted && interrupted->load()) break;
  }
  session->stop();
  report.info("stopped", {{"frames", session->frames()}, {"underruns", session->underruns()}},
              std::to_string(session->frames()) + " ticks, " + std::to_string(session->underruns()) + " underruns");
  return kOk;
}

service::SessionOptions session_options(const Live& l, Reporter& report) {
  service::SessionOptions o;
  o.audio = !l.no_audio;
  o.audio_device = l.audio_device;
  o.audio_fallback = l.audio_out;
  o.log_path = l.log_path;
  o.serve = !l.no_serve;
  o.warn = [&report](const std::string& m) { report.warning(m); };
  return o;
}

// Log returns of a packet log or a session log.
std::vector<LogReturnVector> load_returns(const std::string& path, const SessionConfig& config) {
  if (service::is_session_log(path)) return service::read_session_log(path).returns();
  return log_returns(aggregate(read_packet_log(path, config.source.local), config.tick_seconds), config.mode);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const std::atomic<bool>* interrupted) {
  CLI::App app{"Network traffic sonification for security operations", "socs"};
  app.require_subcommand(1);
  bool machine = false;
  app.add_flag("--machine", machine, "Single-line JSON diagnostics on stderr");
  Reporter report(err, machine);

  // Each subcommand owns its option objects.
  Common monitor_common, replay_common, render_common, analyze_common;
  Live monitor_live, replay_live;

  auto* monitor = app.add_subcommand("monitor", "Sonify a live capture interface");
  std::string iface;
  monitor->add_option("--iface", iface, "Capture interface")->required();
  add_common(*monitor, monitor_common, true);
  add_live(*monitor, monitor_live);

  auto* replay = app.add_subcommand("replay", "Replay a packet log or re-audition a session log");
  std::string replay_input;
  double speed = 1.0;
  replay->add_option("input", replay_input, "Packet log (JSONL or pcap) or session log")
      ->required()
      ->check(CLI::ExistingFile);
  replay->add_option("--speed", speed, "Playback speed factor")->capture_default_str()->check(kPositive);
  add_common(*replay, replay_common, true);
  add_live(*replay, replay_live);

  auto* render = app.add_subcommand("render", "Render a packet log offline to WAV and telemetry");
  std::string render_input, wav_out, telemetry_out;
  double render_speed = 1.0;
  render->add_option("input", render_input, "Packet log (JSONL or pcap) or session log")
      ->required()
      ->check(CLI::ExistingFile);
  render->add_option("-o,--out", wav_out, "Output WAV file")->required();
  render->add_option("--telemetry", telemetry_out, "Output telemetry JSONL");
  render->add_option("--speed", render_speed, "Playback speed factor")->capture_default_str()->check(kPositive);
  add_common(*render, render_common, false);

  auto* analyze_cmd = app.add_subcommand("analyze", "Wavelet, spectrum, avalanche and DDoS analysis");
  std::string analyze_input, baseline, report_out, family = "db4";
  AnalysisOptions aopts;
  analyze_cmd->add_option("input", analyze_input, "Packet log or session log")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--baseline", baseline, "Normal-traffic log for the DDoS indicator")
      ->check(CLI::ExistingFile);
  analyze_cmd->add_option("--wavelet", family, "Daubechies wavelet db1..db8")->capture_default_str();
  analyze_cmd->add_option("--levels", aopts.levels, "Decomposition levels")->capture_default_str()->check(CLI::Range(1, 16));
  analyze_cmd->add_option("--threshold", aopts.activation_threshold, "Avalanche activation threshold")->capture_default_str()
      ->check(kPositive);
  analyze_cmd->add_option("-o,--out", report_out, "Write the report here instead of stdout");
  add_common(*analyze_cmd, analyze_common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return report.error("usage", e.what(), kUsageError);
  }

  try {
    if (monitor->parsed()) {
      auto config = build_config(monitor_common);
      config.source.kind = service::SourceSpec::Kind::Live;
      config.source.interface_name = iface;
      return run_session(service::Session::start(config, session_options(monitor_live, report)), report, interrupted);
    }
    if (replay->parsed()) {
      if (service::is_session_log(replay_input)) {
        auto log = service::read_session_log(replay_input);
        log.config.listen = build_config(replay_common).listen;
        return run_session(service::Session::start_reaudition(log, speed, session_options(replay_live, report)), report,
                           interrupted);
      }
      auto config = build_config(replay_common);
      config.source.kind = service::SourceSpec::Kind::Replay;
      config.source.replay = {replay_input, speed};
      return run_session(service::Session::start(config, session_options(replay_live, report)), report, interrupted);
    }
    if (render->parsed()) {
      service::RenderResult r;
      if (service::is_session_log(render_input)) {
        r = service::render_reaudition(service::read_session_log(render_input), wav_out, render_speed);
      } else {
        const auto config = build_config(render_common);
        r = service::render_session(config, read_packet_log(render_input, config.source.local), wav_out,
                                    telemetry_out, render_speed);
      }
      report.info("rendered", {{"ticks", r.frames}, {"wav_frames", r.wav_frames}, {"wav", wav_out}},
                  std::to_string(r.frames) + " ticks rendered to " + wav_out);
      return kOk;
    }
    if (analyze_cmd->parsed()) {
      const auto f = wavelet::parse_family(family);
      if (!f) return report.error("usage", "--wavelet: expected db1..db8, got " + family, kUsageError);
      aopts.family = *f;
      const auto config = build_config(analyze_common);
      const auto current = load_returns(analyze_input, config);
      std::optional<std::vector<LogReturnVector>> base;
      if (!baseline.empty()) base = load_returns(baseline, config);
      const auto text = to_json(analyze(current, aopts, base ? &*base : nullptr)).dump(2);
      if (report_out.empty()) {
        out << text << '\n';
      } else {
        std::ofstream file(report_out);
        file << text << '\n';
        if (!file) throw Error(ErrorCode::Io, "cannot write " + report_out);
      }
      return kOk;
    }
  } catch (const Error& e) {
    return report.error(std::string(to_string(e.code())), e.what(), kRuntimeError);
  } catch (const std::exception& e) {
    return report.error("internal", e.what(), kRuntimeError);
  }
  return kUsageError;
}

}  // namespace socs::cli
