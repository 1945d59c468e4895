#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "socs/service/config.hpp"
#include "socs/service/pipeline.hpp"
#include "socs/service/telemetry.hpp"

namespace socs::service {

// JSONL session log: one header line with the config and its hash, then
// frame lines interleaved with the control lines applied between ticks.
class SessionLogWriter {
 public:
  // Throws Error(Io).
  SessionLogWriter(const std::filesystem::path& path, const SessionConfig& config);

  void frame(const TelemetryFrame& f);
  void control(const Control& c, std::int64_t after_index);
  void flush();
  void close();

 private:
  void line(const std::string& s);

  std::filesystem::path path_;
  std::ofstream out_;
};

struct SessionLog {
  SessionConfig config;
  std::string config_hash;
  std::vector<TelemetryFrame> frames;
  std::vector<std::pair<std::int64_t, Control>> controls;

  std::vector<LogReturnVector> returns() const;
  std::vector<audio::EngineParams> params() const;
  // Header config with every logged control applied in order: the state to
  // resume from.
  SessionConfig restored_config() const;
};

// Throws Error(UnreadableFile | MalformedInput).
SessionLog read_session_log(const std::filesystem::path& path);

// True if the file starts with a session log header line.
bool is_session_log(const std::filesystem::path& path);

}  // namespace socs::service
