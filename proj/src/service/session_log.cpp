#include "socs/service/session_log.hpp"

#include "socs/error.hpp"

namespace socs::service {

using nlohmann::json;

SessionLogWriter::SessionLogWriter(const std::filesystem::path& path, const SessionConfig& config)
    : path_(path), out_(path, std::ios::trunc) {
  if (!out_) throw Error(ErrorCode::Io, "cannot write session log " + path.string());
  line(json{{"type", "header"}, {"version", 1}, {"config_hash", config_hash(config)}, {"config", to_json(config)}}
           .dump());
}

void SessionLogWriter::line(const std::string& s) {
  out_ << s << '\n';
  if (!out_) throw Error(ErrorCode::Io, "write failed on session log " + path_.string());
}

void SessionLogWriter::frame(const TelemetryFrame& f) { line(to_json(f).dump()); }

void SessionLogWriter::control(const Control& c, std::int64_t after_index) {
  line(json{{"type", "control"}, {"after", after_index}, {"control", to_json(c)}}.dump());
}

void SessionLogWriter::flush() { out_.flush(); }

void SessionLogWriter::close() {
  if (!out_.is_open()) return;
  out_.close();
  if (out_.fail()) throw Error(ErrorCode::Io, "failed to close session log " + path_.string());
}

std::vector<LogReturnVector> SessionLog::returns() const {
  std::vector<LogReturnVector> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.returns);
  return out;
}

std::vector<audio::EngineParams> SessionLog::params() const {
  std::vector<audio::EngineParams> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.params);
  return out;
}

SessionConfig SessionLog::restored_config() const {
  Pipeline p(config);
  for (const auto& [after, c] : controls) p.apply(c);
  return p.config();
}

SessionLog read_session_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open session log " + path.string());
  SessionLog log;
  std::string text;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const auto j = json::parse(text);
      const auto type = j.at("type").get<std::string>();
      if (!header) {
        if (type != "header") throw Error(ErrorCode::MalformedInput, "session log must start with a header");
        log.config = parse_config(j.at("config").at("text").get<std::string>());
        log.config_hash = j.at("config_hash").get<std::string>();
        header = true;
      } else if (type == "frame") {
        log.frames.push_back(frame_from_json(j));
      } else if (type == "control") {
        log.controls.emplace_back(j.at("after").get<std::int64_t>(), control_from_json(j.at("control")));
      } else {
        throw Error(ErrorCode::MalformedInput, "unexpected line type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedInput, where + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedInput, where + e.what());
    }
  }
  if (!header) throw Error(ErrorCode::MalformedInput, path.string() + ": empty session log");
  return log;
}

bool is_session_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string first;
  if (!in || !std::getline(in, first)) return false;
  try {
    const auto j = json::parse(first);
    return j.is_object() && j.value("type", "") == "header";
  } catch (const json::exception&) {
    return false;
  }
}

}  // namespace socs::service
