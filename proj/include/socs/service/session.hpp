#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "socs/audio/realtime.hpp"
#include "socs/capture.hpp"
#include "socs/service/config.hpp"
#include "socs/service/pipeline.hpp"
#include "socs/service/session_log.hpp"
#include "socs/service/telemetry.hpp"
#include "socs/service/ws_server.hpp"

namespace socs::service {

struct SessionOptions {
  bool audio = true;
  std::string audio_device;
  // Where audio goes when no device can be opened.
  std::filesystem::path audio_fallback = "socs-session.wav";
  std::filesystem::path log_path;  // empty: no session log
  bool serve = true;               // WebSocket endpoint
  std::function<void(const std::string&)> warn;
};

// One recorded tick fed back through the pipeline.
struct RecordedTick {
  IntervalSample sample;
  LogReturnVector returns;
};

// A running capture -> metrics -> audio session. Capture runs on its own
// thread, orchestration on another, audio on the renderer's thread and the
// WebSocket endpoint on a fourth.
class Session {
 public:
  // Validates everything before any side effect, then starts. With no
  // explicit source one is opened from config.source. Throws Error.
  static std::unique_ptr<Session> start(const SessionConfig& config, SessionOptions options,
                                        std::unique_ptr<PacketSource> source = nullptr);
  // Re-auditions a session log at `speed`, feeding the recorded returns.
  static std::unique_ptr<Session> start_reaudition(const SessionLog& log, double speed, SessionOptions options);

  ~Session();

  void stop();
  // True once the source ended and every tick has been processed.
  bool wait_for(std::chrono::milliseconds timeout);
  void wait();

  void post(const Control& control);
  // Parses and checks a client message, then queues it. Returns an error
  // message (as a JSON line) if it was rejected.
  std::optional<std::string> post_text(std::string_view text);

  TelemetryHub& hub() { return *hub_; }
  std::int64_t frames() const { return frames_.load(); }
  std::uint64_t underruns() const { return renderer_ ? renderer_->underruns() : 0; }
  audio::RealtimeRenderer* renderer() { return renderer_.get(); }
  unsigned short port() const { return server_ ? server_->port() : 0; }
  const SessionConfig& initial_config() const { return initial_; }
  SessionConfig current_config() const;
  std::string audio_output() const { return audio_output_; }

 private:
  Session() = default;
  void launch(std::function<void()> producer);
  void orchestrate();
  struct Item {
    RecordedTick tick;
    bool has_returns = false;
    std::optional<Control> control;  // a logged control, replayed in order
  };
  void enqueue(Item item);

  SessionConfig initial_;
  SessionOptions options_;
  std::unique_ptr<PacketSource> source_;
  std::unique_ptr<Pipeline> pipeline_;
  std::unique_ptr<TelemetryHub> hub_;
  std::unique_ptr<WebSocketServer> server_;
  std::unique_ptr<audio::RealtimeRenderer> renderer_;
  std::unique_ptr<SessionLogWriter> log_;
  std::string audio_output_ = "none";

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Item> ticks_;
  std::deque<Control> controls_;
  bool producer_done_ = false;
  bool finished_ = false;
  std::atomic<bool> stopping_{false};
  std::atomic<std::int64_t> frames_{0};
  mutable std::mutex config_mutex_;
  SessionConfig current_;

  std::thread producer_, orchestrator_;
};

struct RenderResult {
  std::size_t frames = 0;
  std::uint64_t wav_frames = 0;
};

// Offline, single-threaded and deterministic: packet records through the
// pipeline into a session log (telemetry JSONL) and a WAV file. Either path
// may be empty to skip that output.
RenderResult render_session(const SessionConfig& config, const std::vector<PacketRecord>& records,
                            const std::filesystem::path& wav_path, const std::filesystem::path& log_path,
                            double speed = 1.0);

// Renders the recorded per-tick parameters of a session log at `speed`.
RenderResult render_reaudition(const SessionLog& log, const std::filesystem::path& wav_path, double speed);

}  // namespace socs::service
