#include "socs/service/session.hpp"

#include <iostream>

#include "socs/error.hpp"

namespace socs::service {

using nlohmann::json;

namespace {

constexpr std::size_t kTickQueue = 4096;

std::string error_line(const std::string& message) {
  return json{{"type", "error"}, {"message", message}}.dump();
}

std::unique_ptr<PacketSource> open_source(const SessionConfig& c) {
  switch (c.source.kind) {
    case SourceSpec::Kind::Live: return open_live_source(c.source.interface_name, c.source.local);
    case SourceSpec::Kind::Replay: return open_replay_source(c.source.replay, c.source.local);
    case SourceSpec::Kind::None: break;
  }
  throw Error(ErrorCode::InvalidConfig, "session has no packet source");
}

}  // namespace

std::unique_ptr<Session> Session::start(const SessionConfig& config, SessionOptions options,
                                        std::unique_ptr<PacketSource> source) {
  config.validate();
  std::unique_ptr<Session> s(new Session());
  s->initial_ = config;
  s->current_ = config;
  s->options_ = std::move(options);
  s->pipeline_ = std::make_unique<Pipeline>(config);
  s->source_ = source ? std::move(source) : open_source(config);
  auto* raw = s->source_.get();
  const double tick = config.tick_seconds;
  Session* self = s.get();
  s->launch([self, raw, tick] {
    Aggregator agg(tick);
    const auto emit = [self](const std::vector<IntervalSample>& samples) {
      for (const auto& x : samples) self->enqueue({{x, {}}, false, std::nullopt});
    };
    while (!self->stopping_) {
      const auto ev = raw->poll();
      if (ev.kind == SourceEvent::Kind::Packet) {
        emit(agg.push(ev.packet));
      } else if (ev.kind == SourceEvent::Kind::Idle) {
        emit(agg.advance_to(ev.now));
      } else {
        emit(agg.finish());
        break;
      }
    }
  });
  return s;
}

std::unique_ptr<Session> Session::start_reaudition(const SessionLog& log, double speed, SessionOptions options) {
  if (!(speed > 0.0)) throw Error(ErrorCode::InvalidArgument, "speed must be positive");
  log.config.validate();
  std::unique_ptr<Session> s(new Session());
  s->initial_ = log.config;
  s->current_ = log.config;
  s->options_ = std::move(options);
  s->pipeline_ = std::make_unique<Pipeline>(log.config);
  Session* self = s.get();
  s->launch([self, frames = log.frames, controls = log.controls, speed, tick = log.config.tick_seconds] {
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    std::size_t next_control = 0;
    // Controls logged before the first frame apply up front.
    const auto controls_through = [&](std::int64_t index) {
      while (next_control < controls.size() && controls[next_control].first <= index) {
        self->enqueue({{}, false, controls[next_control++].second});
      }
    };
    controls_through(frames.empty() ? std::numeric_limits<std::int64_t>::max() : frames.front().index - 1);
    for (std::size_t i = 0; i < frames.size() && !self->stopping_; ++i) {
      const auto due = t0 + std::chrono::duration_cast<Clock::duration>(
                                std::chrono::duration<double>(static_cast<double>(i + 1) * tick / speed));
      while (!self->stopping_ && Clock::now() < due) {
        std::this_thread::sleep_until(std::min(due, Clock::now() + std::chrono::milliseconds(20)));
      }
      self->enqueue({{frames[i].sample, frames[i].returns}, true, std::nullopt});
      controls_through(frames[i].index);
    }
  });
  return s;
}

void Session::launch(std::function<void()> producer) {
  const auto warn = [this](const std::string& m) {
    if (options_.warn) {
      options_.warn(m);
    } else {
      std::cerr << "warning: " << m << "\n";
    }
  };
  // Everything that can fail happens before any thread starts.
  hub_ = std::make_unique<TelemetryHub>(to_json(initial_), static_cast<std::size_t>(initial_.telemetry_window),
                                        static_cast<std::size_t>(initial_.subscriber_queue));
  if (options_.audio) {
    auto engine = std::make_unique<audio::AudioEngine>(initial_.engine);
    std::unique_ptr<audio::AudioOutput> out;
    try {
      out = audio::open_audio_device(options_.audio_device, initial_.engine.sample_rate);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AudioDeviceUnavailable) throw;
      warn(std::string(e.what()) + "; rendering audio to " + options_.audio_fallback.string());
      out = std::make_unique<audio::WavFileOutput>(options_.audio_fallback,
                                                   static_cast<int>(std::lround(initial_.engine.sample_rate)));
    }
    audio_output_ = out->describe();
    engine->apply(pipeline_->engine_params());
    renderer_ = std::make_unique<audio::RealtimeRenderer>(std::move(engine), std::move(out));
  }
  if (!options_.log_path.empty()) log_ = std::make_unique<SessionLogWriter>(options_.log_path, initial_);
  if (options_.serve) {
    server_ = std::make_unique<WebSocketServer>(*hub_, [this](std::string_view text) { return post_text(text); });
    server_->start(initial_.listen);
  }

  if (renderer_) renderer_->start();
  orchestrator_ = std::thread([this] { orchestrate(); });
  producer_ = std::thread([this, producer = std::move(producer)] {
    try {
      producer();
    } catch (const std::exception& e) {
      if (options_.warn) options_.warn(std::string("capture stopped: ") + e.what());
    }
    std::lock_guard lock(mutex_);
    producer_done_ = true;
    cv_.notify_all();
  });
}

void Session::enqueue(Item item) {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return ticks_.size() < kTickQueue || stopping_; });
  if (stopping_) return;
  ticks_.push_back(std::move(item));
  cv_.notify_all();
}

void Session::post(const Control& control) {
  std::lock_guard lock(mutex_);
  controls_.push_back(control);
  cv_.notify_all();
}

std::optional<std::string> Session::post_text(std::string_view text) {
  try {
    const auto control = parse_control(text);
    Pipeline probe(current_config());
    probe.apply(control);
    post(control);
    return std::nullopt;
  } catch (const Error& e) {
    return error_line(e.what());
  }
}

SessionConfig Session::current_config() const {
  std::lock_guard lock(config_mutex_);
  return current_;
}

void Session::orchestrate() {
  bool firing = false;
  std::int64_t last_index = -1;
  const auto apply_control = [&](const Control& c, bool from_log) {
    try {
      pipeline_->apply(c);
    } catch (const Error& e) {
      hub_->publish(json::parse(error_line(e.what())));
      return;
    }
    {
      std::lock_guard lock(config_mutex_);
      current_ = pipeline_->config();
    }
    if (log_ && !from_log) log_->control(c, last_index);
    hub_->publish({{"type", "control"}, {"control", to_json(c)}});
    if (renderer_) renderer_->publish(pipeline_->engine_params());
  };

  while (true) {
    std::deque<Control> controls;
    std::optional<Item> item;
    bool done = false;
    {
      std::unique_lock lock(mutex_);
      cv_.wait_for(lock, std::chrono::milliseconds(50),
                   [&] { return !ticks_.empty() || !controls_.empty() || producer_done_ || stopping_; });
      controls.swap(controls_);
      if (!ticks_.empty()) {
        item = std::move(ticks_.front());
        ticks_.pop_front();
        cv_.notify_all();
      }
      done = stopping_ || (producer_done_ && ticks_.empty() && !item);
    }
    for (const auto& c : controls) apply_control(c, false);
    if (item) {
      if (item->control) {
        apply_control(*item->control, true);
      } else {
        const auto frame = item->has_returns ? pipeline_->step_with(item->tick.sample, item->tick.returns)
                                             : pipeline_->step(item->tick.sample);
        last_index = frame.index;
        if (log_) log_->frame(frame);
        hub_->publish_frame(frame);
        if (frame.alert != firing) {
          firing = frame.alert;
          hub_->publish({{"type", "alert"}, {"index", frame.index}, {"firing", firing},
                         {"count", frame.exceedances}});
        }
        if (renderer_) renderer_->publish(frame.params);
        frames_.fetch_add(1);
      }
    }
    if (done) break;
  }
  if (log_) log_->flush();
  std::lock_guard lock(mutex_);
  finished_ = true;
  cv_.notify_all();
}

bool Session::wait_for(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  return cv_.wait_for(lock, timeout, [&] { return finished_; });
}

void Session::wait() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return finished_; });
}

void Session::stop() {
  {
    std::lock_guard lock(mutex_);
    if (stopping_ && !producer_.joinable() && !orchestrator_.joinable()) return;
    stopping_ = true;
    cv_.notify_all();
  }
  if (source_) source_->cancel();
  if (producer_.joinable()) producer_.join();
  if (orchestrator_.joinable()) orchestrator_.join();
  if (server_) server_->stop();
  if (renderer_) {
    renderer_->stop();
    if (auto* wav = dynamic_cast<audio::WavFileOutput*>(&renderer_->output())) wav->close();
  }
  if (log_) log_->close();
}

Session::~Session() {
  try {
    stop();
  } catch (...) {
  }
}

RenderResult render_session(const SessionConfig& config, const std::vector<PacketRecord>& records,
                            const std::filesystem::path& wav_path, const std::filesystem::path& log_path,
                            double speed) {
  config.validate();
  Pipeline pipeline(config);
  std::unique_ptr<SessionLogWriter> log;
  if (!log_path.empty()) log = std::make_unique<SessionLogWriter>(log_path, config);
  std::vector<audio::EngineParams> params;
  for (const auto& sample : aggregate(records, config.tick_seconds)) {
    const auto frame = pipeline.step(sample);
    if (log) log->frame(frame);
    params.push_back(frame.params);
  }
  if (log) log->close();
  RenderResult result{params.size(), 0};
  if (!wav_path.empty()) {
    result.wav_frames = audio::render_params(params, config.engine, {config.tick_seconds, speed}, wav_path);
  }
  return result;
}

RenderResult render_reaudition(const SessionLog& log, const std::filesystem::path& wav_path, double speed) {
  const auto params = log.params();
  return {params.size(), audio::render_params(params, log.config.engine, {log.config.tick_seconds, speed}, wav_path)};
}

}  // namespace socs::service
