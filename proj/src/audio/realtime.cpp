#include "socs/audio/realtime.hpp"

#include "socs/error.hpp"

namespace socs::audio {

std::unique_ptr<AudioOutput> open_audio_device(const std::string& name, double) {
  throw Error(ErrorCode::AudioDeviceUnavailable,
              "no audio device backend in this build" + (name.empty() ? std::string() : " (requested '" + name + "')"));
}

RealtimeRenderer::RealtimeRenderer(std::unique_ptr<AudioEngine> engine, std::unique_ptr<AudioOutput> output,
                                   Options options)
    : engine_(std::move(engine)), output_(std::move(output)), options_(options), mailbox_(engine_->targets()) {}

RealtimeRenderer::~RealtimeRenderer() { stop(); }

void RealtimeRenderer::start() {
  if (running_.exchange(true)) return;
  thread_ = std::thread([this] { run(); });
}

void RealtimeRenderer::stop() {
  running_ = false;
  if (thread_.joinable()) thread_.join();
}

void RealtimeRenderer::run() {
  using Clock = std::chrono::steady_clock;
  const auto& cfg = engine_->config();
  const auto period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(cfg.block_size / cfg.sample_rate));
  StereoBlock block(2, cfg.block_size);
  EngineParams params = engine_->targets();
  const auto t0 = Clock::now();
  std::uint64_t k = 0;

  while (running_.load(std::memory_order_relaxed)) {
    // The device asks for block k at t0 + k * period and plays it
    // latency_blocks later.
    const auto wanted = t0 + period * static_cast<std::int64_t>(k);
    if (!options_.free_run) std::this_thread::sleep_until(wanted);

    const auto begin = Clock::now();
    if (mailbox_.take(params)) {
      try {
        engine_->apply(params);
      } catch (const Error&) {
        // Publishers validate; a bad snapshot keeps the previous targets.
      }
    }
    engine_->render(block);
    output_->submit(block);
    const auto end = Clock::now();

    const auto us = static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(end - begin).count());
    if (us > worst_us_.load(std::memory_order_relaxed)) worst_us_.store(us, std::memory_order_relaxed);
    if (!options_.free_run && end > wanted + period * options_.latency_blocks) {
      underruns_.fetch_add(1, std::memory_order_relaxed);
    }
    blocks_.fetch_add(1, std::memory_order_relaxed);
    ++k;
  }
}

}  // namespace socs::audio
