#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <type_traits>

#include "socs/audio/engine.hpp"

namespace socs::audio {

// Single-producer single-consumer latest-value handoff. Neither side ever
// blocks or allocates; the reader sees the most recent complete write.
template <typename T>
class Mailbox {
  static_assert(std::is_trivially_copyable_v<T>);

 public:
  explicit Mailbox(const T& initial = T{}) { slots_.fill(initial); }

  void publish(const T& value) {
    slots_[write_] = value;
    const auto prev = middle_.exchange(static_cast<std::uint8_t>(write_ | kFresh), std::memory_order_acq_rel);
    write_ = prev & kIndex;
  }

  // Returns true and updates `out` if a newer value was published.
  bool take(T& out) {
    if (!(middle_.load(std::memory_order_relaxed) & kFresh)) return false;
    const auto prev = middle_.exchange(static_cast<std::uint8_t>(read_), std::memory_order_acq_rel);
    read_ = prev & kIndex;
    out = slots_[read_];
    return true;
  }

 private:
  static constexpr std::uint8_t kIndex = 0x3, kFresh = 0x4;
  std::array<T, 3> slots_;
  std::atomic<std::uint8_t> middle_{1};
  std::uint8_t write_ = 0;
  std::uint8_t read_ = 2;
};

// The narrow boundary to whatever plays the audio.
class AudioOutput {
 public:
  virtual ~AudioOutput() = default;
  virtual void submit(const Eigen::Ref<const StereoBlock>& block) = 0;
  virtual std::string describe() const = 0;
};

class NullOutput final : public AudioOutput {
 public:
  void submit(const Eigen::Ref<const StereoBlock>& block) override { frames_ += block.cols(); }
  std::string describe() const override { return "null"; }
  std::uint64_t frames() const { return frames_; }

 private:
  std::uint64_t frames_ = 0;
};

class WavFileOutput final : public AudioOutput {
 public:
  WavFileOutput(const std::filesystem::path& path, int sample_rate) : path_(path), writer_(path, sample_rate) {}
  void submit(const Eigen::Ref<const StereoBlock>& block) override { writer_.write(block); }
  std::string describe() const override { return "wav:" + path_.string(); }
  void close() { writer_.close(); }

 private:
  std::filesystem::path path_;
  WavWriter writer_;
};

// Opens the host playback device. This build carries no device backend, so
// it always throws Error(AudioDeviceUnavailable); callers fall back to a file.
std::unique_ptr<AudioOutput> open_audio_device(const std::string& name, double sample_rate);

// Renders blocks on a dedicated thread, paced to the output clock, picking up
// the newest EngineParams at each block boundary.
class RealtimeRenderer {
 public:
  struct Options {
    // Blocks of slack between render and the playback deadline.
    int latency_blocks = 4;
    // Render as fast as possible (no clock pacing); for tests and files.
    bool free_run = false;
  };

  RealtimeRenderer(std::unique_ptr<AudioEngine> engine, std::unique_ptr<AudioOutput> output, Options options);
  RealtimeRenderer(std::unique_ptr<AudioEngine> engine, std::unique_ptr<AudioOutput> output)
      : RealtimeRenderer(std::move(engine), std::move(output), Options{}) {}
  ~RealtimeRenderer();

  void start();
  void stop();

  // Called from the orchestration context.
  void publish(const EngineParams& params) { mailbox_.publish(params); }

  std::uint64_t blocks() const { return blocks_.load(std::memory_order_relaxed); }
  std::uint64_t underruns() const { return underruns_.load(std::memory_order_relaxed); }
  // Worst render time of a single block, in microseconds.
  std::uint64_t worst_block_us() const { return worst_us_.load(std::memory_order_relaxed); }
  AudioOutput& output() { return *output_; }

 private:
  void run();

  std::unique_ptr<AudioEngine> engine_;
  std::unique_ptr<AudioOutput> output_;
  Options options_;
  Mailbox<EngineParams> mailbox_;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> blocks_{0}, underruns_{0}, worst_us_{0};
  std::thread thread_;
};

}  // namespace socs::audio
