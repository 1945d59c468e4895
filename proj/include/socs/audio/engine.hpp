#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "socs/audio/filter.hpp"
#include "socs/audio/voice.hpp"
#include "socs/audio/wav.hpp"
#include "socs/metrics.hpp"

namespace socs::audio {

struct ChannelParams {
  double gain = 0.0;  // [0, 1]
  double center_hz = 1000.0;
  double q = 3.0;
  bool tap = true;

  bool operator==(const ChannelParams&) const = default;
};

struct MixerState {
  std::array<double, 4> gains{1.0, 1.0, 1.0, 1.0};
  double master = 1.0;

  bool valid() const;
  bool operator==(const MixerState&) const = default;
};

// Everything the renderer needs for one block; copied whole between threads.
struct EngineParams {
  std::array<ChannelParams, 4> channels{};
  MixerState mixer{};

  bool operator==(const EngineParams&) const = default;
};

enum class VoiceKind { Loop, NoiseSynth };

struct VoiceSpec {
  VoiceKind kind = VoiceKind::Loop;
  std::string asset;  // loop asset id; unused for NoiseSynth
  Channel channel = Channel::BytesSent;
  ScalerSpec gain{0.0, 4.0, 0.1, 1.0};
  ScalerSpec center{0.0, 4.0, 200.0, 2000.0};
  ScalerSpec resonance{0.0, 4.0, 3.0, 10.0};
  double pan = 0.0;  // [-1, 1], left to right

  bool operator==(const VoiceSpec&) const = default;
};

std::vector<VoiceSpec> default_voices();

struct EngineConfig {
  double sample_rate = 48000.0;
  int block_size = 256;
  double ramp_ms = 50.0;
  double warmup_seconds = 0.5;
  std::uint64_t seed = 1;
  std::vector<VoiceSpec> voices = default_voices();

  // Throws Error(InvalidConfig) naming the first violated invariant.
  void validate() const;
  const VoiceSpec& voice_for(Channel c) const;
  bool operator==(const EngineConfig&) const = default;
};

// Maps a log return to the voice's audio targets. Magnitude drives the
// scalers, so large drops and large rises both sound loud and bright.
ChannelParams map_return(const VoiceSpec& spec, double log_return, bool tap = true);

EngineParams map_returns(const EngineConfig& config, const LogReturnVector& v, const MixerState& mixer = {},
                         const std::array<bool, 4>& taps = {true, true, true, true});

// Parameters at rest: every return zero, all taps on, unity mixer.
EngineParams initial_params(const EngineConfig& config);

// Soft limiter: identity up to 0.5, then a tanh knee that approaches 1.
inline double soft_clip(double x) {
  const double a = std::abs(x);
  if (a <= 0.5) return x;
  const double y = 0.5 + 0.5 * std::tanh((a - 0.5) / 0.5);
  return x < 0.0 ? -y : y;
}

// Constant-power pan gains (left, right).
inline std::array<double, 2> pan_gains(double pan) {
  const double theta = (pan + 1.0) * M_PI / 4.0;
  return {std::cos(theta), std::sin(theta)};
}

class AudioEngine {
 public:
  explicit AudioEngine(const EngineConfig& config);
  // Voices indexed by channel; for calibration and tests.
  AudioEngine(const EngineConfig& config, std::array<std::unique_ptr<Voice>, 4> voices);

  // Throws Error(InvalidArgument) on out-of-range values.
  void set_channel_params(Channel c, const ChannelParams& p);
  void set_mixer(const MixerState& m);
  void apply(const EngineParams& p);

  // Fills every column of `out`. Allocation free.
  void render(Eigen::Ref<StereoBlock> out);

  const EngineConfig& config() const { return config_; }
  const EngineParams& targets() const { return targets_; }
  int ramp_samples() const { return ramp_len_; }

 private:
  struct Ramp {
    double value = 0.0, target = 0.0, step = 0.0;
    int remaining = 0;

    void jump(double v) {
      value = target = v;
      remaining = 0;
    }
    void to(double v, int n) {
      if (v == target) return;
      target = v;
      if (n <= 0) return jump(v);
      step = (v - value) / n;
      remaining = n;
    }
    double next() {
      if (remaining > 0) value = --remaining == 0 ? target : value + step;
      return value;
    }
    bool moving() const { return remaining > 0; }
  };

  struct Slot {
    std::unique_ptr<Voice> voice;
    BandPass filter;
    Ramp gain, center, q, mix;
    std::array<double, 2> pan{};
  };

  void init();
  void render_chunk(Eigen::Ref<StereoBlock> out, Eigen::Index offset, Eigen::Index n);

  EngineConfig config_;
  EngineParams targets_;
  std::array<Slot, 4> slots_;
  Ramp master_;
  int ramp_len_ = 0;
  std::vector<double> voice_buf_, left_, right_;
};

struct RenderTiming {
  double tick_seconds = 1.0;
  double speed = 1.0;
};

// Frame index at which tick i begins, after warmup.
std::int64_t tick_start_frame(const EngineConfig& config, const RenderTiming& timing, std::size_t tick);

// Renders warmup at initial parameters, then one tick per entry in `params`.
// Returns frames written. Throws Error(Io) if `path` cannot be written.
std::uint64_t render_params(const std::vector<EngineParams>& params, const EngineConfig& config,
                            const RenderTiming& timing, const std::filesystem::path& path);

std::uint64_t render_offline(const std::vector<LogReturnVector>& returns, const EngineConfig& config,
                             const RenderTiming& timing, const std::filesystem::path& path);

}  // namespace socs::audio
