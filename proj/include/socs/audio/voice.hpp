#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "socs/audio/rng.hpp"

namespace socs::audio {

// A mono sound generator feeding one mixer channel.
class Voice {
 public:
  virtual ~Voice() = default;
  // Overwrites `out`; must not allocate.
  virtual void render(std::span<double> out) = 0;
};

// Plays a sample buffer end to end and wraps to the start.
class LoopVoice final : public Voice {
 public:
  explicit LoopVoice(std::shared_ptr<const std::vector<double>> samples);

  void render(std::span<double> out) override;
  std::size_t length() const { return samples_->size(); }
  std::size_t position() const { return pos_; }

 private:
  std::shared_ptr<const std::vector<double>> samples_;
  std::size_t pos_ = 0;
};

// Seeded white noise shaped into rain: a high-passed hiss bed plus sparse
// decaying drops. With raw output enabled the white source is emitted as is.
class NoiseVoice final : public Voice {
 public:
  NoiseVoice(std::uint64_t seed, double sample_rate);

  void render(std::span<double> out) override;
  void set_raw(bool raw) { raw_ = raw; }

 private:
  Rng rng_;
  double sample_rate_;
  bool raw_ = false;
  double hp_x1_ = 0.0, hp_y1_ = 0.0, hp_coeff_;
  double drop_env_ = 0.0, drop_decay_, drop_probability_;
};

// Steady sine, used to calibrate filters.
class ToneVoice final : public Voice {
 public:
  ToneVoice(double frequency_hz, double amplitude, double sample_rate);
  void render(std::span<double> out) override;

 private:
  double phase_ = 0.0, increment_, amplitude_;
};

// Names of the generated ambient loops.
inline constexpr std::string_view kLoopAssets[] = {"stream", "crickets", "wind"};

// Loads a loop by id: one of kLoopAssets, or "file:<path>" for a 16-bit PCM
// WAV. Throws Error(MissingAsset | CorruptAsset).
std::unique_ptr<LoopVoice> load_loop(std::string_view asset_id, double sample_rate);

// The generated asset buffer (cached per id and sample rate).
std::shared_ptr<const std::vector<double>> loop_asset(std::string_view asset_id, double sample_rate);

inline constexpr std::size_t kGeneratedLoopLength = 1u << 17;

std::unique_ptr<NoiseVoice> noise_voice(std::uint64_t seed, double sample_rate);

}  // namespace socs::audio
