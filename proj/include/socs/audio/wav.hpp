#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include <Eigen/Core>

namespace socs::audio {

// Interleaved stereo block: column j holds frame j as (left, right).
using StereoBlock = Eigen::Matrix<float, 2, Eigen::Dynamic>;

inline std::int16_t to_pcm16(float x) {
  const float c = x > 1.0f ? 1.0f : (x < -1.0f ? -1.0f : x);
  return static_cast<std::int16_t>(std::lround(c * 32767.0f));
}

// Streams 16-bit PCM frames to a RIFF/WAVE file and patches the sizes on
// close. Throws Error(Io) if the path cannot be written.
class WavWriter {
 public:
  WavWriter(const std::filesystem::path& path, int sample_rate, int channels = 2);
  ~WavWriter();
  WavWriter(const WavWriter&) = delete;
  WavWriter& operator=(const WavWriter&) = delete;

  void write(const Eigen::Ref<const StereoBlock>& block);
  void close();
  std::uint64_t frames() const { return frames_; }

 private:
  std::ofstream out_;
  int sample_rate_;
  int channels_;
  std::uint64_t frames_ = 0;
  bool closed_ = false;
};

struct WavData {
  int sample_rate = 0;
  int channels = 0;
  // channels x frames, scaled to [-1, 1).
  Eigen::MatrixXf samples;
};

WavData read_wav(const std::filesystem::path& path);

}  // namespace socs::audio
