#include "socs/audio/voice.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include "socs/audio/wav.hpp"
#include "socs/error.hpp"

namespace socs::audio {

LoopVoice::LoopVoice(std::shared_ptr<const std::vector<double>> samples) : samples_(std::move(samples)) {
  if (!samples_ || samples_->empty()) throw Error(ErrorCode::CorruptAsset, "loop has no samples");
}

void LoopVoice::render(std::span<double> out) {
  const auto& s = *samples_;
  std::size_t i = 0;
  while (i < out.size()) {
    const std::size_t n = std::min(out.size() - i, s.size() - pos_);
    std::copy_n(s.begin() + static_cast<std::ptrdiff_t>(pos_), n, out.begin() + static_cast<std::ptrdiff_t>(i));
    i += n;
    pos_ += n;
    if (pos_ == s.size()) pos_ = 0;
  }
}

NoiseVoice::NoiseVoice(std::uint64_t seed, double sample_rate) : rng_(seed), sample_rate_(sample_rate) {
  // One-pole high-pass near 800 Hz for the hiss bed.
  hp_coeff_ = std::exp(-2.0 * M_PI * 800.0 / sample_rate_);
  // Drops decay over roughly 8 ms and arrive about 30 times a second.
  drop_decay_ = std::exp(-1.0 / (0.008 * sample_rate_));
  drop_probability_ = 30.0 / sample_rate_;
}

void NoiseVoice::render(std::span<double> out) {
  if (raw_) {
    for (auto& y : out) y = 0.5 * rng_.bipolar();
    return;
  }
  for (auto& y : out) {
    const double white = rng_.bipolar();
    const double hp = hp_coeff_ * (hp_y1_ + white - hp_x1_);
    hp_x1_ = white;
    hp_y1_ = hp;
    if (rng_.uniform() < drop_probability_) drop_env_ = std::max(drop_env_, 0.3 + 0.7 * rng_.uniform());
    drop_env_ *= drop_decay_;
    y = 0.25 * hp + 0.6 * drop_env_ * white;
  }
}

ToneVoice::ToneVoice(double frequency_hz, double amplitude, double sample_rate)
    : increment_(2.0 * M_PI * frequency_hz / sample_rate), amplitude_(amplitude) {}

void ToneVoice::render(std::span<double> out) {
  for (auto& y : out) {
    y = amplitude_ * std::sin(phase_);
    phase_ += increment_;
    if (phase_ >= 2.0 * M_PI) phase_ -= 2.0 * M_PI;
  }
}

namespace {

struct Texture {
  std::uint64_t seed;
  // Spectral magnitude as a function of frequency in Hz.
  double (*shape)(double f);
  // Envelope as a function of loop phase in [0, 1); must be 1-periodic.
  double (*envelope)(double phase);
};

double band(double f, double lo, double hi) {
  if (f <= 0.0) return 0.0;
  const double l = f / lo, h = hi / f;
  return 1.0 / std::sqrt((1.0 + 1.0 / (l * l * l * l)) * (1.0 + 1.0 / (h * h * h * h)));
}

// Running water: broadband burble with a pink tilt and gentle surges.
double stream_shape(double f) { return band(f, 250.0, 5000.0) / std::sqrt(std::max(f, 1.0) / 250.0); }
double stream_env(double p) {
  return 0.8 + 0.12 * std::sin(2.0 * M_PI * 7.0 * p) + 0.08 * std::sin(2.0 * M_PI * 23.0 * p + 1.3);
}

// Crickets: a high chorus between about 2.6 and 4.2 kHz gated into chirps.
double cricket_shape(double f) { return band(f, 2600.0, 4200.0) + 0.02 * band(f, 1000.0, 9000.0); }
double cricket_env(double p) {
  // 48 chirps per loop, each a burst of three pulses over a soft chorus bed.
  const double chirp = std::fmod(p * 48.0, 1.0);
  if (chirp > 0.45) return 0.3;
  const double pulse = std::sin(M_PI * std::fmod(chirp / 0.15, 1.0));
  return 0.3 + 0.7 * pulse * pulse;
}

// Wind: rumble and whistle with slow gusts.
double wind_shape(double f) { return band(f, 100.0, 1600.0) / std::sqrt(std::max(f, 100.0) / 100.0); }
double wind_env(double p) {
  const double g = 0.5 + 0.5 * std::sin(2.0 * M_PI * 3.0 * p - 0.4);
  return 0.45 + 0.55 * g * g;
}

const Texture* texture(std::string_view id) {
  static const Texture stream{0x5354524541ULL, stream_shape, stream_env};
  static const Texture crickets{0x435249434bULL, cricket_shape, cricket_env};
  static const Texture wind{0x57494e44ULL, wind_shape, wind_env};
  if (id == "stream") return &stream;
  if (id == "crickets") return &crickets;
  if (id == "wind") return &wind;
  return nullptr;
}

// Shapes white noise in the frequency domain, so the result is one period of
// a circular signal and the loop point needs no crossfade.
std::vector<double> generate(const Texture& t, double sample_rate) {
  const std::size_t n = kGeneratedLoopLength;
  Rng rng(t.seed);
  std::vector<double> white(n);
  for (auto& w : white) w = rng.gaussian();

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, white);
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const std::size_t m = k <= n / 2 ? k : n - k;
    spectrum[k] *= t.shape(static_cast<double>(m) * sample_rate / static_cast<double>(n));
  }
  std::vector<double> shaped;
  fft.inv(shaped, spectrum);

  for (std::size_t i = 0; i < n; ++i) shaped[i] *= t.envelope(static_cast<double>(i) / static_cast<double>(n));

  double energy = 0.0;
  for (double v : shaped) energy += v * v;
  const double rms = std::sqrt(energy / static_cast<double>(n));
  const double gain = rms > 0.0 ? 0.2 / rms : 0.0;
  // Rare peaks are rounded off above 0.8 so nothing exceeds 0.95.
  for (auto& v : shaped) {
    v *= gain;
    if (std::abs(v) > 0.8) v = std::copysign(0.8 + 0.15 * std::tanh((std::abs(v) - 0.8) / 0.15), v);
  }
  return shaped;
}

std::shared_ptr<const std::vector<double>> load_file(const std::string& path, double sample_rate) {
  WavData wav;
  try {
    wav = read_wav(path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnreadableFile) throw Error(ErrorCode::MissingAsset, "loop asset not found: " + path);
    throw Error(ErrorCode::CorruptAsset, std::string("loop asset unreadable: ") + e.what());
  }
  if (wav.samples.cols() == 0) throw Error(ErrorCode::CorruptAsset, "loop asset is empty: " + path);
  if (std::abs(wav.sample_rate - sample_rate) > 0.5) {
    throw Error(ErrorCode::CorruptAsset, "loop asset " + path + " is " + std::to_string(wav.sample_rate) +
                                             " Hz, engine runs at " + std::to_string(static_cast<int>(sample_rate)));
  }
  auto out = std::make_shared<std::vector<double>>(static_cast<std::size_t>(wav.samples.cols()));
  const Eigen::RowVectorXf mono = wav.samples.colwise().mean();
  for (Eigen::Index i = 0; i < mono.size(); ++i) (*out)[static_cast<std::size_t>(i)] = mono(i);
  return out;
}

}  // namespace

std::shared_ptr<const std::vector<double>> loop_asset(std::string_view asset_id, double sample_rate) {
  if (asset_id.starts_with("file:")) return load_file(std::string(asset_id.substr(5)), sample_rate);
  const Texture* t = texture(asset_id);
  if (!t) throw Error(ErrorCode::MissingAsset, "unknown loop asset '" + std::string(asset_id) + "'");

  static std::mutex mutex;
  static std::map<std::pair<std::string, double>, std::shared_ptr<const std::vector<double>>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{std::string(asset_id), sample_rate}];
  if (!slot) slot = std::make_shared<const std::vector<double>>(generate(*t, sample_rate));
  return slot;
}

std::unique_ptr<LoopVoice> load_loop(std::string_view asset_id, double sample_rate) {
  return std::make_unique<LoopVoice>(loop_asset(asset_id, sample_rate));
}

std::unique_ptr<NoiseVoice> noise_voice(std::uint64_t seed, double sample_rate) {
  return std::make_unique<NoiseVoice>(seed, sample_rate);
}

}  // namespace socs::audio
