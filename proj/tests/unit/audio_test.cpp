#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <numeric>
#include <thread>

#include <unsupported/Eigen/FFT>

#include "socs/audio/engine.hpp"
#include "socs/audio/realtime.hpp"
#include "socs/error.hpp"
#include "test_util.hpp"

using namespace socs;
namespace tu = socs::testing;
using namespace socs::audio;

namespace {

constexpr double kFs = 48000.0;

std::vector<double> render_voice(Voice& v, std::size_t n) {
  std::vector<double> out(n);
  v.render(out);
  return out;
}

template <typename Range>
double rms(const Range& x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return std::sqrt(e / static_cast<double>(std::size(x)));
}

std::vector<double> left_of(const StereoBlock& b) {
  std::vector<double> out(static_cast<std::size_t>(b.cols()));
  for (Eigen::Index j = 0; j < b.cols(); ++j) out[static_cast<std::size_t>(j)] = b(0, j);
  return out;
}

// Welch power spectrum, one-sided, Hann window.
std::vector<double> welch(const std::vector<double>& x, std::size_t seg) {
  Eigen::FFT<double> fft;
  std::vector<double> window(seg), psd(seg / 2 + 1, 0.0), frame(seg);
  for (std::size_t i = 0; i < seg; ++i) window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / seg);
  std::vector<std::complex<double>> spec;
  std::size_t count = 0;
  for (std::size_t start = 0; start + seg <= x.size(); start += seg / 2, ++count) {
    for (std::size_t i = 0; i < seg; ++i) frame[i] = x[start + i] * window[i];
    fft.fwd(spec, frame);
    for (std::size_t k = 0; k < psd.size(); ++k) psd[k] += std::norm(spec[k]);
  }
  for (auto& p : psd) p /= static_cast<double>(count);
  return psd;
}

double centroid(const std::vector<double>& x) {
  const auto psd = welch(x, 4096);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < psd.size(); ++k) {
    num += k * kFs / 4096.0 * psd[k];
    den += psd[k];
  }
  return num / den;
}

std::array<std::unique_ptr<Voice>, 4> voices_with(std::unique_ptr<Voice> first) {
  std::array<std::unique_ptr<Voice>, 4> v;
  v[0] = std::move(first);
  for (int i = 1; i < 4; ++i) v[i] = std::make_unique<ToneVoice>(440.0, 0.0, kFs);
  return v;
}

EngineParams solo(double gain, double center, double q) {
  EngineParams p;
  for (auto& c : p.channels) c = {0.0, center, q, true};
  p.channels[0].gain = gain;
  return p;
}

StereoBlock render_engine(AudioEngine& e, Eigen::Index frames) {
  StereoBlock out(2, frames);
  e.render(out);
  return out;
}

// Steady-state RMS of a tone through channel 0's band-pass, relative to the
// tone's own RMS and undoing the pan law.
double measured_gain(double center, double q, double tone_hz) {
  EngineConfig cfg;
  cfg.ramp_ms = 0.0;
  AudioEngine e(cfg, voices_with(std::make_unique<ToneVoice>(tone_hz, 0.2, kFs)));
  e.apply(solo(1.0, center, q));
  render_engine(e, static_cast<Eigen::Index>(kFs));  // settle
  const auto y = left_of(render_engine(e, static_cast<Eigen::Index>(kFs)));
  const double pan = pan_gains(cfg.voice_for(Channel::BytesSent).pan)[0];
  return rms(y) / (0.2 / std::sqrt(2.0)) / pan;
}

}  // namespace

TEST(LoopVoice, SecondPassRepeatsFirstExactly) {
  std::vector<double> data(1000);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::sin(0.01 * i * i);
  LoopVoice v(std::make_shared<const std::vector<double>>(data));
  std::vector<double> out(2000);
  // Odd chunking exercises the wrap inside a block.
  v.render(std::span(out).first(333));
  v.render(std::span(out).subspan(333));
  EXPECT_TRUE(std::equal(out.begin(), out.begin() + 1000, out.begin() + 1000));
  EXPECT_TRUE(std::equal(data.begin(), data.end(), out.begin()));
}

TEST(LoopVoice, GeneratedAssetRepeatsAcrossLoopPoint) {
  for (auto id : kLoopAssets) {
    auto v = load_loop(id, kFs);
    const auto n = v->length();
    const auto out = render_voice(*v, 2 * n);
    EXPECT_TRUE(std::equal(out.begin(), out.begin() + n, out.begin() + n)) << id;
  }
}

TEST(LoopVoice, ZeroLengthRenderIsEmpty) {
  auto v = load_loop("stream", kFs);
  std::vector<double> out;
  v->render(out);
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(v->position(), 0u);
}

TEST(LoopVoice, StreamAssetIsAudible) {
  auto v = load_loop("stream", kFs);
  EXPECT_GT(rms(render_voice(*v, 48000)), 0.01);
}

TEST(LoopVoice, SeamIsNoLouderThanInteriorSteps) {
  for (auto id : kLoopAssets) {
    const auto buf = loop_asset(id, kFs);
    const auto& s = *buf;
    double worst = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) worst = std::max(worst, std::abs(s[i] - s[i - 1]));
    EXPECT_LE(std::abs(s.front() - s.back()), worst) << id;
    for (double x : s) ASSERT_LE(std::abs(x), 1.0);
  }
}

TEST(LoopVoice, MissingAndCorruptAssets) {
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  EXPECT_EQ(code([] { load_loop("thunder", kFs); }), ErrorCode::MissingAsset);
  EXPECT_EQ(code([] { load_loop("file:/nonexistent/loop.wav", kFs); }), ErrorCode::MissingAsset);

  tu::TempPath junk(".wav");
  tu::write_file(junk.path(), "RIFF1234WAVEjunkjunk");
  EXPECT_EQ(code([&] { load_loop("file:" + junk.path().string(), kFs); }), ErrorCode::CorruptAsset);

  tu::TempPath wrong_rate(".wav");
  {
    WavWriter w(wrong_rate.path(), 44100);
    w.write(StereoBlock::Constant(2, 100, 0.1f));
  }
  EXPECT_EQ(code([&] { load_loop("file:" + wrong_rate.path().string(), kFs); }), ErrorCode::CorruptAsset);
}

TEST(LoopVoice, LoadsWavFileAsMono) {
  tu::TempPath path(".wav");
  StereoBlock b(2, 64);
  for (int j = 0; j < 64; ++j) {
    b(0, j) = 0.5f;
    b(1, j) = -0.25f;
  }
  {
    WavWriter w(path.path(), 48000);
    w.write(b);
  }
  auto v = load_loop("file:" + path.path().string(), kFs);
  ASSERT_EQ(v->length(), 64u);
  const auto out = render_voice(*v, 64);
  const double expect = (std::lround(0.5 * 32767) - std::lround(0.25 * 32767)) / 2.0 / 32768.0;
  for (double x : out) EXPECT_NEAR(x, expect, 1e-7);
}

TEST(NoiseVoice, SameSeedIsBitIdentical) {
  NoiseVoice a(42, kFs), b(42, kFs), c(43, kFs);
  const auto xa = render_voice(a, 10000), xb = render_voice(b, 10000), xc = render_voice(c, 10000);
  EXPECT_EQ(xa, xb);
  EXPECT_NE(xa, xc);
  EXPECT_GT(rms(xa), 0.01);
}

TEST(NoiseVoice, RawNoiseIsSpectrallyFlat) {
  NoiseVoice v(7, kFs);
  v.set_raw(true);
  const auto x = render_voice(v, static_cast<std::size_t>(10 * kFs));
  const std::size_t seg = 8192;
  const auto psd = welch(x, seg);
  const double df = kFs / seg;
  // Mean power density per octave band, 62.5 Hz to 16 kHz.
  std::vector<double> bands;
  for (double lo = 62.5; lo < 16000.0; lo *= 2.0) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t k = 1; k < psd.size(); ++k) {
      const double f = k * df;
      if (f >= lo && f < 2.0 * lo) {
        sum += psd[k];
        ++n;
      }
    }
    bands.push_back(sum / n);
  }
  const double mean = std::accumulate(bands.begin(), bands.end(), 0.0) / bands.size();
  for (double b : bands) EXPECT_LE(std::abs(10.0 * std::log10(b / mean)), 3.0);
}

TEST(BandPass, DesignGainIsUnityAtCentre) {
  for (double f : {200.0, 1000.0, 4000.0}) {
    for (double q : {0.7, 3.0, 10.0}) EXPECT_NEAR(BandPass::design_gain(f, q, kFs, f), 1.0, 1e-12);
  }
}

TEST(BandPass, MeasuredResponseTracksDesignAcrossGrid) {
  for (double f : {200.0, 500.0, 1000.0, 2000.0, 4000.0}) {
    for (double q : {3.0, 6.5, 10.0}) {
      const double centre_db = 20.0 * std::log10(measured_gain(f, q, f));
      EXPECT_NEAR(centre_db, 20.0 * std::log10(BandPass::design_gain(f, q, kFs, f)), 1.5) << f << " " << q;
      EXPECT_LE(20.0 * std::log10(measured_gain(f, q, f / 4.0)), -20.0) << f << " " << q;
      EXPECT_LE(20.0 * std::log10(measured_gain(f, q, 4.0 * f)), -20.0) << f << " " << q;
    }
  }
}

TEST(BandPass, PassbandBeatsTwoOctavesAwayByTenfold) {
  const double q = 6.5;  // middle of the default resonance range
  const double pass = measured_gain(1000.0, q, 1000.0);
  EXPECT_GE(pass / measured_gain(1000.0, q, 4000.0), 10.0);
  EXPECT_GE(pass / measured_gain(1000.0, q, 250.0), 10.0);
}

TEST(Engine, RejectsInvalidConfigs) {
  EngineConfig twice;
  twice.voices[1].channel = Channel::BytesSent;
  EXPECT_THROW(twice.validate(), Error);
  EngineConfig three;
  three.voices.pop_back();
  EXPECT_THROW(three.validate(), Error);
  EngineConfig loud;
  loud.voices[0].gain.out_max = 1.5;
  EXPECT_THROW(loud.validate(), Error);
  EngineConfig above_nyquist;
  above_nyquist.voices[2].center.out_max = 30000.0;
  EXPECT_THROW(above_nyquist.validate(), Error);
  EngineConfig pan;
  pan.voices[3].pan = 1.5;
  EXPECT_THROW(pan.validate(), Error);
  EXPECT_NO_THROW(EngineConfig{}.validate());
}

TEST(Engine, RejectsOutOfRangeParams) {
  AudioEngine e(EngineConfig{});
  EXPECT_THROW(e.set_channel_params(Channel::BytesSent, {1.2, 1000.0, 3.0, true}), Error);
  EXPECT_THROW(e.set_channel_params(Channel::BytesSent, {0.5, 24000.0, 3.0, true}), Error);
  EXPECT_THROW(e.set_channel_params(Channel::BytesSent, {0.5, 1000.0, 0.0, true}), Error);
  EXPECT_THROW(e.set_channel_params(Channel::BytesSent, {NAN, 1000.0, 3.0, true}), Error);
  MixerState m;
  m.master = -0.1;
  EXPECT_THROW(e.set_mixer(m), Error);
}

TEST(Engine, MapReturnUsesScalersOnMagnitude) {
  const VoiceSpec v = default_voices()[0];
  const auto lo = map_return(v, 0.0);
  EXPECT_DOUBLE_EQ(lo.gain, 0.1);
  EXPECT_DOUBLE_EQ(lo.center_hz, 200.0);
  EXPECT_DOUBLE_EQ(lo.q, 3.0);
  const auto hi = map_return(v, -4.0);
  EXPECT_DOUBLE_EQ(hi.gain, 1.0);
  EXPECT_DOUBLE_EQ(hi.center_hz, 2000.0);
  EXPECT_DOUBLE_EQ(hi.q, 10.0);
  EXPECT_EQ(map_return(v, 2.0), map_return(v, -2.0));
  EXPECT_DOUBLE_EQ(map_return(v, 99.0).gain, 1.0);
}

TEST(Engine, ZeroGainIsDigitalSilence) {
  AudioEngine e(EngineConfig{});
  EngineParams p = initial_params(e.config());
  for (auto& c : p.channels) c.gain = 0.0;
  e.apply(p);
  render_engine(e, e.ramp_samples());
  const auto out = render_engine(e, 48000);
  EXPECT_TRUE((out.array() == 0.0f).all());
}

TEST(Engine, MasterZeroAndTapsOffAreSilent) {
  {
    AudioEngine e(EngineConfig{});
    MixerState m;
    m.master = 0.0;
    e.set_mixer(m);
    render_engine(e, e.ramp_samples());
    EXPECT_TRUE((render_engine(e, 4800).array() == 0.0f).all());
  }
  {
    AudioEngine e(EngineConfig{});
    EngineParams p = initial_params(e.config());
    for (auto& c : p.channels) {
      c.gain = 1.0;
      c.tap = false;
    }
    e.apply(p);
    render_engine(e, e.ramp_samples());
    EXPECT_TRUE((render_engine(e, 4800).array() == 0.0f).all());
  }
}

// Reference for a soloed channel: the voice through a fresh band-pass, the
// pan law and the limiter, nothing else.
std::vector<float> solo_reference(const EngineConfig& cfg, Channel c, const ChannelParams& p, std::size_t n) {
  const auto& spec = cfg.voice_for(c);
  auto voice = load_loop(spec.asset, cfg.sample_rate);
  const auto x = render_voice(*voice, n);
  BandPass bp;
  bp.set(p.center_hz, p.q, cfg.sample_rate);
  const double pan = pan_gains(spec.pan)[0];
  std::vector<float> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<float>(soft_clip(pan * (p.gain * bp.process(x[i]))));
  return y;
}

TEST(Engine, SoloChannelEqualsItsFilteredVoice) {
  EngineConfig cfg;
  cfg.ramp_ms = 0.0;
  const ChannelParams wind{1.0, 800.0, 4.0, true};
  const auto expected = solo_reference(cfg, Channel::BytesReceived, wind, 24000);

  // Solo through the channel gains.
  {
    AudioEngine e(cfg);
    EngineParams p = initial_params(cfg);
    for (auto& c : p.channels) c.gain = 0.0;
    p.channels[index_of(Channel::BytesReceived)] = wind;
    e.apply(p);
    const auto out = render_engine(e, 24000);
    for (Eigen::Index j = 0; j < out.cols(); ++j) ASSERT_EQ(out(0, j), expected[j]) << j;
  }
  // Solo through the mixer.
  {
    AudioEngine e(cfg);
    EngineParams p = initial_params(cfg);
    for (auto& c : p.channels) c = wind;
    p.mixer.gains = {0.0, 0.0, 1.0, 0.0};
    e.apply(p);
    const auto out = render_engine(e, 24000);
    for (Eigen::Index j = 0; j < out.cols(); ++j) ASSERT_EQ(out(0, j), expected[j]) << j;
  }
}

TEST(Engine, PanLawIsConstantPower) {
  for (double pan = -1.0; pan <= 1.0; pan += 0.125) {
    const auto g = pan_gains(pan);
    EXPECT_NEAR(g[0] * g[0] + g[1] * g[1], 1.0, 1e-12);
  }
  EXPECT_NEAR(pan_gains(-1.0)[1], 0.0, 1e-12);
  EXPECT_NEAR(pan_gains(1.0)[0], 0.0, 1e-12);
  EXPECT_NEAR(pan_gains(0.0)[0], pan_gains(0.0)[1], 1e-12);
}

TEST(Engine, SoftClipIsBoundedMonotoneAndLinearBelowKnee) {
  double prev = -2.0;
  for (double x = -50.0; x <= 50.0; x += 0.01) {
    const double y = soft_clip(x);
    ASSERT_LE(std::abs(y), 1.0);
    ASSERT_GE(y, prev);
    prev = y;
  }
  for (double x = -0.5; x <= 0.5; x += 0.01) EXPECT_EQ(soft_clip(x), x);
}

TEST(Engine, DoublingGainDoublesContribution) {
  EngineConfig cfg;
  cfg.ramp_ms = 0.0;
  auto render_at = [&](double gain) {
    AudioEngine e(cfg, voices_with(std::make_unique<ToneVoice>(1000.0, 0.2, kFs)));
    e.apply(solo(gain, 1000.0, 3.0));
    return left_of(render_engine(e, 9600));
  };
  const auto a = render_at(0.25), b = render_at(0.5);
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(b[i], 2.0 * a[i], 1e-6);
}

TEST(Engine, GainStepRampsMonotonicallyWithoutZipper) {
  EngineConfig cfg;
  const double tone = 1000.0, amp = 0.4;
  AudioEngine e(cfg, voices_with(std::make_unique<ToneVoice>(tone, amp, kFs)));
  e.apply(solo(0.0, tone, 3.0));
  render_engine(e, static_cast<Eigen::Index>(kFs));

  e.apply(solo(1.0, tone, 3.0));
  const auto ramp = left_of(render_engine(e, e.ramp_samples()));
  const auto steady = left_of(render_engine(e, static_cast<Eigen::Index>(kFs / 2)));

  // Envelope: peak magnitude per tone period.
  const std::size_t period = static_cast<std::size_t>(kFs / tone);
  double prev = 0.0;
  for (std::size_t start = 0; start + period <= ramp.size(); start += period) {
    double peak = 0.0;
    for (std::size_t i = start; i < start + period; ++i) peak = std::max(peak, std::abs(ramp[i]));
    EXPECT_GE(peak, prev - 1e-6) << start;
    prev = peak;
  }

  auto max_step = [](const std::vector<double>& x) {
    double m = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - x[i - 1]));
    return m;
  };
  const double steady_peak = *std::max_element(steady.begin(), steady.end());
  const double ramp_bound = steady_peak / e.ramp_samples();
  EXPECT_LE(max_step(ramp), max_step(steady) + ramp_bound);
}

TEST(Engine, CentreFrequencyRaisesSpectralCentroid) {
  EngineConfig cfg;
  cfg.ramp_ms = 0.0;
  auto render_at = [&](double centre) {
    auto n = std::make_unique<NoiseVoice>(3, kFs);
    n->set_raw(true);
    AudioEngine e(cfg, voices_with(std::move(n)));
    e.apply(solo(1.0, centre, 3.0));
    return left_of(render_engine(e, static_cast<Eigen::Index>(kFs)));
  };
  const double low = centroid(render_at(500.0));
  const double mid = centroid(render_at(1500.0));
  const double high = centroid(render_at(3000.0));
  EXPECT_LT(low, mid);
  EXPECT_LT(mid, high);
}

TEST(Engine, OutputStaysInRangeUnderExtremeInput) {
  EngineConfig cfg;
  std::array<std::unique_ptr<Voice>, 4> v;
  for (int i = 0; i < 4; ++i) v[i] = std::make_unique<ToneVoice>(300.0 * (i + 1), 40.0, kFs);
  AudioEngine e(cfg, std::move(v));
  Rng rng(11);
  for (int block = 0; block < 400; ++block) {
    EngineParams p;
    for (auto& c : p.channels) c = {rng.uniform(), 100.0 + 9000.0 * rng.uniform(), 0.5 + 20.0 * rng.uniform(), true};
    e.apply(p);
    const auto out = render_engine(e, 256);
    ASSERT_TRUE((out.array().abs() <= 1.0f).all());
  }
}

TEST(Engine, RendersFasterThanRealTime) {
  AudioEngine e(EngineConfig{});
  StereoBlock block(2, 256);
  const auto begin = std::chrono::steady_clock::now();
  for (int i = 0; i < 1875; ++i) e.render(block);  // 10 s
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  EXPECT_LT(wall, 10.0);
}

TEST(Wav, RoundTripsPcm16) {
  tu::TempPath path(".wav");
  StereoBlock b(2, 100);
  for (int j = 0; j < 100; ++j) {
    b(0, j) = std::sin(j * 0.1f) * 0.9f;
    b(1, j) = -b(0, j);
  }
  b(0, 0) = 2.0f;  // clamps
  {
    WavWriter w(path.path(), 48000);
    w.write(b.leftCols(60));
    w.write(b.rightCols(40));
    EXPECT_EQ(w.frames(), 100u);
  }
  EXPECT_EQ(std::filesystem::file_size(path.path()), 44u + 400u);
  const auto wav = read_wav(path.path());
  EXPECT_EQ(wav.sample_rate, 48000);
  EXPECT_EQ(wav.channels, 2);
  ASSERT_EQ(wav.samples.cols(), 100);
  EXPECT_NEAR(wav.samples(0, 0), 32767.0f / 32768.0f, 1e-7);
  for (int j = 1; j < 100; ++j) EXPECT_NEAR(wav.samples(0, j), b(0, j), 2.0 / 32767.0);
}

TEST(Wav, UnwritablePathThrowsIo) {
  try {
    WavWriter w("/nonexistent/dir/out.wav", 48000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST(Offline, EmptySessionRendersWarmupOnly) {
  EngineConfig cfg;
  cfg.warmup_seconds = 0.25;
  tu::TempPath path(".wav");
  EXPECT_EQ(render_offline({}, cfg, {}, path.path()), 12000u);
  const auto wav = read_wav(path.path());
  EXPECT_EQ(wav.samples.cols(), 12000);
  EXPECT_GT(wav.samples.cwiseAbs().maxCoeff(), 0.0f);
}

TEST(Offline, IsDeterministicAndSeedSensitive) {
  std::vector<LogReturnVector> r(8);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i].index = static_cast<std::int64_t>(i);
    r[i].values = Eigen::Array4d(0.3 * i, -0.2 * i, 0.1, 0.5 * (i % 3));
  }
  EngineConfig cfg;
  const RenderTiming timing{0.25, 1.0};
  tu::TempPath a(".wav"), b(".wav"), c(".wav");
  render_offline(r, cfg, timing, a.path());
  render_offline(r, cfg, timing, b.path());
  cfg.seed = 2;
  render_offline(r, cfg, timing, c.path());
  EXPECT_EQ(tu::read_file(a.path()), tu::read_file(b.path()));
  EXPECT_NE(tu::read_file(a.path()), tu::read_file(c.path()));
}

TEST(Offline, SpeedShortensRenderWithoutChangingTicks) {
  std::vector<LogReturnVector> r(10);
  EngineConfig cfg;
  cfg.warmup_seconds = 0.0;
  tu::TempPath a(".wav"), b(".wav");
  EXPECT_EQ(render_offline(r, cfg, {1.0, 1.0}, a.path()), 480000u);
  EXPECT_EQ(render_offline(r, cfg, {1.0, 10.0}, b.path()), 48000u);
  EXPECT_EQ(tick_start_frame(cfg, {1.0, 10.0}, 3), 14400);
}

TEST(Offline, SpikeSecondIsAtLeastTwiceAsLoud) {
  std::vector<LogReturnVector> r(6);
  r[5].values.setConstant(4.0);
  EngineConfig cfg;
  cfg.warmup_seconds = 0.0;
  tu::TempPath path(".wav");
  render_offline(r, cfg, {1.0, 1.0}, path.path());
  const auto wav = read_wav(path.path());
  const auto second = [&](int s) {
    return std::sqrt(wav.samples.middleCols(s * 48000, 48000).squaredNorm() / (2.0 * 48000));
  };
  EXPECT_GE(second(5), 2.0 * second(4));
}

TEST(Mailbox, DeliversLatestValue) {
  struct Pair {
    int a, b;
  };
  Mailbox<Pair> box({0, 0});
  Pair out{-1, -1};
  EXPECT_FALSE(box.take(out));
  box.publish({1, 2});
  box.publish({3, 6});
  ASSERT_TRUE(box.take(out));
  EXPECT_EQ(out.a, 3);
  EXPECT_FALSE(box.take(out));
  box.publish({4, 8});
  ASSERT_TRUE(box.take(out));
  EXPECT_EQ(out.b, 8);
}

TEST(Mailbox, ConcurrentReaderNeverSeesTornOrStaleValues) {
  struct Pair {
    long a, b;
  };
  Mailbox<Pair> box({0, 0});
  std::atomic<bool> done{false};
  std::thread writer([&] {
    for (long i = 1; i <= 200000; ++i) box.publish({i, 3 * i});
    done = true;
  });
  long last = 0;
  Pair p{};
  const auto check = [&] {
    ASSERT_EQ(p.b, 3 * p.a);
    ASSERT_GT(p.a, last);
    last = p.a;
  };
  while (!done) {
    if (box.take(p)) check();
  }
  if (box.take(p)) check();
  writer.join();
  EXPECT_EQ(last, 200000);
}

TEST(Realtime, DeviceIsUnavailableInThisBuild) {
  try {
    open_audio_device("default", kFs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AudioDeviceUnavailable);
  }
}

TEST(Realtime, PacedRendererKeepsUpWithoutUnderruns) {
  auto out = std::make_unique<NullOutput>();
  auto* sink = out.get();
  RealtimeRenderer r(std::make_unique<AudioEngine>(EngineConfig{}), std::move(out));
  r.start();
  EngineParams p = initial_params(EngineConfig{});
  for (int i = 0; i < 10; ++i) {
    p.channels[0].gain = i / 10.0;
    r.publish(p);
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
  }
  r.stop();
  EXPECT_GT(r.blocks(), 40u);
  EXPECT_EQ(sink->frames(), r.blocks() * 256u);
  EXPECT_EQ(r.underruns(), 0u);
  EXPECT_LT(r.worst_block_us(), 256.0 / kFs * 1e6);
}

TEST(Realtime, FreeRunWritesToWavFile) {
  tu::TempPath path(".wav");
  {
    RealtimeRenderer r(std::make_unique<AudioEngine>(EngineConfig{}),
                       std::make_unique<WavFileOutput>(path.path(), 48000), {4, true});
    r.start();
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    r.stop();
    static_cast<WavFileOutput&>(r.output()).close();
    EXPECT_EQ(read_wav(path.path()).samples.cols(), static_cast<Eigen::Index>(r.blocks() * 256));
  }
}
