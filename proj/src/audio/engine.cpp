#include "socs/audio/engine.hpp"

#include <algorithm>
#include <cmath>

#include "socs/error.hpp"

namespace socs::audio {

namespace {

bool in_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

void check_channel_params(const ChannelParams& p, double sample_rate) {
  if (!in_unit(p.gain)) throw Error(ErrorCode::InvalidArgument, "channel gain must lie in [0, 1]");
  if (!std::isfinite(p.center_hz) || p.center_hz <= 0.0 || p.center_hz >= sample_rate / 2.0) {
    throw Error(ErrorCode::InvalidArgument, "filter centre must lie strictly between 0 and Nyquist");
  }
  if (!std::isfinite(p.q) || p.q <= 0.0) throw Error(ErrorCode::InvalidArgument, "resonance must be positive");
}

void invalid(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

}  // namespace

bool MixerState::valid() const {
  return in_unit(master) && std::all_of(gains.begin(), gains.end(), in_unit);
}

std::vector<VoiceSpec> default_voices() {
  std::vector<VoiceSpec> v(4);
  v[0].kind = VoiceKind::Loop;
  v[0].asset = "stream";
  v[0].channel = Channel::BytesSent;
  v[0].center = {0.0, 4.0, 200.0, 2000.0};
  v[0].pan = -0.6;

  v[1].kind = VoiceKind::Loop;
  v[1].asset = "crickets";
  v[1].channel = Channel::PacketsSent;
  v[1].center = {0.0, 4.0, 1200.0, 4000.0};
  v[1].pan = 0.6;

  v[2].kind = VoiceKind::Loop;
  v[2].asset = "wind";
  v[2].channel = Channel::BytesReceived;
  v[2].center = {0.0, 4.0, 200.0, 1500.0};
  v[2].pan = -0.2;

  v[3].kind = VoiceKind::NoiseSynth;
  v[3].channel = Channel::PacketsReceived;
  v[3].center = {0.0, 4.0, 400.0, 4000.0};
  v[3].pan = 0.2;
  return v;
}

void EngineConfig::validate() const {
  if (!(std::isfinite(sample_rate) && sample_rate >= 8000.0)) invalid("sample_rate must be at least 8000");
  if (block_size < 1 || block_size > 8192) invalid("block_size must be in [1, 8192]");
  if (!(std::isfinite(ramp_ms) && ramp_ms >= 0.0)) invalid("ramp_ms must be non-negative");
  if (!(std::isfinite(warmup_seconds) && warmup_seconds >= 0.0)) invalid("warmup_seconds must be non-negative");
  if (voices.size() != 4) invalid("exactly 4 voices are required, got " + std::to_string(voices.size()));
  std::array<bool, 4> bound{};
  const double nyquist = sample_rate / 2.0;
  for (const auto& v : voices) {
    const auto name = std::string(channel_name(v.channel));
    auto& seen = bound[index_of(v.channel)];
    if (seen) invalid("more than one voice bound to " + name);
    seen = true;
    if (v.kind == VoiceKind::Loop && v.asset.empty()) invalid("loop voice on " + name + " has no asset");
    if (!v.gain.valid() || !v.center.valid() || !v.resonance.valid()) invalid("invalid scaler on " + name);
    const auto lo_hi = [](const ScalerSpec& s) { return std::minmax(s.out_min, s.out_max); };
    const auto [g0, g1] = lo_hi(v.gain);
    if (g0 < 0.0 || g1 > 1.0) invalid("gain scaler on " + name + " must map into [0, 1]");
    const auto [c0, c1] = lo_hi(v.center);
    if (c0 <= 0.0 || c1 >= nyquist) invalid("centre scaler on " + name + " must map inside (0, Nyquist)");
    const auto [q0, q1] = lo_hi(v.resonance);
    (void)q1;
    if (q0 <= 0.0) invalid("resonance scaler on " + name + " must stay positive");
    if (!(std::isfinite(v.pan) && v.pan >= -1.0 && v.pan <= 1.0)) invalid("pan on " + name + " must lie in [-1, 1]");
  }
}

const VoiceSpec& EngineConfig::voice_for(Channel c) const {
  for (const auto& v : voices) {
    if (v.channel == c) return v;
  }
  throw Error(ErrorCode::InvalidConfig, "no voice bound to " + std::string(channel_name(c)));
}

ChannelParams map_return(const VoiceSpec& spec, double log_return, bool tap) {
  const double m = std::abs(log_return);
  return {scale(m, spec.gain), scale(m, spec.center), scale(m, spec.resonance), tap};
}

EngineParams map_returns(const EngineConfig& config, const LogReturnVector& v, const MixerState& mixer,
                         const std::array<bool, 4>& taps) {
  EngineParams p;
  for (Channel c : kChannels) {
    const auto i = index_of(c);
    p.channels[i] = map_return(config.voice_for(c), v[c], taps[i]);
  }
  p.mixer = mixer;
  return p;
}

EngineParams initial_params(const EngineConfig& config) { return map_returns(config, LogReturnVector{}); }

AudioEngine::AudioEngine(const EngineConfig& config) : config_(config) {
  config_.validate();
  for (const auto& v : config_.voices) {
    auto& slot = slots_[index_of(v.channel)];
    if (v.kind == VoiceKind::Loop) {
      slot.voice = load_loop(v.asset, config_.sample_rate);
    } else {
      slot.voice = noise_voice(config_.seed, config_.sample_rate);
    }
  }
  init();
}

AudioEngine::AudioEngine(const EngineConfig& config, std::array<std::unique_ptr<Voice>, 4> voices)
    : config_(config) {
  config_.validate();
  for (std::size_t i = 0; i < 4; ++i) {
    if (!voices[i]) throw Error(ErrorCode::InvalidArgument, "null voice");
    slots_[i].voice = std::move(voices[i]);
  }
  init();
}

void AudioEngine::init() {
  ramp_len_ = static_cast<int>(std::lround(config_.ramp_ms * config_.sample_rate / 1000.0));
  const auto n = static_cast<std::size_t>(config_.block_size);
  voice_buf_.assign(n, 0.0);
  left_.assign(n, 0.0);
  right_.assign(n, 0.0);
  targets_ = initial_params(config_);
  for (const auto& v : config_.voices) {
    const auto i = index_of(v.channel);
    auto& s = slots_[i];
    const auto& p = targets_.channels[i];
    s.gain.jump(p.tap ? p.gain : 0.0);
    s.center.jump(p.center_hz);
    s.q.jump(p.q);
    s.mix.jump(targets_.mixer.gains[i]);
    s.pan = pan_gains(v.pan);
    s.filter.set(p.center_hz, p.q, config_.sample_rate);
  }
  master_.jump(targets_.mixer.master);
}

void AudioEngine::set_channel_params(Channel c, const ChannelParams& p) {
  check_channel_params(p, config_.sample_rate);
  const auto i = index_of(c);
  targets_.channels[i] = p;
  auto& s = slots_[i];
  s.gain.to(p.tap ? p.gain : 0.0, ramp_len_);
  s.center.to(p.center_hz, ramp_len_);
  s.q.to(p.q, ramp_len_);
  if (!s.center.moving() && !s.q.moving()) s.filter.set(s.center.value, s.q.value, config_.sample_rate);
}

void AudioEngine::set_mixer(const MixerState& m) {
  if (!m.valid()) throw Error(ErrorCode::InvalidArgument, "mixer gains must lie in [0, 1]");
  targets_.mixer = m;
  for (std::size_t i = 0; i < 4; ++i) slots_[i].mix.to(m.gains[i], ramp_len_);
  master_.to(m.master, ramp_len_);
}

void AudioEngine::apply(const EngineParams& p) {
  for (std::size_t i = 0; i < 4; ++i) check_channel_params(p.channels[i], config_.sample_rate);
  if (!p.mixer.valid()) throw Error(ErrorCode::InvalidArgument, "mixer gains must lie in [0, 1]");
  for (Channel c : kChannels) set_channel_params(c, p.channels[index_of(c)]);
  set_mixer(p.mixer);
}

void AudioEngine::render(Eigen::Ref<StereoBlock> out) {
  const Eigen::Index block = config_.block_size;
  for (Eigen::Index off = 0; off < out.cols(); off += block) {
    render_chunk(out, off, std::min(block, out.cols() - off));
  }
}

void AudioEngine::render_chunk(Eigen::Ref<StereoBlock> out, Eigen::Index offset, Eigen::Index n) {
  const auto len = static_cast<std::size_t>(n);
  std::fill_n(left_.begin(), len, 0.0);
  std::fill_n(right_.begin(), len, 0.0);
  const std::span<double> buf(voice_buf_.data(), len);
  for (auto& s : slots_) {
    s.voice->render(buf);
    for (std::size_t j = 0; j < len; ++j) {
      if (s.center.moving() || s.q.moving()) s.filter.set(s.center.next(), s.q.next(), config_.sample_rate);
      const double g = s.gain.next() * s.mix.next();
      const double y = g * s.filter.process(buf[j]);
      left_[j] += s.pan[0] * y;
      right_[j] += s.pan[1] * y;
    }
  }
  for (std::size_t j = 0; j < len; ++j) {
    const double m = master_.next();
    out(0, offset + static_cast<Eigen::Index>(j)) = static_cast<float>(soft_clip(m * left_[j]));
    out(1, offset + static_cast<Eigen::Index>(j)) = static_cast<float>(soft_clip(m * right_[j]));
  }
}

std::int64_t tick_start_frame(const EngineConfig& config, const RenderTiming& timing, std::size_t tick) {
  const auto warmup = std::llround(config.warmup_seconds * config.sample_rate);
  return warmup + std::llround(static_cast<double>(tick) * timing.tick_seconds * config.sample_rate / timing.speed);
}

std::uint64_t render_params(const std::vector<EngineParams>& params, const EngineConfig& config,
                            const RenderTiming& timing, const std::filesystem::path& path) {
  if (!(timing.tick_seconds > 0.0) || !(timing.speed > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tick and speed must be positive");
  }
  AudioEngine engine(config);
  WavWriter wav(path, static_cast<int>(std::lround(config.sample_rate)));
  StereoBlock block(2, config.block_size);

  const auto emit = [&](std::int64_t frames) {
    while (frames > 0) {
      const auto n = std::min<std::int64_t>(frames, config.block_size);
      auto view = block.leftCols(n);
      engine.render(view);
      wav.write(view);
      frames -= n;
    }
  };

  emit(tick_start_frame(config, timing, 0));
  for (std::size_t i = 0; i < params.size(); ++i) {
    engine.apply(params[i]);
    emit(tick_start_frame(config, timing, i + 1) - tick_start_frame(config, timing, i));
  }
  wav.close();
  return wav.frames();
}

std::uint64_t render_offline(const std::vector<LogReturnVector>& returns, const EngineConfig& config,
                             const RenderTiming& timing, const std::filesystem::path& path) {
  config.validate();
  std::vector<EngineParams> params;
  params.reserve(returns.size());
  for (const auto& r : returns) params.push_back(map_returns(config, r));
  return render_params(params, config, timing, path);
}

}  // namespace socs::audio
