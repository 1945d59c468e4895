// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "socs/analysis.hpp"
#include "socs/audio/engine.hpp"
#include "socs/audio/rng.hpp"
#include "socs/service/session.hpp"
#include "support/scenario.hpp"
#include "test_util.hpp"

using namespace socs;
namespace tu = socs::testing;

namespace {

using audio::Rng;
constexpr double kFs = 48000.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;  // 0: no runtime bound
  std::function<Outcome()> check;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ---- log returns

std::uint64_t random_count(Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.15) return 0;
  if (u < 0.2) return 1;
  return static_cast<std::uint64_t>(std::exp(rng.uniform() * 25.0));
}

long double oracle_return(std::uint64_t prev, std::uint64_t next) {
  const long double a = prev == 0 ? 1.0L : static_cast<long double>(prev);
  const long double b = next == 0 ? 1.0L : static_cast<long double>(next);
  return std::log(b) - std::log(a);
}

Outcome log_return_oracle() {
  Rng rng(1);
  double worst = 0.0;
  int floored = 0;
  for (int i = 0; i < 10000; ++i) {
    IntervalSample p{i, static_cast<double>(i), random_count(rng), random_count(rng), random_count(rng),
                     random_count(rng)};
    IntervalSample n{i + 1, static_cast<double>(i + 1), random_count(rng), random_count(rng), random_count(rng),
                     random_count(rng)};
    const auto v = log_return(p, n);
    const auto squared = log_return(p, n, ReturnMode::Squared);
    const std::uint64_t pv[] = {p.bs, p.ps, p.br, p.pr}, nv[] = {n.bs, n.ps, n.br, n.pr};
    for (int c = 0; c < 4; ++c) {
      if (pv[c] == 0 || nv[c] == 0) ++floored;
      const long double o = oracle_return(pv[c], nv[c]);
      worst = std::max({worst, static_cast<double>(std::fabs(v.values[c] - o)),
                        static_cast<double>(std::fabs(squared.values[c] - o * o) / (1.0L + o * o))});
    }
  }
  return {worst <= 1e-12 && floored > 0, fmt("max error %.2e, %g zero-floor components", worst, floored)};
}

// ---- scalers

Outcome scaler_properties() {
  Rng rng(2);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    ScalerSpec s;
    s.in_min = rng.bipolar() * 100.0;
    s.in_max = s.in_min + 1e-3 + rng.uniform() * 100.0;
    s.out_min = rng.bipolar() * 5000.0;
    s.out_max = s.out_min + rng.uniform() * 5000.0;
    const double tol = 1e-9 * (1.0 + std::fabs(s.out_min) + std::fabs(s.out_max));
    if (std::fabs(scale(s.in_min, s) - s.out_min) > tol) ++violations;
    if (std::fabs(scale(s.in_max, s) - s.out_max) > tol) ++violations;
    if (std::fabs(scale(0.5 * (s.in_min + s.in_max), s) - 0.5 * (s.out_min + s.out_max)) > tol) ++violations;
    const double span = s.in_max - s.in_min;
    if (scale(s.in_min - 1.0 - rng.uniform() * span, s) != scale(s.in_min, s)) ++violations;
    if (scale(s.in_max + 1.0 + rng.uniform() * span, s) != scale(s.in_max, s)) ++violations;
    double prev = -INFINITY;
    for (int k = 0; k <= 50; ++k) {
      const double y = scale(s.in_min - span + 3.0 * span * k / 50.0, s);
      if (y < prev) ++violations;
      if (y < s.out_min - tol || y > s.out_max + tol) ++violations;
      prev = y;
    }
  }
  return {violations == 0, fmt("%g violations over 1000 specs", violations)};
}

// ---- wavelets

Eigen::VectorXd gaussian_vector(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (auto& x : v) x = rng.gaussian();
  return v;
}

double max_coefficient_gap(const wavelet::Decomposition<double>& a, const wavelet::Decomposition<double>& b) {
  double gap = (a.approximation - b.approximation).cwiseAbs().maxCoeff();
  for (int l = 0; l < a.levels(); ++l) gap = std::max(gap, (a.details[l] - b.details[l]).cwiseAbs().maxCoeff());
  return gap;
}

double coefficient_energy(const wavelet::Decomposition<double>& d) {
  double e = d.approximation.squaredNorm();
  for (const auto& x : d.details) e += x.squaredNorm();
  return e;
}

Outcome dwt_suite() {
  using namespace wavelet;
  Rng rng(3);
  double pr = 0.0, lin = 0.0, energy = 0.0;
  int cases = 0;
  for (int f = 1; f <= 8; ++f) {
    const auto family = static_cast<Daubechies>(f);
    for (Eigen::Index n : {64, 256, 1024, 4096}) {
      for (int levels = 1; levels <= 4; ++levels) {
        const Eigen::VectorXd x = gaussian_vector(n, rng), y = gaussian_vector(n, rng);
        const double a = rng.bipolar() * 3.0, b = rng.bipolar() * 3.0;
        for (auto ext : {Extension::Symmetric, Extension::Periodic}) {
          const auto dx = dwt(x, family, levels, ext);
          const auto dy = dwt(y, family, levels, ext);
          pr = std::max(pr, (idwt(dx) - x).cwiseAbs().maxCoeff());
          auto combined = dx;
          combined.approximation = a * dx.approximation + b * dy.approximation;
          for (int l = 0; l < levels; ++l) combined.details[l] = a * dx.details[l] + b * dy.details[l];
          const Eigen::VectorXd z = a * x + b * y;
          lin = std::max(lin, max_coefficient_gap(dwt(z, family, levels, ext), combined));
          if (ext == Extension::Periodic) {
            energy = std::max(energy, std::fabs(coefficient_energy(dx) - x.squaredNorm()) / x.squaredNorm());
          }
          ++cases;
        }
      }
    }
  }
  return {pr <= 1e-8 && lin <= 1e-8 && energy <= 1e-8,
          fmt("%g cases; reconstruction %.2e, linearity %.2e", cases, pr, lin) +
              fmt(", periodic energy %.2e relative", energy)};
}

Outcome denoise_monte_carlo() {
  int wins = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(5000 + trial);
    const Eigen::Index n = 1024;
    Eigen::VectorXd clean(n), noisy(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / n;
      clean[i] = std::sin(2 * M_PI * 3 * t) + 0.5 * std::cos(2 * M_PI * 7 * t);
      noisy[i] = clean[i] + 0.4 * rng.gaussian();
    }
    const Eigen::VectorXd out = wavelet::denoise(noisy, wavelet::Daubechies::db4, 5);
    if ((out - clean).squaredNorm() < (noisy - clean).squaredNorm()) ++wins;
  }
  return {wins >= 95, fmt("denoised beats noisy in %g of 100 trials", wins)};
}

// ---- spectrum

Outcome spectrum_suite() {
  Rng rng(6);
  double parseval = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.next() % 2047);
    Eigen::VectorXd x = gaussian_vector(n, rng);
    x.array() += rng.bipolar() * 10.0;
    const double oracle = (x.array() - x.mean()).square().sum();
    const auto r = spectral::spectrum(x);
    parseval = std::max(parseval, std::fabs(r.total_energy - oracle) / oracle);
  }
  // Tones at 0.9 and 0.2 of Nyquist, on-bin and off-bin.
  double high_on = 0.0, high_off = 0.0, low_off = 1.0;
  {
    Eigen::VectorXd on(1000), off(1024), low(1024);
    for (Eigen::Index i = 0; i < 1000; ++i) on[i] = std::cos(2.0 * M_PI * 450.0 * i / 1000.0);
    for (Eigen::Index i = 0; i < 1024; ++i) {
      off[i] = std::sin(M_PI * 0.9 * i + 0.3);
      low[i] = std::sin(M_PI * 0.2 * i + 0.3);
    }
    high_on = spectral::spectrum(on).high_band_fraction;
    high_off = spectral::spectrum(off).high_band_fraction;
    low_off = spectral::spectrum(low).high_band_fraction;
  }
  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(256, 3.7);
  const auto flat = spectral::spectrum(constant);
  const bool tones = std::fabs(high_on - 1.0) <= 1e-12 && high_off > 0.99 && low_off < 0.01;
  return {parseval <= 1e-6 && tones && flat.total_energy == 0.0 && flat.high_band_fraction == 0.0,
          fmt("Parseval %.2e relative; high-band 0.9 Nyquist %.6f on-bin, %.4f off-bin", parseval, high_on,
              high_off) +
              fmt("; 0.2 Nyquist %.4f", low_off)};
}

// ---- filter response

double rms(const audio::StereoBlock& b, int row) {
  return std::sqrt(b.row(row).squaredNorm() / static_cast<double>(b.cols()));
}

// Channel `c` soloed with a steady tone in place of its voice; steady-state
// gain relative to the tone, undoing channel gain and pan.
double rendered_gain(Channel c, const audio::ChannelParams& p, double tone_hz) {
  audio::EngineConfig cfg;
  std::array<std::unique_ptr<audio::Voice>, 4> voices;
  for (int i = 0; i < 4; ++i) {
    voices[i] = std::make_unique<audio::ToneVoice>(i == index_of(c) ? tone_hz : 440.0,
                                                   i == index_of(c) ? 0.2 : 0.0, kFs);
  }
  audio::AudioEngine e(cfg, std::move(voices));
  audio::EngineParams params = audio::initial_params(cfg);
  for (auto& ch : params.channels) ch.gain = 0.0;
  params.channels[index_of(c)] = p;
  e.apply(params);
  audio::StereoBlock block(2, static_cast<Eigen::Index>(kFs));
  e.render(block);  // settle
  e.render(block);
  const auto pan = audio::pan_gains(cfg.voice_for(c).pan);
  const int row = pan[0] >= pan[1] ? 0 : 1;
  return rms(block, row) / (0.2 / std::sqrt(2.0)) / pan[row] / p.gain;
}

Outcome filter_response() {
  const audio::EngineConfig cfg;
  double worst_pass = 0.0, worst_reject = INFINITY;
  int checks = 0;
  for (Channel c : kChannels) {
    for (double r : {0.0, 1.0, 2.0, 3.0, 4.0}) {
      const auto p = audio::map_return(cfg.voice_for(c), r);
      const double centre_db = 20.0 * std::log10(rendered_gain(c, p, p.center_hz));
      const double design_db = 20.0 * std::log10(audio::BandPass::design_gain(p.center_hz, p.q, kFs, p.center_hz));
      worst_pass = std::max(worst_pass, std::fabs(centre_db - design_db));
      for (double f : {p.center_hz / 4.0, p.center_hz * 4.0}) {
        worst_reject = std::min(worst_reject, centre_db - 20.0 * std::log10(rendered_gain(c, p, f)));
      }
      ++checks;
    }
  }
  return {worst_pass <= 1.5 && worst_reject >= 20.0,
          fmt("%g filter settings; passband error %.3f dB, rejection at 2 octaves >= %.1f dB", checks, worst_pass,
              worst_reject)};
}

// ---- determinism

Outcome determinism() {
  const std::string demo = std::string(SOCS_FIXTURE_DIR) + "/demo.jsonl";
  const service::SessionConfig config;
  const auto records = read_packet_log(demo, config.source.local);
  tu::TempPath w1(".wav"), w2(".wav"), t1(".jsonl"), t2(".jsonl");
  const auto a = service::render_session(config, records, w1.path(), t1.path());
  service::render_session(config, read_packet_log(demo, config.source.local), w2.path(), t2.path());
  const bool wav = tu::read_file(w1.path()) == tu::read_file(w2.path());
  const bool tel = tu::read_file(t1.path()) == tu::read_file(t2.path());
  return {wav && tel && a.frames == 60,
          std::string("WAV ") + (wav ? "identical" : "differs") + ", telemetry " + (tel ? "identical" : "differs") +
              fmt(", %g ticks", static_cast<double>(a.frames))};
}

// ---- DDoS scenario

Outcome ddos_scenario() {
  constexpr std::int64_t kOnset = 60, kTicks = 120;
  int passed = 0;
  std::string detail;
  tu::TempPath wav_path(".wav");
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    scenario::Flood flood;
    flood.onset = kOnset;
    flood.duration = 60;
    const auto normal = scenario::traffic(100 + seed, kTicks);
    const auto attacked = scenario::traffic(200 + seed, kTicks, {}, &flood);
    const auto rb = log_returns(aggregate(normal, 1.0));
    const auto rf = log_returns(aggregate(attacked, 1.0));
    const auto report = analyze(rf, {}, &rb);

    service::SessionConfig config;
    config.engine.warmup_seconds = 0.0;
    std::int64_t first_alert = -1;
    int false_alerts = 0;
    AlertState alert(config.alert);
    for (const auto& r : rf) {
      alert = update_alert(alert, r);
      if (!alert.firing()) continue;
      if (r.index < kOnset) ++false_alerts;
      if (r.index >= kOnset && first_alert < 0) first_alert = r.index;
    }

    service::render_session(config, attacked, wav_path.path(), "");
    const auto wav = audio::read_wav(wav_path.path());
    const auto second = [&](std::int64_t s) {
      const auto n = static_cast<Eigen::Index>(wav.sample_rate);
      return std::sqrt(wav.samples.middleCols(s * n, n).squaredNorm() / (2.0 * n));
    };
    const double loudness = second(kOnset) / second(kOnset - 1);

    const bool ok = report.ddos && report.ddos->ratio >= 5.0 && report.ddos->rising && first_alert >= 0 &&
                    first_alert - kOnset <= 15 && false_alerts == 0 && loudness >= 2.0;
    if (ok) ++passed;
    detail += fmt("; seed %g: ratio %.1f", static_cast<double>(seed), report.ddos ? report.ddos->ratio : 0.0) +
              std::string(report.ddos && report.ddos->rising ? " rising" : " flat") +
              fmt(", alert +%g, rms x%.2f", static_cast<double>(first_alert - kOnset), loudness);
  }
  return {passed == 5, fmt("%g of 5 seeds", passed) + detail};
}

// ---- replay equivalence

std::vector<LogReturnVector> replayed_returns(const std::filesystem::path& input, double speed) {
  service::SessionConfig config;
  config.source.kind = service::SourceSpec::Kind::Replay;
  config.source.replay = {input, speed};
  service::SessionOptions options;
  options.audio = false;
  options.serve = false;
  tu::TempPath log(".jsonl");
  options.log_path = log.path();
  auto session = service::Session::start(config, options);
  session->wait();
  session->stop();
  return service::read_session_log(log.path()).returns();
}

Outcome replay_equivalence() {
  tu::TempPath input(".jsonl");
  scenario::Background bg;
  bg.flows_per_second = 20.0;
  scenario::Flood flood;
  flood.onset = 5;
  {
    std::ofstream out(input.path());
    for (const auto& r : scenario::traffic(9, 12, bg, &flood)) out << format_jsonl_record(r) << '\n';
  }
  const auto slow = replayed_returns(input.path(), 1.0);
  const auto fast = replayed_returns(input.path(), 10.0);
  const auto offline = log_returns(aggregate(read_packet_log(input.path(), {}), 1.0));
  const bool same = slow == fast && slow == offline && !slow.empty();
  return {same, fmt("%g ticks at speed 1, %g at speed 10, ", static_cast<double>(slow.size()),
                    static_cast<double>(fast.size())) +
                    (same ? "identical" : "different")};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"log-return oracle", 1.0, log_return_oracle},
      {"scaler properties", 1.0, scaler_properties},
      {"DWT reconstruction, linearity and energy", 30.0, dwt_suite},
      {"denoising Monte Carlo", 30.0, denoise_monte_carlo},
      {"spectrum Parseval and tone placement", 10.0, spectrum_suite},
      {"filter response", 60.0, filter_response},
      {"render determinism", 0.0, determinism},
      {"DDoS scenario", 120.0, ddos_scenario},
      {"replay equivalence", 0.0, replay_equivalence},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_seconds <= 0.0 || elapsed < c.budget_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s  %s (%.2f s%s): %s\n", pass ? "PASS" : "FAIL", c.name.c_str(), elapsed,
                in_time ? "" : fmt(", over the %.0f s budget", c.budget_seconds).c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
