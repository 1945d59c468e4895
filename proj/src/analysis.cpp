#include "socs/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace socs {

namespace {

nlohmann::json vec(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

nlohmann::json fit_json(const PowerLawFit& f) {
  nlohmann::json j;
  j["samples"] = f.samples;
  j["defined"] = f.defined;
  j["exponent"] = f.defined ? nlohmann::json(f.exponent) : nlohmann::json(nullptr);
  j["fit_range"] = {f.x_min, f.x_max};
  return j;
}

nlohmann::json ddos_json(const spectral::DdosIndicator& d) {
  return {{"ratio", d.ratio}, {"rising", d.rising}};
}

}  // namespace

Eigen::MatrixX4d returns_matrix(const std::vector<LogReturnVector>& returns) {
  Eigen::MatrixX4d m(static_cast<Eigen::Index>(returns.size()), 4);
  for (std::size_t i = 0; i < returns.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = returns[i].values.matrix().transpose();
  }
  return m;
}

AnalysisReport analyze(const std::vector<LogReturnVector>& returns, const AnalysisOptions& options,
                       const std::vector<LogReturnVector>* baseline) {
  AnalysisReport report;
  report.ticks = returns.size();
  report.options = options;
  const Eigen::MatrixX4d m = returns_matrix(returns);

  Eigen::MatrixX4d base;
  Eigen::Index common = 0;
  if (baseline) {
    base = returns_matrix(*baseline);
    common = std::min(base.rows(), m.rows());
  }

  for (Channel c : kChannels) {
    ChannelAnalysis ca;
    ca.channel = c;
    ca.residuals = m.col(index_of(c));
    const Eigen::Index n = ca.residuals.size();

    const int levels =
        std::min(options.levels, wavelet::max_levels(n, options.family, wavelet::Extension::Symmetric));
    if (levels >= 1) {
      ca.decomposition = wavelet::dwt(ca.residuals, options.family, levels);
      auto dn = wavelet::denoise_detailed(ca.residuals, options.family, levels);
      ca.denoised = std::move(dn.signal);
      ca.noise_sigma = dn.sigma;
      ca.denoise_threshold = dn.threshold;
    } else {
      ca.denoised = ca.residuals;
    }
    if (n >= 2) ca.spectrum = spectral::spectrum(ca.residuals, options.spectrum);
    ca.avalanches = avalanche_stats(ca.residuals, options.activation_threshold);

    if (baseline && common >= 2) {
      const Eigen::VectorXd cur_tail = m.col(index_of(c)).tail(common);
      const Eigen::VectorXd base_tail = base.col(index_of(c)).tail(common);
      ca.ddos = spectral::ddos_indicator(spectral::spectrum(base_tail, options.spectrum),
                                         spectral::spectrum(cur_tail, options.spectrum));
      if (!report.ddos || ca.ddos->ratio > report.ddos->ratio) {
        report.ddos = ca.ddos;
        report.ddos_channel = c;
      }
    }
    report.channels.push_back(std::move(ca));
  }
  return report;
}

nlohmann::json to_json(const AnalysisReport& report) {
  nlohmann::json j;
  j["ticks"] = report.ticks;
  j["wavelet"] = {{"family", wavelet::to_string(report.options.family)},
                  {"levels", report.options.levels}};
  j["split_fraction"] = report.options.spectrum.split_fraction;
  j["activation_threshold"] = report.options.activation_threshold;

  nlohmann::json channels = nlohmann::json::array();
  for (const auto& ca : report.channels) {
    nlohmann::json cj;
    cj["channel"] = channel_name(ca.channel);
    cj["residuals"] = vec(ca.residuals);
    cj["denoised"] = vec(ca.denoised);
    cj["noise_sigma"] = ca.noise_sigma;
    cj["denoise_threshold"] = ca.denoise_threshold;
    if (ca.decomposition) {
      nlohmann::json dj;
      dj["levels"] = ca.decomposition->levels();
      dj["approximation"] = vec(ca.decomposition->approximation);
      nlohmann::json details = nlohmann::json::array();
      for (const auto& d : ca.decomposition->details) details.push_back(vec(d));
      dj["details"] = details;
      cj["wavelet"] = dj;
    } else {
      cj["wavelet"] = nullptr;
    }
    if (ca.spectrum) {
      const auto& s = *ca.spectrum;
      nlohmann::json sj;
      sj["length"] = s.length;
      sj["total_energy"] = s.total_energy;
      sj["high_band_fraction"] = s.high_band_fraction;
      sj["trend_slope"] = s.trend_slope;
      sj["window_fractions"] = s.window_fractions;
      if (static_cast<std::size_t>(s.bin_energies.size()) <= report.options.max_exported_bins) {
        sj["bin_energies"] = vec(s.bin_energies);
      } else {
        sj["bin_energies"] = nullptr;
        sj["bin_energies_elided"] = s.bin_energies.size();
      }
      cj["spectrum"] = sj;
    } else {
      cj["spectrum"] = nullptr;
    }
    const auto& a = ca.avalanches;
    cj["avalanches"] = {{"count", a.durations.size()},
                        {"volumes", a.volumes},
                        {"durations", a.durations},
                        {"inter_event_times", a.inter_event_times},
                        {"volume_fit", fit_json(a.volume_fit)},
                        {"duration_fit", fit_json(a.duration_fit)},
                        {"inter_event_fit", fit_json(a.inter_event_fit)}};
    cj["ddos"] = ca.ddos ? ddos_json(*ca.ddos) : nlohmann::json(nullptr);
    channels.push_back(cj);
  }
  j["channels"] = channels;
  if (report.ddos) {
    j["ddos"] = ddos_json(*report.ddos);
    j["ddos"]["channel"] = channel_name(*report.ddos_channel);
  } else {
    j["ddos"] = nullptr;
  }
  return j;
}

}  // namespace socs
