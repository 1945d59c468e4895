#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "socs/avalanche.hpp"
#include "socs/metrics.hpp"
#include "socs/spectrum.hpp"
#include "socs/wavelet.hpp"

namespace socs {

struct AnalysisOptions {
  wavelet::Daubechies family = wavelet::Daubechies::db4;
  int levels = 4;
  spectral::SpectrumOptions spectrum{};
  double activation_threshold = 1.0;
  // Bin energies are left out of the JSON export above this many bins.
  std::size_t max_exported_bins = 4096;
};

struct ChannelAnalysis {
  Channel channel = Channel::BytesSent;
  Eigen::VectorXd residuals;  // the log-return series
  std::optional<wavelet::Decomposition<double>> decomposition;
  Eigen::VectorXd denoised;
  double noise_sigma = 0.0;
  double denoise_threshold = 0.0;
  std::optional<spectral::SpectrumReport> spectrum;
  AvalancheStats avalanches;
  std::optional<spectral::DdosIndicator> ddos;
};

struct AnalysisReport {
  std::size_t ticks = 0;
  AnalysisOptions options;
  std::vector<ChannelAnalysis> channels;
  // Strongest per-channel indicator when a baseline was supplied.
  std::optional<Channel> ddos_channel;
  std::optional<spectral::DdosIndicator> ddos;
};

// Column c holds the returns of kChannels[c].
Eigen::MatrixX4d returns_matrix(const std::vector<LogReturnVector>& returns);

// Runs the wavelet, spectrum and avalanche analyses per channel. With a
// baseline, both series are cut to their common trailing length before the
// DDoS indicator is computed.
AnalysisReport analyze(const std::vector<LogReturnVector>& returns, const AnalysisOptions& options,
                       const std::vector<LogReturnVector>* baseline = nullptr);

nlohmann::json to_json(const AnalysisReport& report);

}  // namespace socs
