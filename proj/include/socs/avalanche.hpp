#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace socs {

// Least-squares line through the log-log complementary cumulative
// distribution: log P(X >= x) = intercept - exponent * log x.
struct PowerLawFit {
  bool defined = false;
  double exponent = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t samples = 0;
};

inline constexpr std::size_t kMinPowerLawEvents = 10;

PowerLawFit fit_power_law(std::vector<double> values,
                          std::size_t min_events = kMinPowerLawEvents);

// An avalanche is a maximal run of ticks with |value| > threshold.
struct AvalancheStats {
  std::vector<double> volumes;                   // sum of |value| over the run
  std::vector<std::int64_t> durations;           // run length in ticks
  std::vector<std::int64_t> inter_event_times;   // ticks between run starts
  std::vector<std::int64_t> starts;
  PowerLawFit volume_fit;
  PowerLawFit duration_fit;
  PowerLawFit inter_event_fit;

  bool empty() const { return durations.empty(); }
};

AvalancheStats avalanche_stats(const Eigen::Ref<const Eigen::VectorXd>& series,
                               double activation_threshold);

}  // namespace socs
