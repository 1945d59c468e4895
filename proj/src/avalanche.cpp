#include "socs/avalanche.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "socs/error.hpp"

namespace socs {

PowerLawFit fit_power_law(std::vector<double> values, std::size_t min_events) {
  PowerLawFit fit;
  fit.samples = values.size();
  if (values.empty()) return fit;
  std::sort(values.begin(), values.end(), std::greater<>());
  fit.x_max = values.front();
  fit.x_min = values.back();
  if (values.size() < min_events || !(fit.x_min > 0.0) || fit.x_min == fit.x_max) return fit;

  const auto n = static_cast<double>(values.size());
  Eigen::VectorXd lx(values.size()), lp(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    lx[static_cast<Eigen::Index>(i)] = std::log(values[i]);
    lp[static_cast<Eigen::Index>(i)] = std::log(static_cast<double>(i + 1) / n);
  }
  const double mx = lx.mean();
  const double mp = lp.mean();
  const double sxx = (lx.array() - mx).square().sum();
  const double sxp = ((lx.array() - mx) * (lp.array() - mp)).sum();
  const double slope = sxp / sxx;
  fit.defined = true;
  fit.exponent = -slope;
  fit.intercept = mp - slope * mx;
  return fit;
}

AvalancheStats avalanche_stats(const Eigen::Ref<const Eigen::VectorXd>& series,
                               double activation_threshold) {
  if (!(activation_threshold > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "activation threshold must be positive");
  }
  AvalancheStats s;
  const Eigen::Index n = series.size();
  Eigen::Index i = 0;
  while (i < n) {
    if (std::abs(series[i]) <= activation_threshold) {
      ++i;
      continue;
    }
    const Eigen::Index start = i;
    double volume = 0.0;
    while (i < n && std::abs(series[i]) > activation_threshold) volume += std::abs(series[i++]);
    if (!s.starts.empty()) s.inter_event_times.push_back(start - s.starts.back());
    s.starts.push_back(start);
    s.durations.push_back(i - start);
    s.volumes.push_back(volume);
  }

  auto as_double = [](const std::vector<std::int64_t>& v) {
    return std::vector<double>(v.begin(), v.end());
  };
  s.volume_fit = fit_power_law(s.volumes);
  s.duration_fit = fit_power_law(as_double(s.durations));
  s.inter_event_fit = fit_power_law(as_double(s.inter_event_times));
  return s;
}

}  // namespace socs
