#include "socs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "socs/error.hpp"

namespace socs {

std::string_view channel_name(Channel c) {
  switch (c) {
    case Channel::BytesSent: return "bs";
    case Channel::PacketsSent: return "ps";
    case Channel::BytesReceived: return "br";
    case Channel::PacketsReceived: return "pr";
  }
  return "?";
}

std::optional<Channel> parse_channel(std::string_view name) {
  for (Channel c : kChannels) {
    if (channel_name(c) == name) return c;
  }
  return std::nullopt;
}

Eigen::Array4d sample_values(const IntervalSample& s) {
  return Eigen::Array4d(static_cast<double>(s.bs), static_cast<double>(s.ps),
                        static_cast<double>(s.br), static_cast<double>(s.pr));
}

std::string_view to_string(ReturnMode mode) {
  return mode == ReturnMode::Signed ? "signed" : "squared";
}

std::optional<ReturnMode> parse_return_mode(std::string_view text) {
  if (text == "signed") return ReturnMode::Signed;
  if (text == "squared") return ReturnMode::Squared;
  return std::nullopt;
}

LogReturnVector log_return(const IntervalSample& prev, const IntervalSample& next,
                           ReturnMode mode) {
  if (next.index != prev.index + 1) {
    throw std::logic_error("log_return needs consecutive samples, got " +
                           std::to_string(prev.index) + " -> " + std::to_string(next.index));
  }
  LogReturnVector out;
  out.index = next.index;
  out.values << floored_log(next.bs) - floored_log(prev.bs),
      floored_log(next.ps) - floored_log(prev.ps),
      floored_log(next.br) - floored_log(prev.br),
      floored_log(next.pr) - floored_log(prev.pr);
  if (mode == ReturnMode::Squared) out.values = out.values.square();
  return out;
}

std::vector<LogReturnVector> log_returns(const std::vector<IntervalSample>& samples,
                                         ReturnMode mode) {
  std::vector<LogReturnVector> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i == 0) {
      LogReturnVector first;
      first.index = samples[0].index;
      out.push_back(first);
    } else {
      out.push_back(log_return(samples[i - 1], samples[i], mode));
    }
  }
  return out;
}

bool ScalerSpec::valid() const {
  return std::isfinite(in_min) && std::isfinite(in_max) && std::isfinite(out_min) &&
         std::isfinite(out_max) && in_min < in_max && out_min <= out_max;
}

double scale(double x, const ScalerSpec& spec) {
  if (!spec.valid()) {
    throw Error(ErrorCode::InvalidArgument, "scaler needs in_min < in_max and out_min <= out_max");
  }
  if (std::isnan(x)) x = spec.in_min;
  const double clamped = std::clamp(x, spec.in_min, spec.in_max);
  if (clamped == spec.in_max) return spec.out_max;
  const double y = spec.out_min + (clamped - spec.in_min) * (spec.out_max - spec.out_min) /
                                       (spec.in_max - spec.in_min);
  return std::min(y, spec.out_max);
}

AlertState::AlertState(const AlertParams& params) {
  set_params(params);
}

void AlertState::set_params(const AlertParams& params) {
  if (!params.valid()) {
    throw Error(ErrorCode::InvalidArgument, "alert needs 1 <= trigger <= window and threshold > 0");
  }
  params_ = params;
  while (history_.size() > static_cast<std::size_t>(params_.window)) history_.pop_front();
  recount();
}

void AlertState::recount() {
  count_ = 0;
  for (const auto& e : history_) {
    if (e[0] || e[1] || e[2] || e[3]) ++count_;
  }
  firing_ = count_ >= params_.trigger;
}

AlertState update_alert(AlertState state, const LogReturnVector& v) {
  AlertState::Exceedance e{};
  for (int c = 0; c < 4; ++c) e[c] = std::abs(v.values[c]) > state.params_.threshold;
  state.history_.push_back(e);
  while (state.history_.size() > static_cast<std::size_t>(state.params_.window)) {
    state.history_.pop_front();
  }
  state.recount();
  return state;
}

}  // namespace socs
