#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "socs/capture.hpp"
#include "socs/error.hpp"

namespace socs {

// The four traffic variables, in the order every per-channel array uses.
enum class Channel : int { BytesSent = 0, PacketsSent = 1, BytesReceived = 2, PacketsReceived = 3 };

inline constexpr std::array<Channel, 4> kChannels = {
    Channel::BytesSent, Channel::PacketsSent, Channel::BytesReceived, Channel::PacketsReceived};

inline constexpr int index_of(Channel c) { return static_cast<int>(c); }

std::string_view channel_name(Channel c);  // "bs", "ps", "br", "pr"
std::optional<Channel> parse_channel(std::string_view name);

// Channel values of a sample as reals, in kChannels order.
Eigen::Array4d sample_values(const IntervalSample& s);

enum class ReturnMode { Signed, Squared };

std::string_view to_string(ReturnMode mode);
std::optional<ReturnMode> parse_return_mode(std::string_view text);

struct LogReturnVector {
  std::int64_t index = 0;
  Eigen::Array4d values = Eigen::Array4d::Zero();  // rbs, rps, rbr, rpr

  double operator[](Channel c) const { return values[index_of(c)]; }
  double rbs() const { return values[0]; }
  double rps() const { return values[1]; }
  double rbr() const { return values[2]; }
  double rpr() const { return values[3]; }

  bool operator==(const LogReturnVector& o) const {
    return index == o.index && (values == o.values).all();
  }
};

// ln of the zero-floored value: silent intervals count as one unit so the
// returns stay finite.
inline double floored_log(std::uint64_t v) {
  return std::log(static_cast<double>(v < 1 ? 1 : v));
}

// Log return between consecutive samples. Throws std::logic_error when
// next.index != prev.index + 1.
LogReturnVector log_return(const IntervalSample& prev, const IntervalSample& next,
                           ReturnMode mode = ReturnMode::Signed);

// Squares every component of a signed vector.
inline LogReturnVector to_squared(LogReturnVector v) {
  v.values = v.values.square();
  return v;
}

// Returns for a whole sample sequence. The first sample has no predecessor
// and reports a zero vector, so the output has one entry per sample.
std::vector<LogReturnVector> log_returns(const std::vector<IntervalSample>& samples,
                                         ReturnMode mode = ReturnMode::Signed);

struct ScalerSpec {
  double in_min = 0.0;
  double in_max = 1.0;
  double out_min = 0.0;
  double out_max = 1.0;

  bool valid() const;
  bool operator==(const ScalerSpec&) const = default;
};

// Clamp x into the input range, then map affinely onto the output range.
double scale(double x, const ScalerSpec& spec);

template <typename Derived>
auto scale(const Eigen::ArrayBase<Derived>& x, const ScalerSpec& spec) {
  if (!spec.valid()) throw Error(ErrorCode::InvalidArgument, "invalid scaler range");
  const double k = (spec.out_max - spec.out_min) / (spec.in_max - spec.in_min);
  return ((x.derived().max(spec.in_min).min(spec.in_max) - spec.in_min) * k + spec.out_min).eval();
}

struct AlertParams {
  int window = 30;         // M ticks
  int trigger = 10;        // K exceedances
  double threshold = 2.0;  // theta

  bool valid() const { return trigger >= 1 && trigger <= window && threshold > 0.0; }
  bool operator==(const AlertParams&) const = default;
};

// Sustained-instability detector. A tick is an exceedance when any channel's
// |return| exceeds the threshold; the alert fires while at least `trigger` of
// the last `window` ticks were exceedances.
class AlertState {
 public:
  using Exceedance = std::array<bool, 4>;

  AlertState() = default;
  explicit AlertState(const AlertParams& params);

  const AlertParams& params() const noexcept { return params_; }
  bool firing() const noexcept { return firing_; }
  int exceedance_count() const noexcept { return count_; }
  const std::deque<Exceedance>& history() const noexcept { return history_; }

  // Keeps the retained history (trimmed to the new window).
  void set_params(const AlertParams& params);

 private:
  friend AlertState update_alert(AlertState state, const LogReturnVector& v);
  void recount();

  AlertParams params_{};
  std::deque<Exceedance> history_;
  int count_ = 0;
  bool firing_ = false;
};

AlertState update_alert(AlertState state, const LogReturnVector& v);

}  // namespace socs
