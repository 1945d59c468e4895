#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "socs/audio/engine.hpp"
#include "socs/capture.hpp"
#include "socs/metrics.hpp"

namespace socs::service {

struct AggregatePoint {
  std::int64_t index = 0;  // first tick in the group
  double value = 0.0;      // mean of bs + br over the group so far

  bool operator==(const AggregatePoint&) const = default;
};

struct TelemetryFrame {
  std::int64_t index = 0;
  IntervalSample sample;
  LogReturnVector returns;
  audio::EngineParams params;  // as applied, taps included
  bool alert = false;
  int exceedances = 0;
  AlertParams alert_params;
  std::uint64_t aggregate = 0;  // bs + br
  AggregatePoint aggregate_point;

  bool operator==(const TelemetryFrame&) const = default;
};

nlohmann::json to_json(const TelemetryFrame& frame);
// Throws Error(MalformedInput).
TelemetryFrame frame_from_json(const nlohmann::json& j);

// Downsampled aggregate plot series: one point per `factor` ticks.
class AggregateSeries {
 public:
  explicit AggregateSeries(int factor = 5) : factor_(factor) {}

  // Returns the point the tick was folded into.
  AggregatePoint push(std::int64_t index, std::uint64_t aggregate);
  const std::vector<AggregatePoint>& points() const { return points_; }
  int factor() const { return factor_; }

 private:
  int factor_;
  std::vector<AggregatePoint> points_;
  std::int64_t in_group_ = 0;
  double sum_ = 0.0;
};

// One consumer's bounded outbox. Overflow flags the subscriber as
// disconnected and replaces the backlog with a single disconnect message.
class Subscriber {
 public:
  Subscriber(std::size_t capacity, std::function<void()> notify);

  // Non-blocking; returns false if the subscriber is (now) disconnected.
  bool push(std::string message);
  bool try_pop(std::string& out);
  // Waits up to `timeout` for a message.
  bool pop(std::string& out, std::chrono::milliseconds timeout);
  bool disconnected() const;
  void close();

 private:
  friend class TelemetryHub;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::string> queue_;
  std::size_t capacity_;
  bool disconnected_ = false;
  std::function<void()> notify_;
};

// Fans telemetry out to subscribers without ever blocking the publisher.
class TelemetryHub {
 public:
  TelemetryHub(nlohmann::json config, std::size_t window, std::size_t queue_capacity);

  // The first queued message is a snapshot of the config, the last `window`
  // frames and the aggregate series; live messages follow with no gap.
  std::shared_ptr<Subscriber> subscribe(std::function<void()> notify = {});
  void unsubscribe(const std::shared_ptr<Subscriber>& s);

  void publish_frame(const TelemetryFrame& frame);
  // Broadcasts a non-frame message (alert, control echo).
  void publish(const nlohmann::json& message);
  void set_config(nlohmann::json config);

  std::size_t subscribers() const;
  std::uint64_t disconnects() const;
  std::vector<AggregatePoint> aggregate() const;
  nlohmann::json snapshot() const;

 private:
  void broadcast(const std::string& line);
  nlohmann::json snapshot_locked() const;

  mutable std::mutex mutex_;
  nlohmann::json config_;
  std::size_t window_;
  std::size_t capacity_;
  std::deque<nlohmann::json> recent_;
  std::vector<AggregatePoint> points_;
  std::vector<std::shared_ptr<Subscriber>> subs_;
  std::uint64_t disconnects_ = 0;
};

}  // namespace socs::service
