#include "socs/service/telemetry.hpp"

#include <algorithm>

#include "socs/error.hpp"

namespace socs::service {

using nlohmann::json;

json to_json(const TelemetryFrame& f) {
  json sample = {{"bs", f.sample.bs}, {"ps", f.sample.ps}, {"br", f.sample.br}, {"pr", f.sample.pr}};
  json returns = json::object(), params = json::object(), gains = json::object();
  for (Channel c : kChannels) {
    const auto i = index_of(c);
    const auto name = channel_name(c);
    returns[name] = f.returns.values[static_cast<Eigen::Index>(i)];
    const auto& p = f.params.channels[i];
    params[name] = {{"gain", p.gain}, {"center_hz", p.center_hz}, {"q", p.q}, {"tap", p.tap}};
    gains[name] = f.params.mixer.gains[i];
  }
  return {{"type", "frame"},
          {"index", f.index},
          {"t", f.sample.t_start},
          {"sample", sample},
          {"returns", returns},
          {"params", params},
          {"mixer", {{"master", f.params.mixer.master}, {"gains", gains}}},
          {"alert",
           {{"firing", f.alert},
            {"count", f.exceedances},
            {"window", f.alert_params.window},
            {"trigger", f.alert_params.trigger},
            {"threshold", f.alert_params.threshold}}},
          {"aggregate", f.aggregate},
          {"aggregate_point", {{"index", f.aggregate_point.index}, {"value", f.aggregate_point.value}}}};
}

TelemetryFrame frame_from_json(const json& j) {
  try {
    if (j.at("type") != "frame") throw Error(ErrorCode::MalformedInput, "not a frame message");
    TelemetryFrame f;
    f.index = j.at("index").get<std::int64_t>();
    f.sample.index = f.index;
    f.sample.t_start = j.at("t").get<double>();
    const auto& s = j.at("sample");
    f.sample.bs = s.at("bs").get<std::uint64_t>();
    f.sample.ps = s.at("ps").get<std::uint64_t>();
    f.sample.br = s.at("br").get<std::uint64_t>();
    f.sample.pr = s.at("pr").get<std::uint64_t>();
    f.returns.index = f.index;
    for (Channel c : kChannels) {
      const auto i = index_of(c);
      const auto name = std::string(channel_name(c));
      f.returns.values[static_cast<Eigen::Index>(i)] = j.at("returns").at(name).get<double>();
      const auto& p = j.at("params").at(name);
      f.params.channels[i] = {p.at("gain").get<double>(), p.at("center_hz").get<double>(), p.at("q").get<double>(),
                              p.at("tap").get<bool>()};
      f.params.mixer.gains[i] = j.at("mixer").at("gains").at(name).get<double>();
    }
    f.params.mixer.master = j.at("mixer").at("master").get<double>();
    const auto& a = j.at("alert");
    f.alert = a.at("firing").get<bool>();
    f.exceedances = a.at("count").get<int>();
    f.alert_params = {a.at("window").get<int>(), a.at("trigger").get<int>(), a.at("threshold").get<double>()};
    f.aggregate = j.at("aggregate").get<std::uint64_t>();
    f.aggregate_point = {j.at("aggregate_point").at("index").get<std::int64_t>(),
                         j.at("aggregate_point").at("value").get<double>()};
    return f;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("bad frame: ") + e.what());
  }
}

AggregatePoint AggregateSeries::push(std::int64_t index, std::uint64_t aggregate) {
  if (in_group_ == 0) {
    points_.push_back({index, 0.0});
    sum_ = 0.0;
  }
  sum_ += static_cast<double>(aggregate);
  ++in_group_;
  points_.back().value = sum_ / static_cast<double>(in_group_);
  const auto point = points_.back();
  if (in_group_ == factor_) in_group_ = 0;
  return point;
}

Subscriber::Subscriber(std::size_t capacity, std::function<void()> notify)
    : capacity_(capacity), notify_(std::move(notify)) {}

bool Subscriber::push(std::string message) {
  {
    std::lock_guard lock(mutex_);
    if (disconnected_) return false;
    if (queue_.size() >= capacity_) {
      disconnected_ = true;
      queue_.clear();
      queue_.push_back(json{{"type", "disconnect"}, {"reason", "overflow"}}.dump());
    } else {
      queue_.push_back(std::move(message));
    }
  }
  cv_.notify_one();
  if (notify_) notify_();
  std::lock_guard lock(mutex_);
  return !disconnected_;
}

bool Subscriber::try_pop(std::string& out) {
  std::lock_guard lock(mutex_);
  if (queue_.empty()) return false;
  out = std::move(queue_.front());
  queue_.pop_front();
  return true;
}

bool Subscriber::pop(std::string& out, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty(); })) return false;
  out = std::move(queue_.front());
  queue_.pop_front();
  return true;
}

bool Subscriber::disconnected() const {
  std::lock_guard lock(mutex_);
  return disconnected_;
}

void Subscriber::close() {
  {
    std::lock_guard lock(mutex_);
    disconnected_ = true;
  }
  cv_.notify_all();
  if (notify_) notify_();
}

TelemetryHub::TelemetryHub(json config, std::size_t window, std::size_t queue_capacity)
    : config_(std::move(config)), window_(window), capacity_(queue_capacity) {}

json TelemetryHub::snapshot_locked() const {
  json frames = json::array(), points = json::array();
  for (const auto& f : recent_) frames.push_back(f);
  for (const auto& p : points_) points.push_back({{"index", p.index}, {"value", p.value}});
  return {{"type", "snapshot"}, {"config", config_}, {"frames", frames}, {"aggregate", points}};
}

json TelemetryHub::snapshot() const {
  std::lock_guard lock(mutex_);
  return snapshot_locked();
}

std::shared_ptr<Subscriber> TelemetryHub::subscribe(std::function<void()> notify) {
  auto s = std::make_shared<Subscriber>(capacity_, std::move(notify));
  std::lock_guard lock(mutex_);
  // The snapshot is queued directly so it never counts toward overflow.
  s->queue_.push_back(snapshot_locked().dump());
  subs_.push_back(s);
  return s;
}

void TelemetryHub::unsubscribe(const std::shared_ptr<Subscriber>& s) {
  std::lock_guard lock(mutex_);
  subs_.erase(std::remove(subs_.begin(), subs_.end(), s), subs_.end());
}

void TelemetryHub::broadcast(const std::string& line) {
  for (auto it = subs_.begin(); it != subs_.end();) {
    if (!(*it)->push(line)) {
      ++disconnects_;
      it = subs_.erase(it);
    } else {
      ++it;
    }
  }
}

void TelemetryHub::publish_frame(const TelemetryFrame& frame) {
  auto j = to_json(frame);
  const auto line = j.dump();
  std::lock_guard lock(mutex_);
  recent_.push_back(std::move(j));
  while (recent_.size() > window_) recent_.pop_front();
  if (!points_.empty() && points_.back().index == frame.aggregate_point.index) {
    points_.back() = frame.aggregate_point;
  } else {
    points_.push_back(frame.aggregate_point);
    if (points_.size() > window_) points_.erase(points_.begin());
  }
  broadcast(line);
}

void TelemetryHub::publish(const json& message) {
  const auto line = message.dump();
  std::lock_guard lock(mutex_);
  broadcast(line);
}

void TelemetryHub::set_config(json config) {
  std::lock_guard lock(mutex_);
  config_ = std::move(config);
}

std::size_t TelemetryHub::subscribers() const {
  std::lock_guard lock(mutex_);
  return subs_.size();
}

std::uint64_t TelemetryHub::disconnects() const {
  std::lock_guard lock(mutex_);
  return disconnects_;
}

std::vector<AggregatePoint> TelemetryHub::aggregate() const {
  std::lock_guard lock(mutex_);
  return points_;
}

}  // namespace socs::service
