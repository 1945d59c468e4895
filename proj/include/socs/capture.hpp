#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace socs {

enum class Direction { Sent, Received };

struct PacketRecord {
  double timestamp = 0.0;  // seconds since session epoch
  Direction direction = Direction::Received;
  std::uint64_t length = 0;  // bytes
};

// Per-tick aggregate over the half-open interval [t_start, t_start + tick).
struct IntervalSample {
  std::int64_t index = 0;
  double t_start = 0.0;
  std::uint64_t bs = 0;  // bytes sent
  std::uint64_t ps = 0;  // packets sent
  std::uint64_t br = 0;  // bytes received
  std::uint64_t pr = 0;  // packets received

  bool operator==(const IntervalSample&) const = default;
};

struct ReplaySpec {
  std::filesystem::path path;
  double speed = 1.0;

  bool operator==(const ReplaySpec&) const = default;
};

// One step of a packet source. Idle events carry the current position of the
// source clock (recorded-time seconds) so silent intervals can be closed.
struct SourceEvent {
  enum class Kind { Packet, Idle, End };
  Kind kind = Kind::End;
  PacketRecord packet;
  double now = 0.0;
};

class PacketSource {
 public:
  virtual ~PacketSource() = default;
  // Blocks for at most a short scheduler quantum.
  virtual SourceEvent poll() = 0;
  // Wakes a blocked poll() and makes subsequent polls return End.
  virtual void cancel() {}
};

enum class LogFormat { Jsonl, Pcap };

// Local address set used to classify live and pcap packets. An address in
// the set as source means Sent; anything else is Received.
using LocalAddressSet = std::vector<std::string>;

LogFormat detect_log_format(const std::filesystem::path& path);

// Reads a whole packet log eagerly. Timestamps are validated to be
// non-decreasing; pcap timestamps are rebased to the first packet.
std::vector<PacketRecord> read_packet_log(const std::filesystem::path& path,
                                          const LocalAddressSet& local = {});

// Parses one JSONL record line ({"ts": float, "dir": "s"|"r", "len": int}).
PacketRecord parse_jsonl_record(std::string_view line);
std::string format_jsonl_record(const PacketRecord& record);

// Source over an in-memory record list with no pacing (offline processing).
std::unique_ptr<PacketSource> make_memory_source(std::vector<PacketRecord> records);

using Clock = std::function<std::chrono::steady_clock::time_point()>;

// Replays a recorded log with inter-event spacing divided by spec.speed.
std::unique_ptr<PacketSource> open_replay_source(const ReplaySpec& spec,
                                                 const LocalAddressSet& local = {});
std::unique_ptr<PacketSource> make_paced_source(std::vector<PacketRecord> records,
                                                double speed);

// Raw-socket capture on a live interface (Linux AF_PACKET).
std::unique_ptr<PacketSource> open_live_source(const std::string& interface_name,
                                               const LocalAddressSet& local = {});

// Turns a packet stream into fixed-interval samples. Intervals are half-open
// and silent intervals are emitted as all-zero samples.
class Aggregator {
 public:
  explicit Aggregator(double tick_seconds);

  double tick() const noexcept { return tick_; }

  // Returns any intervals completed before the packet's timestamp.
  std::vector<IntervalSample> push(const PacketRecord& record);
  // Closes every interval that ends at or before `now`.
  std::vector<IntervalSample> advance_to(double now);
  // Closes the interval holding the last packet, if any is still open.
  std::vector<IntervalSample> finish();

 private:
  void close_current(std::vector<IntervalSample>& out);

  double tick_;
  std::int64_t current_ = 0;
  IntervalSample open_{};
  bool dirty_ = false;
  bool saw_packet_ = false;
};

std::vector<IntervalSample> aggregate(const std::vector<PacketRecord>& records,
                                      double tick_seconds);
std::vector<IntervalSample> aggregate(PacketSource& source, double tick_seconds);

}  // namespace socs
