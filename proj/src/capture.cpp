#include "socs/capture.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <arpa/inet.h>
#include <net/if.h>
#include <netinet/in.h>
#include <linux/if_packet.h>
#include <net/ethernet.h>
#include <sys/socket.h>
#include <unistd.h>

#include <json.hpp>

#include "socs/error.hpp"

namespace socs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::NoSuchInterface: return "no-such-interface";
    case ErrorCode::PermissionDenied: return "permission-denied";
    case ErrorCode::CaptureBackendUnavailable: return "capture-backend-unavailable";
    case ErrorCode::UnreadableFile: return "unreadable-file";
    case ErrorCode::UnknownFormat: return "unknown-format";
    case ErrorCode::NonMonotonicTimestamps: return "non-monotonic-timestamps";
    case ErrorCode::MalformedInput: return "malformed-input";
    case ErrorCode::MissingAsset: return "missing-asset";
    case ErrorCode::CorruptAsset: return "corrupt-asset";
    case ErrorCode::InvalidConfig: return "invalid-config";
    case ErrorCode::AudioDeviceUnavailable: return "audio-device-unavailable";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

namespace {

// Source addresses in network byte order, 4 or 16 bytes each.
class AddressMatcher {
 public:
  explicit AddressMatcher(const LocalAddressSet& local) {
    for (const auto& text : local) {
      std::array<unsigned char, 16> buf{};
      if (inet_pton(AF_INET, text.c_str(), buf.data()) == 1) {
        v4_.emplace_back(buf.begin(), buf.begin() + 4);
      } else if (inet_pton(AF_INET6, text.c_str(), buf.data()) == 1) {
        v6_.emplace_back(buf.begin(), buf.end());
      } else {
        throw Error(ErrorCode::InvalidArgument, "invalid local address: " + text);
      }
    }
  }

  // `ip` points at the start of an IP header.
  Direction classify(const unsigned char* ip, std::size_t size) const {
    if (size < 1) return Direction::Received;
    const int version = ip[0] >> 4;
    if (version == 4 && size >= 20) return match(v4_, ip + 12, 4);
    if (version == 6 && size >= 24) return match(v6_, ip + 8, 16);
    return Direction::Received;
  }

 private:
  static Direction match(const std::vector<std::vector<unsigned char>>& set,
                         const unsigned char* src, std::size_t n) {
    for (const auto& addr : set) {
      if (std::memcmp(addr.data(), src, n) == 0) return Direction::Sent;
    }
    return Direction::Received;
  }

  std::vector<std::vector<unsigned char>> v4_;
  std::vector<std::vector<unsigned char>> v6_;
};

std::uint32_t read_u32(const unsigned char* p, bool swap) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return swap ? __builtin_bswap32(v) : v;
}

std::uint16_t read_be16(const unsigned char* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

// Locates the IP header inside a captured frame for the given link type.
// Returns nullptr when the frame carries something other than IP.
const unsigned char* ip_header(std::uint32_t linktype, const unsigned char* frame,
                               std::size_t caplen, std::size_t& remaining) {
  std::size_t offset = 0;
  switch (linktype) {
    case 1: {  // Ethernet
      if (caplen < 14) return nullptr;
      std::uint16_t type = read_be16(frame + 12);
      offset = 14;
      if (type == 0x8100 && caplen >= 18) {
        type = read_be16(frame + 16);
        offset = 18;
      }
      if (type != 0x0800 && type != 0x86DD) return nullptr;
      break;
    }
    case 0:  // BSD loopback: 4-byte family in host order
      offset = 4;
      break;
    case 12:
    case 101:  // raw IP
      offset = 0;
      break;
    case 113:  // Linux cooked v1
      offset = 16;
      break;
    case 276:  // Linux cooked v2
      offset = 20;
      break;
    default:
      return nullptr;
  }
  if (caplen <= offset) return nullptr;
  remaining = caplen - offset;
  return frame + offset;
}

std::vector<PacketRecord> read_pcap(const std::filesystem::path& path,
                                    const LocalAddressSet& local) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (data.size() < 24) throw Error(ErrorCode::MalformedInput, "truncated pcap header");

  std::uint32_t magic;
  std::memcpy(&magic, data.data(), 4);
  bool swap = false;
  bool nanos = false;
  switch (magic) {
    case 0xa1b2c3d4: break;
    case 0xd4c3b2a1: swap = true; break;
    case 0xa1b23c4d: nanos = true; break;
    case 0x4d3cb2a1: swap = nanos = true; break;
    default: throw Error(ErrorCode::UnknownFormat, "not a pcap file: " + path.string());
  }
  const std::uint32_t linktype = read_u32(data.data() + 20, swap) & 0x0fffffff;
  const AddressMatcher matcher(local);

  std::vector<PacketRecord> records;
  std::size_t pos = 24;
  double epoch = 0.0;
  double last = 0.0;
  while (pos + 16 <= data.size()) {
    const std::uint32_t sec = read_u32(data.data() + pos, swap);
    const std::uint32_t frac = read_u32(data.data() + pos + 4, swap);
    const std::uint32_t caplen = read_u32(data.data() + pos + 8, swap);
    const std::uint32_t origlen = read_u32(data.data() + pos + 12, swap);
    pos += 16;
    if (pos + caplen > data.size()) break;  // truncated trailing record
    const double ts = sec + frac * (nanos ? 1e-9 : 1e-6);
    if (records.empty()) epoch = ts;
    const double rel = ts - epoch;
    if (!records.empty() && rel < last) {
      throw Error(ErrorCode::NonMonotonicTimestamps,
                  "pcap record " + std::to_string(records.size()) +
                      " goes back in time in " + path.string());
    }
    last = rel;

    std::size_t remaining = 0;
    const unsigned char* ip = ip_header(linktype, data.data() + pos, caplen, remaining);
    const Direction dir = ip ? matcher.classify(ip, remaining) : Direction::Received;
    records.push_back({rel, dir, origlen});
    pos += caplen;
  }
  return records;
}

std::vector<PacketRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  std::vector<PacketRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    PacketRecord rec;
    try {
      rec = parse_jsonl_record(line);
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!records.empty() && rec.timestamp < records.back().timestamp) {
      throw Error(ErrorCode::NonMonotonicTimestamps,
                  path.string() + ":" + std::to_string(lineno) + ": ts " +
                      std::to_string(rec.timestamp) + " precedes previous ts " +
                      std::to_string(records.back().timestamp));
    }
    records.push_back(rec);
  }
  return records;
}

class MemorySource final : public PacketSource {
 public:
  explicit MemorySource(std::vector<PacketRecord> records) : records_(std::move(records)) {}

  SourceEvent poll() override {
    if (next_ >= records_.size()) return {SourceEvent::Kind::End, {}, 0.0};
    const auto& r = records_[next_++];
    return {SourceEvent::Kind::Packet, r, r.timestamp};
  }

 private:
  std::vector<PacketRecord> records_;
  std::size_t next_ = 0;
};

class PacedSource final : public PacketSource {
 public:
  PacedSource(std::vector<PacketRecord> records, double speed)
      : records_(std::move(records)), speed_(speed) {}

  SourceEvent poll() override {
    using namespace std::chrono;
    if (cancelled_.load() || next_ >= records_.size()) return {SourceEvent::Kind::End, {}, 0.0};
    const auto now = steady_clock::now();
    if (!started_) {
      start_ = now;
      started_ = true;
    }
    const auto& r = records_[next_];
    const auto due = start_ + duration_cast<steady_clock::duration>(
                                  duration<double>(r.timestamp / speed_));
    if (now >= due) {
      ++next_;
      return {SourceEvent::Kind::Packet, r, r.timestamp};
    }
    std::this_thread::sleep_for(std::min<steady_clock::duration>(due - now, kQuantum));
    const double elapsed = duration<double>(steady_clock::now() - start_).count() * speed_;
    return {SourceEvent::Kind::Idle, {}, std::min(elapsed, r.timestamp)};
  }

  void cancel() override { cancelled_.store(true); }

 private:
  static constexpr std::chrono::milliseconds kQuantum{5};

  std::vector<PacketRecord> records_;
  double speed_;
  std::size_t next_ = 0;
  bool started_ = false;
  std::chrono::steady_clock::time_point start_;
  std::atomic<bool> cancelled_{false};
};

class LiveSource final : public PacketSource {
 public:
  LiveSource(const std::string& iface, const LocalAddressSet& local) : matcher_(local) {
    const unsigned index = if_nametoindex(iface.c_str());
    if (index == 0) throw Error(ErrorCode::NoSuchInterface, "no such interface: " + iface);

    fd_ = ::socket(AF_PACKET, SOCK_DGRAM, htons(ETH_P_ALL));
    if (fd_ < 0) {
      const int err = errno;
      if (err == EPERM || err == EACCES) {
        throw Error(ErrorCode::PermissionDenied,
                    "raw capture on " + iface + " needs CAP_NET_RAW");
      }
      throw Error(ErrorCode::CaptureBackendUnavailable,
                  std::string("packet socket unavailable: ") + std::strerror(err) +
                      "; use replay mode");
    }
    sockaddr_ll addr{};
    addr.sll_family = AF_PACKET;
    addr.sll_protocol = htons(ETH_P_ALL);
    addr.sll_ifindex = static_cast<int>(index);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      const int err = errno;
      ::close(fd_);
      throw Error(ErrorCode::CaptureBackendUnavailable,
                  std::string("cannot bind packet socket: ") + std::strerror(err));
    }
    timeval tv{0, 20000};
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    start_ = std::chrono::steady_clock::now();
  }

  ~LiveSource() override {
    if (fd_ >= 0) ::close(fd_);
  }

  SourceEvent poll() override {
    if (cancelled_.load()) return {SourceEvent::Kind::End, {}, 0.0};
    std::array<unsigned char, 64> buf{};
    sockaddr_ll from{};
    socklen_t fromlen = sizeof from;
    const ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), MSG_TRUNC,
                                 reinterpret_cast<sockaddr*>(&from), &fromlen);
    const double now = elapsed();
    if (n < 0) return {SourceEvent::Kind::Idle, {}, now};
    const std::size_t captured = std::min<std::size_t>(static_cast<std::size_t>(n), buf.size());
    const Direction dir = matcher_.classify(buf.data(), captured);
    return {SourceEvent::Kind::Packet, {now, dir, static_cast<std::uint64_t>(n)}, now};
  }

  void cancel() override { cancelled_.store(true); }

 private:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  AddressMatcher matcher_;
  int fd_ = -1;
  std::chrono::steady_clock::time_point start_;
  std::atomic<bool> cancelled_{false};
};

}  // namespace

LogFormat detect_log_format(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  std::array<unsigned char, 4> head{};
  in.read(reinterpret_cast<char*>(head.data()), 4);
  const auto got = in.gcount();
  if (got == 4) {
    std::uint32_t magic;
    std::memcpy(&magic, head.data(), 4);
    if (magic == 0xa1b2c3d4 || magic == 0xd4c3b2a1 || magic == 0xa1b23c4d ||
        magic == 0x4d3cb2a1) {
      return LogFormat::Pcap;
    }
  }
  in.clear();
  in.seekg(0);
  char c;
  while (in.get(c)) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '{') return LogFormat::Jsonl;
    break;
  }
  if (got == 0) return LogFormat::Jsonl;  // empty file is an empty log
  throw Error(ErrorCode::UnknownFormat, "unrecognised packet log format: " + path.string());
}

PacketRecord parse_jsonl_record(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedInput, e.what());
  }
  if (!j.is_object() || !j.contains("ts") || !j.contains("dir") || !j.contains("len")) {
    throw Error(ErrorCode::MalformedInput, "record needs ts, dir and len");
  }
  if (!j["ts"].is_number() || !j["dir"].is_string() || !j["len"].is_number_integer()) {
    throw Error(ErrorCode::MalformedInput, "record fields have wrong types");
  }
  PacketRecord rec;
  rec.timestamp = j["ts"].get<double>();
  if (!std::isfinite(rec.timestamp) || rec.timestamp < 0.0) {
    throw Error(ErrorCode::MalformedInput, "ts must be a non-negative number");
  }
  const auto dir = j["dir"].get<std::string>();
  if (dir == "s") {
    rec.direction = Direction::Sent;
  } else if (dir == "r") {
    rec.direction = Direction::Received;
  } else {
    throw Error(ErrorCode::MalformedInput, "dir must be \"s\" or \"r\"");
  }
  const auto len = j["len"].get<std::int64_t>();
  if (len < 0) throw Error(ErrorCode::MalformedInput, "len must be non-negative");
  rec.length = static_cast<std::uint64_t>(len);
  return rec;
}

std::string format_jsonl_record(const PacketRecord& record) {
  nlohmann::json j;
  j["ts"] = record.timestamp;
  j["dir"] = record.direction == Direction::Sent ? "s" : "r";
  j["len"] = record.length;
  return j.dump();
}

std::vector<PacketRecord> read_packet_log(const std::filesystem::path& path,
                                          const LocalAddressSet& local) {
  switch (detect_log_format(path)) {
    case LogFormat::Pcap: return read_pcap(path, local);
    case LogFormat::Jsonl: return read_jsonl(path);
  }
  throw Error(ErrorCode::UnknownFormat, path.string());
}

std::unique_ptr<PacketSource> make_memory_source(std::vector<PacketRecord> records) {
  return std::make_unique<MemorySource>(std::move(records));
}

std::unique_ptr<PacketSource> make_paced_source(std::vector<PacketRecord> records,
                                                double speed) {
  if (!(speed > 0.0) || !std::isfinite(speed)) {
    throw Error(ErrorCode::InvalidArgument, "replay speed must be positive");
  }
  return std::make_unique<PacedSource>(std::move(records), speed);
}

std::unique_ptr<PacketSource> open_replay_source(const ReplaySpec& spec,
                                                 const LocalAddressSet& local) {
  if (!(spec.speed > 0.0) || !std::isfinite(spec.speed)) {
    throw Error(ErrorCode::InvalidArgument, "replay speed must be positive");
  }
  return make_paced_source(read_packet_log(spec.path, local), spec.speed);
}

std::unique_ptr<PacketSource> open_live_source(const std::string& interface_name,
                                               const LocalAddressSet& local) {
  return std::make_unique<LiveSource>(interface_name, local);
}

// ---------------------------------------------------------------------------

Aggregator::Aggregator(double tick_seconds) : tick_(tick_seconds) {
  if (!(tick_seconds > 0.0) || !std::isfinite(tick_seconds)) {
    throw Error(ErrorCode::InvalidArgument, "tick must be positive");
  }
  open_.index = 0;
  open_.t_start = 0.0;
}

void Aggregator::close_current(std::vector<IntervalSample>& out) {
  out.push_back(open_);
  ++current_;
  open_ = IntervalSample{};
  open_.index = current_;
  open_.t_start = static_cast<double>(current_) * tick_;
  dirty_ = false;
}

std::vector<IntervalSample> Aggregator::push(const PacketRecord& record) {
  std::vector<IntervalSample> out;
  const auto idx = static_cast<std::int64_t>(std::floor(record.timestamp / tick_));
  while (current_ < idx) close_current(out);
  if (record.direction == Direction::Sent) {
    open_.bs += record.length;
    ++open_.ps;
  } else {
    open_.br += record.length;
    ++open_.pr;
  }
  dirty_ = true;
  saw_packet_ = true;
  return out;
}

std::vector<IntervalSample> Aggregator::advance_to(double now) {
  std::vector<IntervalSample> out;
  const auto idx = static_cast<std::int64_t>(std::floor(now / tick_));
  while (current_ < idx) close_current(out);
  return out;
}

std::vector<IntervalSample> Aggregator::finish() {
  std::vector<IntervalSample> out;
  if (dirty_) close_current(out);
  return out;
}

std::vector<IntervalSample> aggregate(const std::vector<PacketRecord>& records,
                                      double tick_seconds) {
  auto source = make_memory_source(records);
  return aggregate(*source, tick_seconds);
}

std::vector<IntervalSample> aggregate(PacketSource& source, double tick_seconds) {
  Aggregator agg(tick_seconds);
  std::vector<IntervalSample> samples;
  auto append = [&](std::vector<IntervalSample>&& batch) {
    samples.insert(samples.end(), batch.begin(), batch.end());
  };
  for (;;) {
    const SourceEvent ev = source.poll();
    if (ev.kind == SourceEvent::Kind::End) break;
    if (ev.kind == SourceEvent::Kind::Packet) {
      append(agg.push(ev.packet));
    } else {
      append(agg.advance_to(ev.now));
    }
  }
  append(agg.finish());
  return samples;
}

}  // namespace socs
