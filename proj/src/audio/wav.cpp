#include "socs/audio/wav.hpp"

#include <cstring>
#include <vector>

#include "socs/error.hpp"

namespace socs::audio {

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ofstream& out, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace

WavWriter::WavWriter(const std::filesystem::path& path, int sample_rate, int channels)
    : out_(path, std::ios::binary | std::ios::trunc), sample_rate_(sample_rate), channels_(channels) {
  if (!out_) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out_.write("RIFF", 4);
  put_u32(out_, 0);
  out_.write("WAVE", 4);
  out_.write("fmt ", 4);
  put_u32(out_, 16);
  put_u16(out_, 1);  // PCM
  put_u16(out_, static_cast<std::uint16_t>(channels_));
  put_u32(out_, static_cast<std::uint32_t>(sample_rate_));
  put_u32(out_, static_cast<std::uint32_t>(sample_rate_ * channels_ * 2));
  put_u16(out_, static_cast<std::uint16_t>(channels_ * 2));
  put_u16(out_, 16);
  out_.write("data", 4);
  put_u32(out_, 0);
}

WavWriter::~WavWriter() {
  try {
    close();
  } catch (...) {
  }
}

void WavWriter::write(const Eigen::Ref<const StereoBlock>& block) {
  std::vector<unsigned char> bytes(static_cast<std::size_t>(block.cols()) * 4);
  for (Eigen::Index j = 0; j < block.cols(); ++j) {
    for (int c = 0; c < 2; ++c) {
      const auto v = static_cast<std::uint16_t>(to_pcm16(block(c, j)));
      bytes[static_cast<std::size_t>(j) * 4 + c * 2] = static_cast<unsigned char>(v);
      bytes[static_cast<std::size_t>(j) * 4 + c * 2 + 1] = static_cast<unsigned char>(v >> 8);
    }
  }
  out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out_) throw Error(ErrorCode::Io, "short write to wav output");
  frames_ += static_cast<std::uint64_t>(block.cols());
}

void WavWriter::close() {
  if (closed_) return;
  closed_ = true;
  const auto data_bytes = static_cast<std::uint32_t>(frames_ * channels_ * 2);
  out_.seekp(4);
  put_u32(out_, 36 + data_bytes);
  out_.seekp(40);
  put_u32(out_, data_bytes);
  out_.close();
  if (out_.fail()) throw Error(ErrorCode::Io, "failed to finalise wav output");
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  std::vector<unsigned char> d((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (d.size() < 12 || std::memcmp(d.data(), "RIFF", 4) != 0 || std::memcmp(d.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::MalformedInput, "not a RIFF/WAVE file: " + path.string());
  }
  WavData wav;
  int bits = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= d.size()) {
    const std::uint32_t size = get_u32(d.data() + pos + 4);
    const unsigned char* body = d.data() + pos + 8;
    const std::size_t avail = d.size() - pos - 8;
    if (std::memcmp(d.data() + pos, "fmt ", 4) == 0 && size >= 16 && avail >= 16) {
      if (get_u16(body) != 1) throw Error(ErrorCode::MalformedInput, "only PCM wav is supported");
      wav.channels = get_u16(body + 2);
      wav.sample_rate = static_cast<int>(get_u32(body + 4));
      bits = get_u16(body + 14);
    } else if (std::memcmp(d.data() + pos, "data", 4) == 0) {
      data = body;
      data_size = std::min<std::size_t>(size, avail);
    }
    pos += 8 + size + (size & 1);
  }
  if (!data || wav.channels < 1 || bits != 16) {
    throw Error(ErrorCode::MalformedInput, "wav needs a 16-bit fmt chunk and a data chunk");
  }
  const auto frames = static_cast<Eigen::Index>(data_size / (2u * wav.channels));
  wav.samples.resize(wav.channels, frames);
  for (Eigen::Index j = 0; j < frames; ++j) {
    for (int c = 0; c < wav.channels; ++c) {
      const auto raw = static_cast<std::int16_t>(get_u16(data + (j * wav.channels + c) * 2));
      wav.samples(c, j) = static_cast<float>(raw) / 32768.0f;
    }
  }
  return wav;
}

}  // namespace socs::audio
