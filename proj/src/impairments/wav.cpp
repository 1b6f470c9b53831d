#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "empathd/errors.hpp"
#include "empathd/impairments.hpp"
#include "empathd/io.hpp"

namespace empathd {

namespace {

std::uint32_t le32(const std::uint8_t* p) { return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24); }
std::uint16_t le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_tag(std::vector<std::uint8_t>& b, const char* tag) { b.insert(b.end(), tag, tag + 4); }

}  // namespace

AudioBuffer read_wav(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(path + ": not a RIFF/WAVE file");
  }
  AudioBuffer out;
  bool haveFmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw FormatError(path + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError(path + ": short fmt chunk");
      const std::uint16_t format = le16(bytes.data() + body);
      const std::uint16_t channels = le16(bytes.data() + body + 2);
      out.sampleRateHz = le32(bytes.data() + body + 4);
      const std::uint16_t bits = le16(bytes.data() + body + 14);
      if (format != 1 || channels != 1 || bits != 16) throw FormatError(path + ": only 16-bit PCM mono is supported");
      haveFmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!haveFmt) throw FormatError(path + ": data before fmt");
      out.samples.reserve(size / 2);
      for (std::size_t i = 0; i + 1 < size; i += 2) {
        out.samples.push_back(static_cast<std::int16_t>(le16(bytes.data() + body + i)) / 32768.0);
      }
      return out;
    }
    pos = body + size + (size & 1);
  }
  throw FormatError(path + ": no data chunk");
}

void write_wav(const AudioBuffer& audio, const std::string& path) {
  const auto n = static_cast<std::uint32_t>(audio.samples.size());
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sampleRateHz));
  std::vector<std::uint8_t> b;
  b.reserve(44 + 2 * n);
  put_tag(b, "RIFF");
  put32(b, 36 + 2 * n);
  put_tag(b, "WAVE");
  put_tag(b, "fmt ");
  put32(b, 16);
  put16(b, 1);
  put16(b, 1);
  put32(b, rate);
  put32(b, rate * 2);
  put16(b, 2);
  put16(b, 16);
  put_tag(b, "data");
  put32(b, 2 * n);
  for (double s : audio.samples) {
    const long v = std::lround(std::clamp(s, -1.0, 32767.0 / 32768.0) * 32768.0);
    put16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  write_file_bytes(path, b);
}

}  // namespace empathd
