#include "paratts/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "paratts/errors.hpp"

namespace paratts {

namespace {

void put_u32(std::ostream& os, uint32_t v) {
  char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
               char((v >> 24) & 0xff)};
  os.write(b, 4);
}
void put_u16(std::ostream& os, uint16_t v) {
  char b[2] = {char(v & 0xff), char((v >> 8) & 0xff)};
  os.write(b, 2);
}
uint32_t get_u32(const unsigned char* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}
uint16_t get_u16(const unsigned char* p) {
  return uint16_t(p[0]) | uint16_t(p[1]) << 8;
}

}  // namespace

void write_wav(const std::string& path, const std::vector<double>& samples,
               int sample_rate) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  const uint32_t n = static_cast<uint32_t>(samples.size());
  const uint32_t data_bytes = n * 2;
  os.write("RIFF", 4);
  put_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put_u32(os, 16);
  put_u16(os, 1);  // PCM
  put_u16(os, 1);  // mono
  put_u32(os, static_cast<uint32_t>(sample_rate));
  put_u32(os, static_cast<uint32_t>(sample_rate * 2));
  put_u16(os, 2);
  put_u16(os, 16);
  os.write("data", 4);
  put_u32(os, data_bytes);
  for (double s : samples) {
    double c = std::clamp(s, -1.0, 1.0);
    int v = static_cast<int>(std::lrint(c * 32767.0));
    v = std::clamp(v, -32768, 32767);
    put_u16(os, static_cast<uint16_t>(static_cast<int16_t>(v)));
  }
  if (!os) throw IoError("write failed: " + path);
}

WavData read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw ParseError("not a RIFF/WAVE file: " + path);

  WavData out;
  size_t pos = 12;
  int channels = 0, bits = 0;
  size_t data_off = 0, data_len = 0;
  while (pos + 8 <= buf.size()) {
    const unsigned char* p = buf.data() + pos;
    uint32_t len = get_u32(p + 4);
    if (std::memcmp(p, "fmt ", 4) == 0 && len >= 16) {
      uint16_t fmt = get_u16(p + 8);
      channels = get_u16(p + 10);
      out.sample_rate = static_cast<int>(get_u32(p + 12));
      bits = get_u16(p + 22);
      if (fmt != 1) throw ParseError("only PCM wav supported: " + path);
    } else if (std::memcmp(p, "data", 4) == 0) {
      data_off = pos + 8;
      data_len = len;
    }
    pos += 8 + len + (len & 1);
  }
  if (channels != 1 || bits != 16)
    throw ParseError("expected 16-bit mono wav: " + path);
  if (data_off == 0 || data_off + data_len > buf.size())
    throw ParseError("missing or truncated data chunk: " + path);
  size_t n = data_len / 2;
  out.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    int16_t v = static_cast<int16_t>(get_u16(buf.data() + data_off + 2 * i));
    out.samples[i] = static_cast<double>(v) / 32767.0;
  }
  return out;
}

}  // namespace paratts
