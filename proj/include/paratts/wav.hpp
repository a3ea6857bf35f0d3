#ifndef PARATTS_WAV_HPP_
#define PARATTS_WAV_HPP_

#include <string>
#include <vector>

namespace paratts {

struct WavData {
  int sample_rate = 0;
  std::vector<double> samples;  // mono, [-1, 1]
};

// 16-bit PCM mono only.
void write_wav(const std::string& path, const std::vector<double>& samples,
               int sample_rate);
WavData read_wav(const std::string& path);

}  // namespace paratts

#endif  // PARATTS_WAV_HPP_
