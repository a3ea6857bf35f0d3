#ifndef PARATTS_DSP_HPP_
#define PARATTS_DSP_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace paratts::dsp {

using Spec = Eigen::MatrixXd;  // frames x bins, magnitudes (>= 0)

// DSP profile. "paper": 22.05 kHz, hop 300, window 800. The nominal
// 512-dimensional linear spectrogram is realized as fft_size=1024 -> 513
// bins; a 512-bin power-of-two FFT does not exist, so the profile carries
// one extra bin.
struct SpectrogramConfig {
  int sample_rate = 22050;
  int hop = 300;
  int window = 800;
  int fft_size = 1024;
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 11025.0;
  std::string profile_name = "paper";
  double f0_min = 60.0;
  double f0_max = 500.0;

  int bins() const { return fft_size / 2 + 1; }
  // Frame-count law shared by every spectral op and the alignment totals.
  int num_frames(size_t samples) const {
    return static_cast<int>((samples + hop - 1) / hop);
  }
  void validate() const;

  static SpectrogramConfig preset(const std::string& name);
};

struct F0Track {
  std::vector<double> f0;  // Hz per frame, 0 = unvoiced
};

struct StftResolution {
  int fft_size;
  int hop;
  int window;
};

std::vector<StftResolution> default_resolutions();

// Centered frames at t*hop with reflect padding; Hann window zero-padded to
// fft_size; magnitudes (not power).
Spec stft_magnitude(const std::vector<double>& wave,
                    const SpectrogramConfig& cfg);
Spec stft_magnitude_res(const std::vector<double>& wave,
                        const StftResolution& res);

// bins x n_mels triangular filterbank (HTK mel scale).
Eigen::MatrixXd mel_filterbank(const SpectrogramConfig& cfg);

// log(max(linear * fb, 1e-5))
Spec mel_spectrogram(const Spec& linear, const SpectrogramConfig& cfg);

constexpr double kMelFloor = 1e-5;

F0Track estimate_f0(const std::vector<double>& wave,
                    const SpectrogramConfig& cfg);

// Mean over resolutions of spectral convergence + log-magnitude L1
// (Parallel-WaveGAN form). First argument is the reference spectrum in the
// convergence denominator.
double multi_res_stft_loss(const std::vector<double>& x,
                           const std::vector<double>& y,
                           const std::vector<StftResolution>& resolutions);

// Hann window (periodic form), shared with the differentiable STFT path.
std::vector<double> hann_window(int n);

// Reflect index into [0, n); shared framing helper.
int reflect_index(int i, int n);

}  // namespace paratts::dsp

#endif  // PARATTS_DSP_HPP_
