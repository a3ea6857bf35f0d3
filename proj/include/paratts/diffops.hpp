#ifndef PARATTS_DIFFOPS_HPP_
#define PARATTS_DIFFOPS_HPP_

#include <vector>

#include "paratts/ag.hpp"
#include "paratts/dsp.hpp"
#include "paratts/latents.hpp"

namespace paratts::diffops {

using ag::Var;

// Differentiable STFT magnitude of a T x 1 waveform (matrix DFT; same framing
// law as the plain path: frames = ceil(T / hop), centered, reflect padding).
Var stft_magnitude(Var wave, int fft_size, int hop, int window,
                   double eps = 1e-16);

// log(max(linear * mel_fb, 1e-5)) on the tape.
Var mel_spectrogram(Var linear_mag, const dsp::SpectrogramConfig& cfg);

// Mean |mel(pred) - mel(target)| with trailing crop to the shorter wave.
Var mel_l1(Var pred_wave, Var target_wave, const dsp::SpectrogramConfig& cfg);

// Mean over resolutions of spectral convergence + log-magnitude L1; the
// reference x sits in the convergence denominator.
Var multi_res_stft_loss(Var x_ref, Var y,
                        const std::vector<dsp::StftResolution>& resolutions);

// SC + log-magnitude L1 at the profile's native resolution; prediction is
// clamped at zero before the log term.
Var linear_spec_loss(Var pred_spec, Var target_spec);

// Diagonal-Gaussian KL(q || p), mean over positions and dimensions.
Var gaussian_kl(const LatentStatsVar& q, const LatentStatsVar& p);

// Mean squared error between P x 1 log-duration columns.
Var duration_l2(Var pred_logdur, Var target_logdur);

// LSGAN objectives averaged over branches: {generator, discriminator}.
std::pair<Var, Var> adversarial_losses(const std::vector<Var>& scores_real,
                                       const std::vector<Var>& scores_fake);

}  // namespace paratts::diffops

#endif  // PARATTS_DIFFOPS_HPP_
