#include "paratts/msd.hpp"

#include <algorithm>

#include "paratts/diffops.hpp"
#include "paratts/errors.hpp"

namespace paratts::msd {

using nn::Ctx;

HiddenSeq Msd::fuse_latents(Ctx& c,
                            const std::vector<LatentSampleVar>& samples,
                            const corpus::LevelSegs& segs) const {
  ag::Tape& t = c.tape();
  if (samples.size() != 5) throw ShapeError("msd: expected 5 latent samples");
  const int W = cfg_.hidden_width;
  const int L = cfg_.latent_width;
  const std::array<int, 5> expect = {
      segs.frames_per_phoneme.total(), segs.frames_per_phoneme.size(),
      segs.phonemes_per_word.size(), segs.words_per_sentence.size(),
      segs.sentences_per_paragraph.size()};
  for (int i = 0; i < 5; ++i) {
    const auto& z = t.val(samples[i].z);
    if (z.rows() != expect[i] || z.cols() != L)
      throw ShapeError(std::string("msd: latent shape mismatch at level ") +
                       hier::level_name(samples[i].level));
  }
  auto adapt = [&](int level, Var z) {
    return nn::linear(c, "gen/msd/adapt_l" + std::to_string(level), z, L, W,
                      /*bias=*/false);
  };
  if (!cfg_.msd_enabled)
    return {adapt(1, samples[0].z), hier::LevelId::L1_Frame};

  const std::array<const hier::Segmentation*, 4> down = {
      &segs.sentences_per_paragraph, &segs.words_per_sentence,
      &segs.phonemes_per_word, &segs.frames_per_phoneme};
  Var h = adapt(5, samples[4].z);
  for (int level = 4; level >= 1; --level) {
    Var up = hier::length_regulate(h, *down[4 - level]);
    Var z = adapt(level, samples[level - 1].z);
    if (cfg_.fusion == "add") {
      h = ag::add(up, z);
    } else {
      h = nn::linear(c, "gen/msd/cat_l" + std::to_string(level),
                     ag::concat_cols({up, z}), 2 * W, W, /*bias=*/false);
    }
  }
  return {h, hier::LevelId::L1_Frame};
}

Var Msd::vocode(Ctx& c, Var h, Var noise, int hop) const {
  ag::Tape& t = c.tape();
  const int W = cfg_.hidden_width;
  if (t.val(h).cols() != W) throw ShapeError("msd: vocoder hidden width mismatch");
  if (t.val(noise).rows() != t.val(h).rows() ||
      t.val(noise).cols() != cfg_.vocoder_noise_channels)
    throw ShapeError("msd: vocoder noise shape mismatch");
  long prod = 1;
  for (int f : cfg_.vocoder_factors) prod *= f;
  if (prod != hop)
    throw ShapeError("msd: vocoder factors do not multiply to hop");

  Var x = ag::concat_cols({h, noise});
  int ch = cfg_.vocoder_channels;
  x = nn::conv1d(c, "gen/msd/voc/pre", x, W + cfg_.vocoder_noise_channels, ch, 7);
  for (size_t i = 0; i < cfg_.vocoder_factors.size(); ++i) {
    const int s = cfg_.vocoder_factors[i];
    const int out_ch = std::max(4, ch / 2);
    const std::string p = "gen/msd/voc/up" + std::to_string(i);
    x = ag::upsample_zero_rows(x, s);
    x = ag::leaky_relu(nn::conv1d(c, p, x, ch, out_ch, 2 * s + 1), 0.1);
    Var y = ag::leaky_relu(nn::conv1d(c, p + "/res_a", x, out_ch, out_ch, 3, 1),
                           0.1);
    y = nn::conv1d(c, p + "/res_b", y, out_ch, out_ch, 3, 3);
    x = ag::add(x, y);
    ch = out_ch;
  }
  return ag::tanh_(nn::conv1d(c, "gen/msd/voc/post", x, ch, 1, 7));
}

Var Msd::make_vocoder_noise(ag::Tape& t, int frames, uint64_t seed) const {
  Rng rng(seed);
  ag::Mat n(frames, cfg_.vocoder_noise_channels);
  for (int i = 0; i < n.rows(); ++i)
    for (int j = 0; j < n.cols(); ++j) n(i, j) = rng.normal();
  return t.constant(n);
}

Var Msd::project_linear(Ctx& c, Var h, int bins) const {
  if (c.tape().val(h).cols() != cfg_.hidden_width)
    throw ShapeError("msd: linear-branch hidden width mismatch");
  return nn::linear(c, "gen/msd/linproj", h, cfg_.hidden_width, bins);
}

std::vector<Var> Msd::discriminate(Ctx& c, Var wave) const {
  ag::Tape& t = c.tape();
  if (t.val(wave).cols() != 1)
    throw ShapeError("msd: discriminator input must be T x 1");
  const int len = static_cast<int>(t.val(wave).rows());
  std::vector<Var> scores;

  for (int p : cfg_.periods) {
    const int n = len / p;
    if (n == 0) throw ShapeError("msd: wave shorter than period");
    std::vector<Var> cols;
    std::vector<int> index(n);
    for (int j = 0; j < p; ++j) {
      for (int i = 0; i < n; ++i) index[i] = i * p + j;
      cols.push_back(ag::gather_rows(wave, index));
    }
    const std::string pre = "disc/mpd" + std::to_string(p);
    Var x = ag::concat_cols(cols);
    x = ag::leaky_relu(nn::conv1d(c, pre + "/c1", x, p, 16, 5), 0.1);
    x = ag::leaky_relu(nn::conv1d(c, pre + "/c2", x, 16, 32, 5), 0.1);
    x = ag::leaky_relu(nn::conv1d(c, pre + "/c3", x, 32, 32, 5), 0.1);
    scores.push_back(nn::conv1d(c, pre + "/out", x, 32, 1, 3));
  }

  for (size_t i = 0; i < cfg_.resolutions.size(); ++i) {
    const auto& res = cfg_.resolutions[i];
    Var mag = diffops::stft_magnitude(wave, res.fft_size, res.hop, res.window);
    Var x = ag::log_(ag::clamp_min(mag, 1e-7));
    const int bins = res.fft_size / 2 + 1;
    const std::string pre = "disc/mrd" + std::to_string(i);
    x = ag::leaky_relu(nn::conv1d(c, pre + "/c1", x, bins, 32, 3), 0.1);
    x = ag::leaky_relu(nn::conv1d(c, pre + "/c2", x, 32, 32, 3), 0.1);
    scores.push_back(nn::conv1d(c, pre + "/out", x, 32, 1, 3));
  }
  return scores;
}

void Msd::crop_to_min(ag::Mat& real, ag::Mat& fake) {
  const long n = std::min(real.rows(), fake.rows());
  real.conservativeResize(n, real.cols());
  fake.conservativeResize(n, fake.cols());
}

}  // namespace paratts::msd
