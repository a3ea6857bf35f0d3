#include "paratts/msae.hpp"

#include "paratts/errors.hpp"

namespace paratts::msae {

using nn::Ctx;

namespace {

// Split a 2L-channel head into (mean, softplus std with floor).
LatentStatsVar split_stats(Var head, int latent, double sigma_floor,
                           hier::LevelId level) {
  LatentStatsVar s;
  s.mean = ag::slice_cols(head, 0, latent);
  s.std = ag::clamp_min(ag::softplus(ag::slice_cols(head, latent, latent)),
                        sigma_floor);
  s.level = level;
  s.source = StatsSource::posterior;
  return s;
}

}  // namespace

std::pair<HiddenSeq, LatentStatsVar> Msae::encode_frame_posterior(
    Ctx& c, Var spec, int bins) const {
  ag::Tape& t = c.tape();
  if (t.val(spec).cols() != bins)
    throw ShapeError("msae: expected " + std::to_string(bins) + " bins, got " +
                     std::to_string(t.val(spec).cols()));
  const int W = cfg_.hidden_width;
  Var x = ag::log_(ag::clamp_min(spec, dsp::kMelFloor));
  Var h = nn::conv1d(c, "gen/msae/l1/pre", x, bins, W, 1);
  for (int l = 0; l < cfg_.frame_enc_layers; ++l) {
    int dilation = 1 << (l % 4);
    Var gate = nn::conv1d(c, "gen/msae/l1/gated" + std::to_string(l), h, W,
                          2 * W, cfg_.frame_enc_kernel, dilation);
    Var act = ag::mul(ag::tanh_(ag::slice_cols(gate, 0, W)),
                      ag::sigmoid_(ag::slice_cols(gate, W, W)));
    h = ag::add(h, act);
  }
  Var head =
      nn::conv1d(c, "gen/msae/l1/head", h, W, 2 * cfg_.latent_width, 3);
  return {HiddenSeq{h, LevelId::L1_Frame},
          split_stats(head, cfg_.latent_width, cfg_.sigma_floor,
                      LevelId::L1_Frame)};
}

std::pair<HiddenSeq, LatentStatsVar> Msae::encode_level(
    Ctx& c, const HiddenSeq& h_finer, const Segmentation& seg) const {
  ag::Tape& t = c.tape();
  seg.validate();
  if (seg.total() != t.val(h_finer.h).rows())
    throw ShapeError("msae: segmentation totals " +
                     std::to_string(seg.total()) + " but hidden has " +
                     std::to_string(t.val(h_finer.h).rows()) + " rows");
  if (h_finer.level == LevelId::L5_Paragraph)
    throw ContractError("msae: no level above paragraph");
  auto next = static_cast<LevelId>(static_cast<int>(h_finer.level) + 1);
  const std::string prefix = "gen/msae/l" + std::to_string(static_cast<int>(next));
  const int W = cfg_.hidden_width;
  Var pooled = hier::attention_pool(c, prefix + "/pool", h_finer.h, seg, W);
  Var head = nn::conv1d(c, prefix + "/head", pooled, W, 2 * cfg_.latent_width, 3);
  return {HiddenSeq{pooled, next},
          split_stats(head, cfg_.latent_width, cfg_.sigma_floor, next)};
}

std::vector<LatentStatsVar> Msae::encode_all(
    Ctx& c, Var spec, int bins, const corpus::LevelSegs& segs,
    std::optional<Var> phoneme_text) const {
  ag::Tape& t = c.tape();
  if (t.val(spec).rows() != segs.frames_per_phoneme.total())
    throw ShapeError("msae: spectrogram frames do not match alignment total");
  auto [h1, s1] = encode_frame_posterior(c, spec, bins);
  std::vector<LatentStatsVar> stats{s1};

  HiddenSeq pool_in = h1;
  if (cfg_.text_in_msae && phoneme_text) {
    const int W = cfg_.hidden_width;
    Var txt = hier::length_regulate(*phoneme_text, segs.frames_per_phoneme);
    Var mixed = nn::linear(c, "gen/msae/txtmix",
                           ag::concat_cols({h1.h, txt}), 2 * W, W);
    pool_in = HiddenSeq{mixed, LevelId::L1_Frame};
  }

  auto [h2, s2] = encode_level(c, pool_in, segs.frames_per_phoneme);
  auto [h3, s3] = encode_level(c, h2, segs.phonemes_per_word);
  auto [h4, s4] = encode_level(c, h3, segs.words_per_sentence);
  auto [h5, s5] = encode_level(c, h4, segs.sentences_per_paragraph);
  stats.push_back(s2);
  stats.push_back(s3);
  stats.push_back(s4);
  stats.push_back(s5);
  return stats;
}

LatentSampleVar Msae::sample_latent(const LatentStatsVar& stats, Var noise) {
  ag::Tape& t = *stats.mean.tape;
  if (t.val(noise).rows() != t.val(stats.mean).rows() ||
      t.val(noise).cols() != t.val(stats.mean).cols())
    throw ShapeError("msae: noise shape does not match stats");
  return {ag::add(stats.mean, ag::mul(stats.std, noise)), stats.level};
}

}  // namespace paratts::msae
