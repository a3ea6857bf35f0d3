#include "paratts/mste.hpp"

#include <cmath>

#include "paratts/errors.hpp"

namespace paratts::mste {

using nn::Ctx;

TextFeaturesVar Mste::embed_text(Ctx& c, const corpus::Paragraph& p) const {
  p.validate();
  const int W = cfg_.hidden_width;

  std::vector<int> phoneme_ids, subword_ids;
  Segmentation subwords_per_word, words_per_sentence, sentences_per_paragraph;
  for (const auto& s : p.sentences) {
    words_per_sentence.child_counts.push_back(static_cast<int>(s.words.size()));
    for (const auto& w : s.words) {
      subwords_per_word.child_counts.push_back(
          static_cast<int>(w.subword_ids.size()));
      for (int id : w.subword_ids) subword_ids.push_back(id);
      for (const auto& ph : w.phonemes) phoneme_ids.push_back(ph.phoneme_id);
    }
  }
  sentences_per_paragraph.child_counts.push_back(p.num_sentences());

  TextFeaturesVar out;
  out.phoneme_hidden =
      nn::embedding(c, "gen/mste/phon_emb", phoneme_ids, cfg_.phoneme_vocab, W);

  // Pseudo-subword embedder stands in for a pretrained one: fixed random
  // table, excluded from optimization.
  Var sub = nn::embedding_frozen(c, "gen/mste/subword_emb", subword_ids,
                                 cfg_.subword_vocab, W);
  Var x = nn::conv1d(c, "gen/mste/word_conv1", sub, W, W, 3);
  x = ag::leaky_relu(x, 0.0);
  x = nn::conv1d(c, "gen/mste/word_conv2", x, W, W, 3);
  out.word_hidden =
      hier::attention_pool(c, "gen/mste/word_pool", x, subwords_per_word, W);
  out.sentence_hidden = hier::attention_pool(c, "gen/mste/sent_pool",
                                             out.word_hidden,
                                             words_per_sentence, W);
  out.paragraph_hidden = hier::attention_pool(c, "gen/mste/para_pool",
                                              out.sentence_hidden,
                                              sentences_per_paragraph, W);
  return out;
}

std::pair<HiddenSeq, LatentStatsVar> Mste::prior_step(
    Ctx& c, const HiddenSeq& s_prev, const LatentSampleVar& z_prev,
    const Segmentation& seg_to_finer, std::optional<Var> h_txt,
    LevelId out_level) const {
  ag::Tape& t = c.tape();
  seg_to_finer.validate();
  const int W = cfg_.hidden_width;
  const int L = cfg_.latent_width;
  const int li = static_cast<int>(out_level);
  const std::string prefix = "gen/mste/l" + std::to_string(li);

  if (t.val(s_prev.h).rows() != t.val(z_prev.z).rows())
    throw ShapeError("mste: s_prev and z_prev length mismatch");
  if (t.val(s_prev.h).rows() != seg_to_finer.size())
    throw ShapeError("mste: segmentation does not cover coarse units");

  Var zin = nn::linear(c, prefix + "/zadapt", z_prev.z, L, W, /*bias=*/false);
  Var up = hier::length_regulate(ag::add(s_prev.h, zin), seg_to_finer);
  Var x = up;
  if (h_txt) {
    if (t.val(*h_txt).rows() != t.val(up).rows())
      throw ShapeError("mste: text hidden length mismatch");
    x = nn::linear(c, prefix + "/txtmix", ag::concat_cols({up, *h_txt}),
                   2 * W, W);
  }
  const int blocks = cfg_.prior_blocks[li - 1];
  for (int b = 0; b < blocks; ++b)
    x = nn::fft_block(c, prefix + "/blk" + std::to_string(b), x, W,
                      cfg_.fft_heads, cfg_.ffn_hidden, cfg_.ffn_kernel);
  Var head = nn::linear(c, prefix + "/head", x, W, W + 2 * L);

  LatentStatsVar stats;
  stats.mean = ag::slice_cols(head, W, L);
  stats.std = ag::clamp_min(ag::softplus(ag::slice_cols(head, W + L, L)),
                            cfg_.sigma_floor);
  stats.level = out_level;
  stats.source = StatsSource::prior;
  return {HiddenSeq{ag::slice_cols(head, 0, W), out_level}, stats};
}

namespace {

struct ChainLevel {
  LevelId level;
  const Segmentation* seg;
  std::optional<ag::Var> h_txt;
};

std::vector<ChainLevel> chain_plan(const TextFeaturesVar& text,
                                   const corpus::LevelSegs& segs,
                                   const Segmentation& para_seg) {
  return {
      {LevelId::L5_Paragraph, &para_seg, text.paragraph_hidden},
      {LevelId::L4_Sentence, &segs.sentences_per_paragraph,
       text.sentence_hidden},
      {LevelId::L3_Word, &segs.words_per_sentence, text.word_hidden},
      {LevelId::L2_Phoneme, &segs.phonemes_per_word, text.phoneme_hidden},
      {LevelId::L1_Frame, &segs.frames_per_phoneme, std::nullopt},
  };
}

}  // namespace

PriorChainResult Mste::run_prior_chain_teacher(
    Ctx& c, const TextFeaturesVar& text, const corpus::LevelSegs& segs,
    const std::vector<LatentSampleVar>& posterior_samples) const {
  if (posterior_samples.size() != 5)
    throw ContractError("mste: teacher-forced chain needs 5 posterior samples");
  ag::Tape& t = c.tape();
  const int W = cfg_.hidden_width;
  const int L = cfg_.latent_width;
  Segmentation para_seg;
  para_seg.child_counts = {1};

  PriorChainResult out;
  HiddenSeq s_prev{c.param("gen/mste/s0", 1, W, 1.0 / std::sqrt(W)),
                   LevelId::L5_Paragraph};
  LatentSampleVar z_prev{t.constant(ag::Mat::Zero(1, L)),
                         LevelId::L5_Paragraph};
  for (const auto& lv : chain_plan(text, segs, para_seg)) {
    auto [s_i, stats] = prior_step(c, s_prev, z_prev, *lv.seg, lv.h_txt,
                                   lv.level);
    out.stats.push_back(stats);
    s_prev = s_i;
    if (lv.level != LevelId::L1_Frame) {
      // posterior_samples is ordered L1..L5; the z feeding the next (finer)
      // step is the posterior sample at the level just produced.
      const auto& z = posterior_samples[static_cast<int>(lv.level) - 1];
      if (!z.z.valid() || z.level != lv.level)
        throw ContractError("mste: posterior sample missing for level " +
                            std::string(hier::level_name(lv.level)));
      z_prev = z;
    }
  }
  return out;
}

PriorChainResult Mste::run_prior_chain_free(Ctx& c, const TextFeaturesVar& text,
                                            const corpus::LevelSegs& segs,
                                            double temperature,
                                            Rng& rng) const {
  ag::Tape& t = c.tape();
  const int W = cfg_.hidden_width;
  const int L = cfg_.latent_width;
  Segmentation para_seg;
  para_seg.child_counts = {1};

  PriorChainResult out;
  HiddenSeq s_prev{c.param("gen/mste/s0", 1, W, 1.0 / std::sqrt(W)),
                   LevelId::L5_Paragraph};
  LatentSampleVar z_prev{t.constant(ag::Mat::Zero(1, L)),
                         LevelId::L5_Paragraph};
  for (const auto& lv : chain_plan(text, segs, para_seg)) {
    auto [s_i, stats] = prior_step(c, s_prev, z_prev, *lv.seg, lv.h_txt,
                                   lv.level);
    const auto& mean = t.val(stats.mean);
    ag::Mat noise(mean.rows(), mean.cols());
    for (int i = 0; i < noise.rows(); ++i)
      for (int j = 0; j < noise.cols(); ++j)
        noise(i, j) = temperature * rng.normal();
    LatentSampleVar z{
        ag::add(stats.mean, ag::mul(stats.std, t.constant(noise))), lv.level};
    out.stats.push_back(stats);
    out.samples.push_back(z);
    s_prev = s_i;
    z_prev = z;
  }
  return out;
}

Var Mste::predict_durations(Ctx& c, Var phoneme_hidden) const {
  const int W = cfg_.hidden_width;
  Var x = nn::conv1d(c, "gen/mste/dur/conv1", phoneme_hidden, W, W, 3);
  x = ag::leaky_relu(x, 0.0);
  x = nn::layer_norm(c, "gen/mste/dur/ln1", x, W);
  x = nn::conv1d(c, "gen/mste/dur/conv2", x, W, W, 3);
  x = ag::leaky_relu(x, 0.0);
  x = nn::layer_norm(c, "gen/mste/dur/ln2", x, W);
  return nn::linear(c, "gen/mste/dur/out", x, W, 1);
}

int Mste::duration_frames_from_log(double log_duration) {
  if (!std::isfinite(log_duration))
    throw DomainError("mste: non-finite log-duration");
  // nearbyint under the default rounding mode is round-half-to-even.
  double frames = std::nearbyint(std::exp(log_duration));
  return frames < 1.0 ? 1 : static_cast<int>(frames);
}

}  // namespace paratts::mste
