#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "paratts/corpus.hpp"
#include "paratts/errors.hpp"
#include "paratts/mste.hpp"
#include "paratts/rng.hpp"

using namespace paratts;
using ag::Mat;

namespace {

corpus::Paragraph tiny_paragraph() {
  corpus::Paragraph p;
  p.id = "p0";
  p.sample_rate = 2000;
  corpus::WordUnit w1{{3}, {{1, 2}, {2, 3}}};
  corpus::WordUnit w2{{4, 5}, {{3, 4}}};
  corpus::WordUnit w3{{6}, {{4, 6}}};
  p.sentences = {{{w1, w2}}, {{w3}}};
  return p;
}

Mat random_mat(Rng& rng, int rows, int cols) {
  return Mat::NullaryExpr(rows, cols, [&] { return rng.normal(); });
}

std::vector<LatentSampleVar> posterior_like(ag::Tape& t, Rng& rng,
                                            const corpus::Paragraph& p, int L) {
  std::vector<int> lens{p.total_frames(), p.num_phonemes(), p.num_words(),
                        p.num_sentences(), 1};
  std::vector<LatentSampleVar> out;
  for (int i = 0; i < 5; ++i)
    out.push_back({t.constant(random_mat(rng, lens[i], L)),
                   static_cast<hier::LevelId>(i + 1)});
  return out;
}

}  // namespace

TEST_CASE("text features have per-level lengths and isolate the pathways") {
  ModelConfig cfg = ModelConfig::micro(20);
  mste::Mste enc(cfg);
  nn::ParamStore store;
  store.init_seed = 31;
  corpus::Paragraph p = tiny_paragraph();

  Mat phon, word;
  {
    ag::Tape t;
    nn::Ctx c(t, store);
    mste::TextFeaturesVar f = enc.embed_text(c, p);
    CHECK(t.val(f.phoneme_hidden).rows() == p.num_phonemes());
    CHECK(t.val(f.word_hidden).rows() == p.num_words());
    CHECK(t.val(f.sentence_hidden).rows() == p.num_sentences());
    CHECK(t.val(f.paragraph_hidden).rows() == 1);
    CHECK(t.val(f.phoneme_hidden).cols() == cfg.hidden_width);
    phon = t.val(f.phoneme_hidden);
    word = t.val(f.word_hidden);
  }
  {
    ag::Tape t;
    nn::Ctx c(t, store);
    mste::TextFeaturesVar f = enc.embed_text(c, p);
    CHECK((t.val(f.phoneme_hidden) - phon).cwiseAbs().maxCoeff() == 0.0);
  }

  // one changed subword id: word hiddens move, phoneme hiddens do not
  corpus::Paragraph q = tiny_paragraph();
  q.sentences[0].words[1].subword_ids[0] = 77;
  {
    ag::Tape t;
    nn::Ctx c(t, store);
    mste::TextFeaturesVar f = enc.embed_text(c, q);
    CHECK((t.val(f.phoneme_hidden) - phon).cwiseAbs().maxCoeff() == 0.0);
    CHECK((t.val(f.word_hidden) - word).cwiseAbs().maxCoeff() > 0.0);
  }

  corpus::Paragraph bad = tiny_paragraph();
  bad.sentences[0].words[0].phonemes[0].phoneme_id = cfg.phoneme_vocab;
  {
    ag::Tape t;
    nn::Ctx c(t, store);
    CHECK_THROWS_AS(enc.embed_text(c, bad), DomainError);
  }
}

TEST_CASE("one prior recursion step") {
  ModelConfig cfg = ModelConfig::micro(20);
  mste::Mste enc(cfg);
  nn::ParamStore store;
  store.init_seed = 5;
  Rng rng(2);
  ag::Tape t;
  nn::Ctx c(t, store);

  hier::HiddenSeq s_prev{t.constant(random_mat(rng, 1, cfg.hidden_width)),
                         hier::LevelId::L5_Paragraph};
  LatentSampleVar z_prev{t.constant(random_mat(rng, 1, cfg.latent_width)),
                         hier::LevelId::L5_Paragraph};
  hier::Segmentation seg;
  seg.child_counts = {3};
  Mat h_txt = random_mat(rng, 3, cfg.hidden_width);

  auto [s4, st4] = enc.prior_step(c, s_prev, z_prev, seg, t.constant(h_txt),
                                  hier::LevelId::L4_Sentence);
  CHECK(t.val(s4.h).rows() == 3);
  CHECK(t.val(st4.mean).rows() == 3);
  CHECK(t.val(st4.mean).cols() == cfg.latent_width);
  CHECK(t.val(st4.std).minCoeff() > 0.0);
  CHECK(st4.source == StatsSource::prior);
  CHECK(s4.level == hier::LevelId::L4_Sentence);

  // text conditioning is wired: zeroed h_txt changes the stats
  auto [s4z, st4z] = enc.prior_step(c, s_prev, z_prev, seg,
                                    t.constant(Mat::Zero(3, cfg.hidden_width)),
                                    hier::LevelId::L4_Sentence);
  CHECK((t.val(st4z.mean) - t.val(st4.mean)).cwiseAbs().maxCoeff() > 0.0);

  LatentSampleVar short_z{t.constant(random_mat(rng, 2, cfg.latent_width)),
                          hier::LevelId::L5_Paragraph};
  CHECK_THROWS_AS(enc.prior_step(c, s_prev, short_z, seg, std::nullopt,
                                 hier::LevelId::L4_Sentence),
                  ShapeError);
}

TEST_CASE("teacher-forced chain: shapes, order, and adjacency-only coupling") {
  ModelConfig cfg = ModelConfig::micro(20);
  mste::Mste enc(cfg);
  nn::ParamStore store;
  store.init_seed = 41;
  Rng rng(6);
  corpus::Paragraph p = tiny_paragraph();
  corpus::LevelSegs segs = corpus::derive_segs(p);

  ag::Tape t;
  nn::Ctx c(t, store);
  mste::TextFeaturesVar text = enc.embed_text(c, p);
  std::vector<LatentSampleVar> post = posterior_like(t, rng, p, cfg.latent_width);

  mste::PriorChainResult r = enc.run_prior_chain_teacher(c, text, segs, post);
  REQUIRE(r.stats.size() == 5);
  std::vector<int> want{1, p.num_sentences(), p.num_words(), p.num_phonemes(),
                        p.total_frames()};
  for (int i = 0; i < 5; ++i) {
    CHECK(t.val(r.stats[i].mean).rows() == want[i]);
    CHECK(static_cast<int>(r.stats[i].level) == 5 - i);
    CHECK(t.val(r.stats[i].std).minCoeff() > 0.0);
    CHECK(r.stats[i].source == StatsSource::prior);
  }
  CHECK(r.samples.empty());

  // perturbing z_L2 moves only the L1 prior (visit index 4); perturbing z_L1
  // moves nothing
  auto rerun = [&](int perturb_level) {
    std::vector<LatentSampleVar> mod = post;
    if (perturb_level >= 1) {
      int i = perturb_level - 1;
      mod[i].z = t.constant(t.val(post[i].z) * 3.0 +
                            Mat::Ones(t.val(post[i].z).rows(), cfg.latent_width));
    }
    return enc.run_prior_chain_teacher(c, text, segs, mod);
  };
  mste::PriorChainResult base = rerun(0), z1 = rerun(1), z2 = rerun(2);
  for (int i = 0; i < 5; ++i)
    CHECK((t.val(z1.stats[i].mean) - t.val(base.stats[i].mean))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  for (int i = 0; i < 4; ++i)
    CHECK((t.val(z2.stats[i].mean) - t.val(base.stats[i].mean))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  CHECK((t.val(z2.stats[4].mean) - t.val(base.stats[4].mean))
            .cwiseAbs()
            .maxCoeff() > 0.0);

  std::vector<LatentSampleVar> missing(post.begin(), post.begin() + 3);
  CHECK_THROWS_AS(enc.run_prior_chain_teacher(c, text, segs, missing),
                  ContractError);
}

TEST_CASE("free-running chain is seeded and collapses at temperature zero") {
  ModelConfig cfg = ModelConfig::micro(20);
  mste::Mste enc(cfg);
  nn::ParamStore store;
  store.init_seed = 51;
  corpus::Paragraph p = tiny_paragraph();
  corpus::LevelSegs segs = corpus::derive_segs(p);

  ag::Tape t;
  nn::Ctx c(t, store);
  mste::TextFeaturesVar text = enc.embed_text(c, p);

  Rng r1(123), r2(123), r3(124);
  mste::PriorChainResult a = enc.run_prior_chain_free(c, text, segs, 0.8, r1);
  mste::PriorChainResult b = enc.run_prior_chain_free(c, text, segs, 0.8, r2);
  mste::PriorChainResult d = enc.run_prior_chain_free(c, text, segs, 0.8, r3);
  REQUIRE(a.samples.size() == 5);
  bool same = true, diff = false;
  for (int i = 0; i < 5; ++i) {
    same = same &&
           (t.val(a.samples[i].z) - t.val(b.samples[i].z)).cwiseAbs().maxCoeff() == 0.0;
    diff = diff ||
           (t.val(a.samples[i].z) - t.val(d.samples[i].z)).cwiseAbs().maxCoeff() > 0.0;
  }
  CHECK(same);
  CHECK(diff);

  Rng r4(9);
  mste::PriorChainResult cold = enc.run_prior_chain_free(c, text, segs, 0.0, r4);
  for (int i = 0; i < 5; ++i)
    CHECK((t.val(cold.samples[i].z) - t.val(cold.stats[i].mean))
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("duration prediction and rounding policy") {
  ModelConfig cfg = ModelConfig::micro(20);
  mste::Mste enc(cfg);
  nn::ParamStore store;
  store.init_seed = 61;
  Rng rng(3);
  ag::Tape t;
  nn::Ctx c(t, store);
  Mat h = random_mat(rng, 4, cfg.hidden_width);
  ag::Var d = enc.predict_durations(c, t.constant(h));
  CHECK(t.val(d).rows() == 4);
  CHECK(t.val(d).cols() == 1);
  CHECK(t.val(d).allFinite());

  CHECK(mste::Mste::duration_frames_from_log(0.0) == 1);
  CHECK(mste::Mste::duration_frames_from_log(-5.0) == 1);
  CHECK(mste::Mste::duration_frames_from_log(std::log(2.5)) == 2);  // half-even
  CHECK(mste::Mste::duration_frames_from_log(std::log(3.5)) == 4);  // half-even
  CHECK(mste::Mste::duration_frames_from_log(std::log(7.0)) == 7);
}
