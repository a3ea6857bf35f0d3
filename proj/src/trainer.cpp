#include "paratts/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "paratts/diffops.hpp"
#include "paratts/errors.hpp"
#include "paratts/msae.hpp"
#include "paratts/msd.hpp"
#include "paratts/mste.hpp"
#include "paratts/rng.hpp"
#include "paratts/wav.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace paratts::trainer {

void OptimConfig::validate() const {
  if (lr_gen <= 0 || lr_disc <= 0) throw ConfigError("optim: non-positive lr");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
    throw ConfigError("optim: betas must lie in [0, 1)");
  if (weight_decay < 0) throw ConfigError("optim: negative weight decay");
  if (lr_decay_per_epoch <= 0 || lr_decay_per_epoch > 1)
    throw ConfigError("optim: lr decay must lie in (0, 1]");
  if (grad_clip <= 0) throw ConfigError("optim: non-positive grad clip");
}

void TrainConfig::validate() const {
  if (corpus_dir.empty()) throw ConfigError("train: corpus_dir is required");
  if (total_steps <= 0) throw ConfigError("train: total_steps must be > 0");
  if (checkpoint_every <= 0 || val_every <= 0)
    throw ConfigError("train: non-positive cadence");
  if (val_paragraphs < 0) throw ConfigError("train: negative val_paragraphs");
  if (max_batch_seconds <= 0)
    throw ConfigError("train: non-positive max_batch_seconds");
  if (schedule_mode != "staged" && schedule_mode != "constant")
    throw ConfigError("train: schedule_mode must be 'staged' or 'constant'");
  stages.validate();
  optim.validate();
}

TrainConfig TrainConfig::from_kv(kvconfig::KvConfig& kv) {
  TrainConfig c;
  c.corpus_dir = kv.require_string("corpus_dir");
  c.dsp_profile = kv.get_string("dsp_profile", c.dsp_profile);
  c.max_batch_seconds = kv.get_double("max_batch_seconds", c.max_batch_seconds);
  c.seed = kv.get_u64("seed", c.seed);
  c.total_steps = kv.get_long("total_steps", c.total_steps);
  c.checkpoint_every = kv.get_long("checkpoint_every", c.checkpoint_every);
  c.val_every = kv.get_long("val_every", c.val_every);
  c.val_paragraphs = kv.get_int("val_paragraphs", c.val_paragraphs);
  c.deterministic = kv.get_bool("deterministic", c.deterministic);
  c.schedule_mode = kv.get_string("schedule_mode", c.schedule_mode);

  c.stages.step_w = kv.get_long("stages.step_w", c.stages.step_w);
  c.stages.stage2_len = kv.get_long("stages.stage2_len", c.stages.stage2_len);
  c.stages.lambda_slope =
      kv.get_double("stages.lambda_slope", c.stages.lambda_slope);
  c.stages.lambda_stage1 =
      kv.get_double("stages.lambda_stage1", c.stages.lambda_stage1);

  c.optim.lr_gen = kv.get_double("optim.lr_gen", c.optim.lr_gen);
  c.optim.lr_disc = kv.get_double("optim.lr_disc", c.optim.lr_disc);
  c.optim.beta1 = kv.get_double("optim.beta1", c.optim.beta1);
  c.optim.beta2 = kv.get_double("optim.beta2", c.optim.beta2);
  c.optim.weight_decay =
      kv.get_double("optim.weight_decay", c.optim.weight_decay);
  c.optim.lr_decay_per_epoch =
      kv.get_double("optim.lr_decay_per_epoch", c.optim.lr_decay_per_epoch);
  c.optim.grad_clip = kv.get_double("optim.grad_clip", c.optim.grad_clip);

  ModelConfig& m = c.model;
  m.hidden_width = kv.get_int("model.hidden_width", m.hidden_width);
  m.latent_width = kv.get_int("model.latent_width", m.latent_width);
  m.frame_enc_layers =
      kv.get_int("model.frame_enc_layers", m.frame_enc_layers);
  m.frame_enc_kernel =
      kv.get_int("model.frame_enc_kernel", m.frame_enc_kernel);
  m.phoneme_vocab = kv.get_int("model.phoneme_vocab", m.phoneme_vocab);
  m.subword_vocab = kv.get_int("model.subword_vocab", m.subword_vocab);
  m.fft_heads = kv.get_int("model.fft_heads", m.fft_heads);
  m.ffn_hidden = kv.get_int("model.ffn_hidden", m.ffn_hidden);
  m.ffn_kernel = kv.get_int("model.ffn_kernel", m.ffn_kernel);
  m.vocoder_channels =
      kv.get_int("model.vocoder_channels", m.vocoder_channels);
  m.vocoder_noise_channels =
      kv.get_int("model.vocoder_noise_channels", m.vocoder_noise_channels);
  m.fusion = kv.get_string("model.fusion", m.fusion);
  m.msd_enabled = kv.get_bool("model.msd_enabled", m.msd_enabled);
  m.text_in_msae = kv.get_bool("model.text_in_msae", m.text_in_msae);
  for (int i = 0; i < 5; ++i)
    m.prior_blocks[i] = kv.get_int(
        "model.prior_blocks_l" + std::to_string(i + 1), m.prior_blocks[i]);
  kv.finish();
  c.validate();
  return c;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
  kvconfig::KvConfig kv = kvconfig::KvConfig::from_file(path);
  return from_kv(kv);
}

std::vector<std::vector<int>> pack_batches(
    const std::vector<corpus::Paragraph>& paragraphs, double max_batch_seconds,
    int hop, uint64_t seed) {
  std::vector<int> order(paragraphs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_int(0, i)]);

  std::vector<std::vector<int>> batches;
  double acc = 0.0;
  for (int idx : order) {
    double secs = paragraphs[idx].duration_seconds(hop);
    if (secs > max_batch_seconds)
      throw DomainError("pack_batches: paragraph " + paragraphs[idx].id +
                        " (" + std::to_string(secs) +
                        " s) exceeds the batch cap");
    if (batches.empty() || acc + secs > max_batch_seconds) {
      batches.emplace_back();
      acc = 0.0;
    }
    batches.back().push_back(idx);
    acc += secs;
  }
  return batches;
}

ParagraphData prepare_paragraph(const corpus::Paragraph& p,
                                const std::string& corpus_dir,
                                const dsp::SpectrogramConfig& prof) {
  ParagraphData d;
  d.p = p;
  d.segs = corpus::derive_segs(p);
  d.wave = corpus::load_wave(corpus_dir, p);
  d.spec = dsp::stft_magnitude(d.wave, prof);
  for (const auto& s : p.sentences)
    for (const auto& w : s.words)
      for (const auto& ph : w.phonemes)
        d.logdur.push_back(std::log(static_cast<double>(ph.duration_frames)));
  if (d.spec.rows() != d.segs.frames_per_phoneme.total())
    throw ValidationError("paragraph " + p.id +
                          ": audio frames do not match alignment");
  return d;
}

namespace {

ag::Mat normal_mat(Rng& rng, long rows, long cols) {
  ag::Mat m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

ag::Var column_vector(ag::Tape& t, const std::vector<double>& v) {
  ag::Mat m(static_cast<long>(v.size()), 1);
  for (size_t i = 0; i < v.size(); ++i) m(static_cast<long>(i), 0) = v[i];
  return t.constant(m);
}

}  // namespace

GraphLosses build_generator_graph(nn::Ctx& c, const ModelConfig& mcfg,
                                  const dsp::SpectrogramConfig& prof,
                                  const ParagraphData& pd, int stage,
                                  double lambda, uint64_t noise_seed) {
  ag::Tape& t = c.tape();
  msae::Msae enc(mcfg);
  mste::Mste tex(mcfg);
  msd::Msd dec(mcfg);

  mste::TextFeaturesVar text = tex.embed_text(c, pd.p);
  ag::Var specv = t.constant(pd.spec);
  std::optional<ag::Var> txt_for_enc;
  if (mcfg.text_in_msae) txt_for_enc = text.phoneme_hidden;
  std::vector<LatentStatsVar> post =
      enc.encode_all(c, specv, prof.bins(), pd.segs, txt_for_enc);

  Rng noise_rng(mix_seed(noise_seed, 0x505));
  std::vector<LatentSampleVar> samples;
  for (const auto& st : post) {
    const ag::Mat& mean = t.val(st.mean);
    samples.push_back(msae::Msae::sample_latent(
        st, t.constant(normal_mat(noise_rng, mean.rows(), mean.cols()))));
  }

  mste::PriorChainResult prior =
      tex.run_prior_chain_teacher(c, text, pd.segs, samples);

  GraphLosses out;
  losses::KlWeights weights;
  ag::Var kl_sum = t.constant_scalar(0.0);
  for (int i = 0; i < 5; ++i) {
    // prior.stats runs L5..L1, post runs L1..L5
    out.kl[i] = diffops::gaussian_kl(post[i], prior.stats[4 - i]);
    kl_sum = ag::add(kl_sum, ag::scale(out.kl[i], weights.alpha[i]));
  }
  out.kl_combined = kl_sum;

  ag::Var pred_logdur = tex.predict_durations(c, text.phoneme_hidden);
  out.d = diffops::duration_l2(pred_logdur, column_vector(t, pd.logdur));

  hier::HiddenSeq h = dec.fuse_latents(c, samples, pd.segs);
  const int frames = pd.segs.frames_per_phoneme.total();

  if (stage == 1 || stage == 2) {
    ag::Var pred_spec = dec.project_linear(c, h.h, prof.bins());
    out.s2 = diffops::linear_spec_loss(pred_spec, specv);
    out.total = ag::add(
        ag::add(ag::scale(*out.s2, losses::kStage12CoeffS2),
                ag::scale(out.d, losses::kStage12CoeffD)),
        ag::scale(out.kl_combined, lambda));
    return out;
  }
  if (stage != 3) throw DomainError("build_generator_graph: bad stage");

  ag::Var vnoise =
      dec.make_vocoder_noise(t, frames, mix_seed(noise_seed, 0x70C));
  ag::Var wave_pred = dec.vocode(c, h.h, vnoise, prof.hop);
  ag::Mat wave_target(static_cast<long>(pd.wave.size()), 1);
  for (size_t i = 0; i < pd.wave.size(); ++i)
    wave_target(static_cast<long>(i), 0) = pd.wave[i];
  ag::Var wavev = t.constant(wave_target);

  out.s1 = diffops::multi_res_stft_loss(wavev, wave_pred, mcfg.resolutions);
  out.m = diffops::mel_l1(wave_pred, wavev, prof);

  std::vector<ag::Var> fake_scores = dec.discriminate(c, wave_pred);
  ag::Var l_g = t.constant_scalar(0.0);
  for (ag::Var f : fake_scores)
    l_g = ag::add(l_g, ag::mean(ag::square(ag::add_scalar(f, -1.0))));
  out.g = ag::scale(l_g, 1.0 / fake_scores.size());

  out.total = ag::add(
      ag::add(ag::add(ag::scale(*out.g, losses::kStage3CoeffG),
                      ag::scale(*out.s1, losses::kStage3CoeffS1)),
              ag::add(ag::scale(*out.m, losses::kStage3CoeffM),
                      ag::scale(out.kl_combined, lambda))),
      ag::scale(out.d, losses::kStage3CoeffD));
  out.fake_wave = t.val(wave_pred);
  return out;
}

ag::Var build_discriminator_graph(nn::Ctx& c, const ModelConfig& mcfg,
                                  const ag::Mat& real_wave,
                                  const ag::Mat& fake_wave) {
  ag::Mat real = real_wave, fake = fake_wave;
  msd::Msd::crop_to_min(real, fake);
  msd::Msd dec(mcfg);
  ag::Tape& t = c.tape();
  std::vector<ag::Var> sr = dec.discriminate(c, t.constant(real));
  std::vector<ag::Var> sf = dec.discriminate(c, t.constant(fake));
  return diffops::adversarial_losses(sr, sf).second;
}

Trainer::Trainer(const TrainConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  prof_ = dsp::SpectrogramConfig::preset(cfg_.dsp_profile);
  if (cfg_.model.vocoder_factors.empty())
    cfg_.model.vocoder_factors = ModelConfig::default_factors(prof_.hop);
  cfg_.model.validate(prof_.hop);

  std::vector<corpus::Paragraph> all = corpus::load_corpus(cfg_.corpus_dir);
  if (all.empty()) throw ValidationError("train: empty corpus");
  for (const auto& p : all) {
    if (p.duration_seconds(prof_.hop) > cfg_.max_batch_seconds)
      throw ValidationError("train: paragraph " + p.id +
                            " exceeds max_batch_seconds");
  }
  int n_val = std::min<int>(cfg_.val_paragraphs,
                            static_cast<int>(all.size()) - 1);
  int n_train = static_cast<int>(all.size()) - std::max(n_val, 0);
  for (int i = 0; i < static_cast<int>(all.size()); ++i) {
    ParagraphData d = prepare_paragraph(all[i], cfg_.corpus_dir, prof_);
    (i < n_train ? data_ : val_data_).push_back(std::move(d));
  }

  ck_.dsp_profile = cfg_.dsp_profile;
  ck_.model = cfg_.model;
  ck_.stages = cfg_.stages;
  ck_.params.init_seed = mix_seed(cfg_.seed, 0x9A9A);
  ck_.rng_state = Rng(cfg_.seed).state();
}

void Trainer::adam_update(const std::map<std::string, ag::Mat>& grads,
                          const std::string& prefix, double lr, long* t) {
  ++*t;
  const OptimConfig& o = cfg_.optim;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(*t));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(*t));
  for (const auto& [name, g] : grads) {
    if (name.rfind(prefix, 0) != 0) continue;
    ag::Mat& p = ck_.params.tensors.at(name);
    ag::Mat& m = ck_.adam_m
                     .try_emplace(name, ag::Mat::Zero(p.rows(), p.cols()))
                     .first->second;
    ag::Mat& v = ck_.adam_v
                     .try_emplace(name, ag::Mat::Zero(p.rows(), p.cols()))
                     .first->second;
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = (o.beta2 * v.array() + (1.0 - o.beta2) * g.array().square()).matrix();
    ag::Mat update =
        ((m.array() / bc1) / ((v.array() / bc2).sqrt() + 1e-8)).matrix();
    p -= lr * ck_.lr_scale * (update + o.weight_decay * p);
  }
}

namespace {

void check_finite(const char* name, double v, long step) {
  if (!std::isfinite(v))
    throw DomainError(std::string("training aborted: non-finite ") + name +
                      " at step " + std::to_string(step));
}

void clip_grads(std::map<std::string, ag::Mat>* grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, g] : *grads) sq += g.squaredNorm();
  double norm = std::sqrt(sq);
  if (norm > max_norm) {
    double s = max_norm / norm;
    for (auto& [_, g] : *grads) g *= s;
  }
}

}  // namespace

losses::LossBreakdown Trainer::train_step(long step) {
  if (batch_cursor_ >= batches_.size()) {
    if (!batches_.empty()) {
      ++ck_.epoch;
      ck_.lr_scale *= cfg_.optim.lr_decay_per_epoch;
    }
    std::vector<corpus::Paragraph> ps;
    for (const auto& d : data_) ps.push_back(d.p);
    batches_ = pack_batches(ps, cfg_.max_batch_seconds, prof_.hop,
                            mix_seed(cfg_.seed, static_cast<uint64_t>(ck_.epoch)));
    batch_cursor_ = 0;
  }
  const std::vector<int>& batch = batches_[batch_cursor_++];
  const int B = static_cast<int>(batch.size());

  const int stage = schedule::stage_of(step, cfg_.stages);
  const double lambda = cfg_.schedule_mode == "constant"
                            ? 1.0
                            : schedule::lambda_kl(step, cfg_.stages);

  losses::LossBreakdown log;
  log.step = step;
  log.stage = stage;
  log.lambda_kl = lambda;
  if (stage == 3) {
    log.l_g = 0.0;
    log.l_disc = 0.0;
    log.l_s1 = 0.0;
    log.l_m = 0.0;
  } else {
    log.l_s2 = 0.0;
  }

  std::map<std::string, ag::Mat> grads;
  std::vector<ag::Mat> fakes;
  for (int idx : batch) {
    ag::Tape t;
    nn::Ctx c(t, ck_.params);
    uint64_t noise_seed =
        mix_seed(mix_seed(cfg_.seed, static_cast<uint64_t>(step)),
                 static_cast<uint64_t>(idx));
    GraphLosses gl = build_generator_graph(c, cfg_.model, prof_, data_[idx],
                                           stage, lambda, noise_seed);
    const double inv = 1.0 / B;
    for (int i = 0; i < 5; ++i) {
      double v = t.val(gl.kl[i])(0, 0);
      check_finite("L_kl", v, step);
      log.l_kl_per_level[i] += v * inv;
    }
    log.l_kl += t.val(gl.kl_combined)(0, 0) * inv;
    double dv = t.val(gl.d)(0, 0);
    check_finite("L_d", dv, step);
    log.l_d += dv * inv;
    if (gl.s2) {
      double v = t.val(*gl.s2)(0, 0);
      check_finite("L_s2", v, step);
      *log.l_s2 += v * inv;
    }
    if (gl.g) {
      double v = t.val(*gl.g)(0, 0);
      check_finite("L_g", v, step);
      *log.l_g += v * inv;
    }
    if (gl.s1) {
      double v = t.val(*gl.s1)(0, 0);
      check_finite("L_s1", v, step);
      *log.l_s1 += v * inv;
    }
    if (gl.m) {
      double v = t.val(*gl.m)(0, 0);
      check_finite("L_m", v, step);
      *log.l_m += v * inv;
    }
    log.l_tot += t.val(gl.total)(0, 0) * inv;
    if (gl.fake_wave) fakes.push_back(std::move(*gl.fake_wave));

    t.backward(gl.total);
    for (const auto& [name, var] : c.bound()) {
      if (name.rfind("gen/", 0) != 0) continue;
      if (ck_.params.frozen.count(name)) continue;
      ag::Mat& g = t.grad(var);
      if (g.size() == 0) continue;
      auto it = grads.find(name);
      if (it == grads.end())
        grads[name] = g * inv;
      else
        it->second += g * inv;
    }
  }
  clip_grads(&grads, cfg_.optim.grad_clip);
  adam_update(grads, "gen/", cfg_.optim.lr_gen, &ck_.adam_t_gen);

  if (stage == 3) disc_step(step, fakes, batch, &log);
  return log;
}

void Trainer::disc_step(long step, const std::vector<ag::Mat>& fakes,
                        const std::vector<int>& batch,
                        losses::LossBreakdown* out) {
  const int B = static_cast<int>(batch.size());
  std::map<std::string, ag::Mat> grads;
  for (int bi = 0; bi < B; ++bi) {
    const ParagraphData& pd = data_[batch[bi]];
    ag::Mat real(static_cast<long>(pd.wave.size()), 1);
    for (size_t i = 0; i < pd.wave.size(); ++i)
      real(static_cast<long>(i), 0) = pd.wave[i];

    ag::Tape t;
    nn::Ctx c(t, ck_.params);
    ag::Var l_disc = build_discriminator_graph(c, cfg_.model, real, fakes[bi]);
    double v = t.val(l_disc)(0, 0);
    check_finite("L_disc", v, step);
    *out->l_disc += v / B;
    t.backward(l_disc);
    for (const auto& [name, var] : c.bound()) {
      if (name.rfind("disc/", 0) != 0) continue;
      ag::Mat& g = t.grad(var);
      if (g.size() == 0) continue;
      auto it = grads.find(name);
      if (it == grads.end())
        grads[name] = g / B;
      else
        it->second += g / B;
    }
  }
  clip_grads(&grads, cfg_.optim.grad_clip);
  adam_update(grads, "disc/", cfg_.optim.lr_disc, &ck_.adam_t_disc);
}

double Trainer::validation_mel_l1(long step) {
  const std::vector<ParagraphData>& pool =
      val_data_.empty() ? data_ : val_data_;
  double total = 0.0;
  int count = 0;
  for (const auto& pd : pool) {
    ag::Tape t;
    nn::Ctx c(t, ck_.params);
    mste::Mste tex(cfg_.model);
    msae::Msae enc(cfg_.model);
    msd::Msd dec(cfg_.model);
    mste::TextFeaturesVar text = tex.embed_text(c, pd.p);
    std::optional<ag::Var> txt_for_enc;
    if (cfg_.model.text_in_msae) txt_for_enc = text.phoneme_hidden;
    auto post = enc.encode_all(c, t.constant(pd.spec), prof_.bins(), pd.segs,
                               txt_for_enc);
    std::vector<LatentSampleVar> samples;
    for (const auto& st : post) {
      const ag::Mat& mean = t.val(st.mean);
      samples.push_back(msae::Msae::sample_latent(
          st, t.constant(ag::Mat::Zero(mean.rows(), mean.cols()))));
    }
    hier::HiddenSeq h = dec.fuse_latents(c, samples, pd.segs);
    ag::Var vnoise = dec.make_vocoder_noise(
        t, pd.segs.frames_per_phoneme.total(), mix_seed(cfg_.seed, 0xA11));
    ag::Var wave_pred = dec.vocode(c, h.h, vnoise, prof_.hop);
    const ag::Mat& w = t.val(wave_pred);
    std::vector<double> pred(w.data(), w.data() + w.size());
    total += losses::mel_l1(pred, pd.wave, prof_);
    ++count;
  }
  double v = count ? total / count : 0.0;
  check_finite("validation L_m", v, step);
  return v;
}

void Trainer::run(const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream loss_log(fs::path(out_dir) / "loss_log.jsonl");
  std::ofstream val_log(fs::path(out_dir) / "val_log.jsonl");
  if (!loss_log || !val_log) throw IoError("cannot write logs in " + out_dir);

  const long stage3_start = cfg_.stages.step_w + cfg_.stages.stage2_len;
  for (long step = 0; step < cfg_.total_steps; ++step) {
    losses::LossBreakdown lb = train_step(step);
    loss_log << lb.to_json_line() << "\n";

    const bool stage3 = lb.stage == 3;
    const bool early_stage3 = stage3 && step - stage3_start < 10;
    const bool cadence = (step + 1) % cfg_.val_every == 0;
    const bool last = step + 1 == cfg_.total_steps;
    if (stage3 && (early_stage3 || cadence || last)) {
      double vm = validation_mel_l1(step);
      ordered_json j;
      j["step"] = step;
      j["l_m"] = vm;
      val_log << j.dump() << "\n";
    }

    ck_.step = step + 1;
    if ((step + 1) % cfg_.checkpoint_every == 0 && !last)
      ck_.save((fs::path(out_dir) /
                ("ckpt_" + std::to_string(step + 1) + ".bin"))
                   .string());
  }
  ck_.save((fs::path(out_dir) / "ckpt_final.bin").string());
  loss_log.flush();
  val_log.flush();
  if (!loss_log || !val_log) throw IoError("log write failed in " + out_dir);
}

namespace {

struct ParagraphSynth {
  std::vector<double> wave;
  std::vector<int> frames_per_sentence;
  ordered_json latents;
};

ParagraphSynth synth_one(nn::ParamStore& params, const ModelConfig& mcfg,
                         const dsp::SpectrogramConfig& prof,
                         const corpus::Paragraph& p, double temperature,
                         uint64_t seed, bool dump_latents) {
  ag::Tape t;
  nn::Ctx c(t, params);
  mste::Mste tex(mcfg);
  msd::Msd dec(mcfg);

  mste::TextFeaturesVar text = tex.embed_text(c, p);
  ag::Var logdur = tex.predict_durations(c, text.phoneme_hidden);
  const ag::Mat& ld = t.val(logdur);

  corpus::LevelSegs segs = corpus::derive_segs(p);
  segs.frames_per_phoneme.child_counts.clear();
  for (long i = 0; i < ld.rows(); ++i)
    segs.frames_per_phoneme.child_counts.push_back(
        mste::Mste::duration_frames_from_log(ld(i, 0)));

  Rng rng(mix_seed(seed, 0x5EED));
  mste::PriorChainResult chain =
      tex.run_prior_chain_free(c, text, segs, temperature, rng);
  std::vector<LatentSampleVar> samples(chain.samples.rbegin(),
                                       chain.samples.rend());  // -> L1..L5
  hier::HiddenSeq h = dec.fuse_latents(c, samples, segs);
  const int frames = segs.frames_per_phoneme.total();
  ag::Var vnoise =
      dec.make_vocoder_noise(t, frames, mix_seed(seed, 0x401));
  ag::Var wavev = dec.vocode(c, h.h, vnoise, prof.hop);
  const ag::Mat& w = t.val(wavev);

  ParagraphSynth out;
  out.wave.assign(w.data(), w.data() + w.size());

  // predicted frames aggregated per sentence
  int pi = 0;
  for (const auto& s : p.sentences) {
    int f = 0;
    for (const auto& word : s.words)
      for (size_t k = 0; k < word.phonemes.size(); ++k)
        f += segs.frames_per_phoneme.child_counts[pi++];
    out.frames_per_sentence.push_back(f);
  }

  if (dump_latents) {
    ordered_json levels = ordered_json::array();
    for (const auto& st : chain.stats) {
      const ag::Mat& u = t.val(st.mean);
      const ag::Mat& sd = t.val(st.std);
      ordered_json lj;
      lj["level"] = hier::level_name(st.level);
      auto mat_to_json = [](const ag::Mat& m) {
        ordered_json rows = ordered_json::array();
        for (long i = 0; i < m.rows(); ++i) {
          ordered_json row = ordered_json::array();
          for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
          rows.push_back(row);
        }
        return rows;
      };
      lj["mean"] = mat_to_json(u);
      lj["std"] = mat_to_json(sd);
      levels.push_back(lj);
    }
    for (size_t i = 0; i < chain.samples.size(); ++i) {
      const ag::Mat& z = t.val(chain.samples[i].z);
      ordered_json rows = ordered_json::array();
      for (long r = 0; r < z.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (long j = 0; j < z.cols(); ++j) row.push_back(z(r, j));
        rows.push_back(row);
      }
      levels.at(i)["z"] = rows;
    }
    out.latents["levels"] = levels;
  }
  return out;
}

}  // namespace

SynthResult synthesize_paragraph(const Checkpoint& ck,
                                 const corpus::Paragraph& text,
                                 const SynthOptions& opts) {
  if (opts.mode != "paragraph" && opts.mode != "sentence-concat")
    throw ConfigError("synth: mode must be 'paragraph' or 'sentence-concat'");
  dsp::SpectrogramConfig prof = dsp::SpectrogramConfig::preset(ck.dsp_profile);
  nn::ParamStore params = ck.params;  // local copy; lazy creation is harmless

  SynthResult out;
  if (opts.mode == "paragraph") {
    ParagraphSynth ps = synth_one(params, ck.model, prof, text,
                                  opts.temperature, opts.seed,
                                  opts.dump_latents);
    out.wave = std::move(ps.wave);
    long pos = 0;
    for (size_t i = 0; i + 1 < ps.frames_per_sentence.size(); ++i) {
      pos += static_cast<long>(ps.frames_per_sentence[i]) * prof.hop;
      out.sentence_boundaries.push_back(pos);
    }
    if (opts.dump_latents) out.latents_json = ps.latents.dump();
    return out;
  }

  // sentence-concat: each sentence synthesized independently, then joined.
  for (size_t si = 0; si < text.sentences.size(); ++si) {
    corpus::Paragraph one;
    one.id = text.id + "_s" + std::to_string(si);
    one.audio_path = text.audio_path;
    one.sample_rate = text.sample_rate;
    one.style_seed = text.style_seed;
    one.sentences = {text.sentences[si]};
    ParagraphSynth ps =
        synth_one(params, ck.model, prof, one, opts.temperature,
                  mix_seed(opts.seed, si), false);
    out.wave.insert(out.wave.end(), ps.wave.begin(), ps.wave.end());
    if (si + 1 < text.sentences.size())
      out.sentence_boundaries.push_back(static_cast<long>(out.wave.size()));
  }
  return out;
}

void synthesize_manifest(const Checkpoint& ck, const std::string& manifest_path,
                         const std::string& out_dir, const SynthOptions& opts) {
  dsp::SpectrogramConfig prof = dsp::SpectrogramConfig::preset(ck.dsp_profile);
  std::vector<corpus::Paragraph> ps = corpus::load_manifest(manifest_path);
  fs::create_directories(out_dir);
  for (const auto& p : ps) {
    SynthResult r = synthesize_paragraph(ck, p, opts);
    write_wav((fs::path(out_dir) / (p.id + ".wav")).string(), r.wave,
              prof.sample_rate);
    ordered_json j;
    j["id"] = p.id;
    j["sample_rate"] = prof.sample_rate;
    j["mode"] = opts.mode;
    j["temperature"] = opts.temperature;
    j["seed"] = opts.seed;
    j["n_samples"] = r.wave.size();
    j["sentence_boundaries"] = r.sentence_boundaries;
    std::ofstream side(fs::path(out_dir) / (p.id + ".json"));
    if (!side) throw IoError("cannot write sidecar for " + p.id);
    side << j.dump(2) << "\n";
    if (opts.dump_latents) {
      std::ofstream lat(fs::path(out_dir) / (p.id + "_latents.json"));
      lat << r.latents_json << "\n";
    }
  }
}

}  // namespace paratts::trainer
