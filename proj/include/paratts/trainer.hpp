#ifndef PARATTS_TRAINER_HPP_
#define PARATTS_TRAINER_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "paratts/checkpoint.hpp"
#include "paratts/corpus.hpp"
#include "paratts/kvconfig.hpp"
#include "paratts/losses.hpp"
#include "paratts/model_config.hpp"
#include "paratts/schedule.hpp"

namespace paratts::trainer {

struct OptimConfig {
  double lr_gen = 2e-4;
  double lr_disc = 2e-4;
  double beta1 = 0.8;
  double beta2 = 0.99;
  double weight_decay = 1e-4;  // decoupled
  double lr_decay_per_epoch = 0.999;
  double grad_clip = 5.0;  // global norm

  void validate() const;
};

struct TrainConfig {
  std::string corpus_dir;
  std::string dsp_profile = "desk";
  ModelConfig model;  // vocoder factors filled from the profile hop if empty
  schedule::StageConfig stages = schedule::StageConfig::desk_defaults();
  OptimConfig optim;
  double max_batch_seconds = 218.0;
  uint64_t seed = 0;
  long total_steps = 2000;
  long checkpoint_every = 500;
  long val_every = 100;
  int val_paragraphs = 2;  // held out from training, used for validation L_m
  bool deterministic = true;
  std::string schedule_mode = "staged";  // "constant" pins lambda_kl at 1

  void validate() const;
  static TrainConfig from_kv(kvconfig::KvConfig& kv);
  static TrainConfig from_file(const std::string& path);
};

// Greedy duration-capped batching over a seed-shuffled order. Returns indices
// into `paragraphs`; every index appears exactly once.
std::vector<std::vector<int>> pack_batches(
    const std::vector<corpus::Paragraph>& paragraphs, double max_batch_seconds,
    int hop, uint64_t seed);

// Precomputed per-paragraph training data.
struct ParagraphData {
  corpus::Paragraph p;
  corpus::LevelSegs segs;
  std::vector<double> wave;
  dsp::Spec spec;               // linear magnitude, frames x bins
  std::vector<double> logdur;   // per-phoneme natural-log frame counts
};

ParagraphData prepare_paragraph(const corpus::Paragraph& p,
                                const std::string& corpus_dir,
                                const dsp::SpectrogramConfig& prof);

// One generator forward with every active loss on the tape. Shared by the
// training loop and the finite-difference gradient checks.
struct GraphLosses {
  ag::Var total;
  std::array<ag::Var, 5> kl;  // L1..L5, unweighted
  ag::Var kl_combined;
  ag::Var d;
  std::optional<ag::Var> s2, g, s1, m;
  std::optional<ag::Mat> fake_wave;  // stage 3: vocoder output value
};

GraphLosses build_generator_graph(nn::Ctx& c, const ModelConfig& mcfg,
                                  const dsp::SpectrogramConfig& prof,
                                  const ParagraphData& pd, int stage,
                                  double lambda, uint64_t noise_seed);

// LSGAN discriminator objective with the fake wave detached.
ag::Var build_discriminator_graph(nn::Ctx& c, const ModelConfig& mcfg,
                                  const ag::Mat& real_wave,
                                  const ag::Mat& fake_wave);

class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);

  // Writes loss_log.jsonl, val_log.jsonl and checkpoints under out_dir.
  void run(const std::string& out_dir);

  const Checkpoint& checkpoint() const { return ck_; }

 private:
  losses::LossBreakdown train_step(long step);
  void disc_step(long step, const std::vector<ag::Mat>& fakes,
                 const std::vector<int>& batch, losses::LossBreakdown* out);
  double validation_mel_l1(long step);
  void adam_update(const std::map<std::string, ag::Mat>& grads,
                   const std::string& prefix, double lr, long* t);

  TrainConfig cfg_;
  dsp::SpectrogramConfig prof_;
  Checkpoint ck_;
  std::vector<ParagraphData> data_;       // training split
  std::vector<ParagraphData> val_data_;   // held-out split
  std::vector<std::vector<int>> batches_;
  size_t batch_cursor_ = 0;
};

struct SynthOptions {
  double temperature = 0.0;
  uint64_t seed = 0;
  std::string mode = "paragraph";  // or "sentence-concat"
  bool dump_latents = false;
};

struct SynthResult {
  std::vector<double> wave;
  std::vector<long> sentence_boundaries;  // sample index of each join
  std::string latents_json;               // filled when dump_latents
};

SynthResult synthesize_paragraph(const Checkpoint& ck,
                                 const corpus::Paragraph& text,
                                 const SynthOptions& opts);

// Writes <id>.wav and a <id>.json sidecar per manifest entry.
void synthesize_manifest(const Checkpoint& ck, const std::string& manifest_path,
                         const std::string& out_dir, const SynthOptions& opts);

}  // namespace paratts::trainer

#endif  // PARATTS_TRAINER_HPP_
