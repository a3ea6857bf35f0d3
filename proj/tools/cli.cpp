// Command-line surface: corpus generation, training, synthesis, evaluation,
// schedule inspection and KL diagnostics.
//
// Exit codes: 0 success, 1 invalid input (config/flags/validation),
// 2 runtime failure (shape/contract/domain/IO).

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "paratts/checkpoint.hpp"
#include "paratts/corpus.hpp"
#include "paratts/errors.hpp"
#include "paratts/evalkit.hpp"
#include "paratts/kvconfig.hpp"
#include "paratts/schedule.hpp"
#include "paratts/trainer.hpp"
#include "paratts/wav.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace paratts;

namespace {

void refuse_clobber(const fs::path& target, bool overwrite) {
  if (overwrite) return;
  if (fs::exists(target)) {
    if (fs::is_directory(target) && fs::is_empty(target)) return;
    throw ConfigError("refusing to overwrite " + target.string() +
                      " (pass --overwrite)");
  }
}

corpus::CorpusConfig corpus_config_from_file(const std::string& path) {
  kvconfig::KvConfig kv = kvconfig::KvConfig::from_file(path);
  corpus::CorpusConfig c;
  c.n_paragraphs = kv.get_int("n_paragraphs", c.n_paragraphs);
  c.min_sentences = kv.get_int("min_sentences", c.min_sentences);
  c.max_sentences = kv.get_int("max_sentences", c.max_sentences);
  c.min_words = kv.get_int("min_words", c.min_words);
  c.max_words = kv.get_int("max_words", c.max_words);
  c.min_phonemes = kv.get_int("min_phonemes", c.min_phonemes);
  c.max_phonemes = kv.get_int("max_phonemes", c.max_phonemes);
  c.min_subwords = kv.get_int("min_subwords", c.min_subwords);
  c.max_subwords = kv.get_int("max_subwords", c.max_subwords);
  c.min_duration = kv.get_int("min_duration", c.min_duration);
  c.max_duration = kv.get_int("max_duration", c.max_duration);
  c.base_f0 = kv.get_double("base_f0", c.base_f0);
  c.style_depth_paragraph =
      kv.get_double("style_depth_paragraph", c.style_depth_paragraph);
  c.style_depth_sentence =
      kv.get_double("style_depth_sentence", c.style_depth_sentence);
  c.style_depth_word = kv.get_double("style_depth_word", c.style_depth_word);
  c.style_depth_phoneme =
      kv.get_double("style_depth_phoneme", c.style_depth_phoneme);
  c.noise_level = kv.get_double("noise_level", c.noise_level);
  c.max_paragraph_seconds =
      kv.get_double("max_paragraph_seconds", c.max_paragraph_seconds);
  c.phoneme_vocab = kv.get_int("phoneme_vocab", c.phoneme_vocab);
  c.subword_vocab = kv.get_int("subword_vocab", c.subword_vocab);
  c.dsp_profile = kv.get_string("dsp_profile", c.dsp_profile);
  c.master_seed = kv.get_u64("master_seed", c.master_seed);
  kv.finish();
  c.validate();
  return c;
}

int cmd_gen_corpus(const std::string& config, const std::string& out,
                   bool overwrite, bool seed_set, uint64_t seed) {
  corpus::CorpusConfig cfg = corpus_config_from_file(config);
  if (seed_set) cfg.master_seed = seed;
  refuse_clobber(out, overwrite);
  fs::create_directories(out);
  auto ps = corpus::generate_corpus(cfg, out);
  std::cout << "wrote " << ps.size() << " paragraphs to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config, const std::string& out,
              bool overwrite, bool deterministic_flag, bool seed_set,
              uint64_t seed) {
  trainer::TrainConfig cfg = trainer::TrainConfig::from_file(config);
  if (deterministic_flag) cfg.deterministic = true;
  if (seed_set) cfg.seed = seed;
  refuse_clobber(fs::path(out) / "loss_log.jsonl", overwrite);
  trainer::Trainer tr(cfg);
  tr.run(out);
  std::cout << "trained " << cfg.total_steps << " steps; artifacts in " << out
            << "\n";
  return 0;
}

int cmd_synth(const std::string& ckpt_path, const std::string& manifest,
              const std::string& out, double temperature, uint64_t seed,
              const std::string& mode, bool dump_latents, bool overwrite) {
  trainer::Checkpoint ck = trainer::Checkpoint::load(ckpt_path);
  refuse_clobber(out, overwrite);
  trainer::SynthOptions opts;
  opts.temperature = temperature;
  opts.seed = seed;
  opts.mode = mode;
  opts.dump_latents = dump_latents;
  trainer::synthesize_manifest(ck, manifest, out, opts);
  std::cout << "synthesized to " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& ref_dir, const std::string& syn_dir,
             const std::string& report, const std::string& profile,
             bool overwrite) {
  refuse_clobber(report, overwrite);
  dsp::SpectrogramConfig prof = dsp::SpectrogramConfig::preset(profile);
  std::vector<corpus::Paragraph> ps = corpus::load_corpus(ref_dir);
  if (ps.empty()) throw ValidationError("eval: empty reference corpus");

  ordered_json rows = ordered_json::array();
  double sum_mcd = 0, sum_f0 = 0, sum_jump = 0;
  long n_jump_rows = 0;
  for (const auto& p : ps) {
    std::vector<double> ref = corpus::load_wave(ref_dir, p);
    fs::path syn_wav = fs::path(syn_dir) / (p.id + ".wav");
    if (!fs::exists(syn_wav))
      throw ValidationError("eval: missing synthesis for " + p.id);
    std::vector<double> syn = read_wav(syn_wav.string()).samples;

    double m = evalkit::mcd(ref, syn, prof);
    evalkit::F0RmseResult f0 = evalkit::log_f0_rmse(ref, syn, prof);

    std::vector<long> boundaries;
    fs::path sidecar = fs::path(syn_dir) / (p.id + ".json");
    if (fs::exists(sidecar)) {
      std::ifstream in(sidecar);
      ordered_json j = ordered_json::parse(in);
      // keep only boundaries with a full 50 ms window on each side
      const long w = std::lround(0.05 * prof.sample_rate);
      for (const auto& b : j.at("sentence_boundaries")) {
        long v = b.get<long>();
        if (v - w >= 0 && v + w <= static_cast<long>(syn.size()))
          boundaries.push_back(v);
      }
    }
    double mean_jump = 0.0;
    if (!boundaries.empty()) {
      auto stats = evalkit::boundary_continuity(syn, boundaries, prof);
      for (const auto& s : stats) mean_jump += s.rms_jump_db / stats.size();
      sum_jump += mean_jump;
      ++n_jump_rows;
    }

    ordered_json row;
    row["id"] = p.id;
    row["mcd"] = m;
    row["log_f0_rmse"] = f0.rmse;
    row["f0_warning"] = f0.no_voiced_overlap;
    row["n_boundaries"] = boundaries.size();
    row["mean_rms_jump"] = mean_jump;
    rows.push_back(row);
    sum_mcd += m;
    sum_f0 += f0.rmse;
  }

  ordered_json j;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", sum_mcd / ps.size());
  j["corpus_mean"] = {{"mcd", sum_mcd / ps.size()},
                      {"mcd_formatted", std::string(buf)},
                      {"log_f0_rmse", sum_f0 / ps.size()},
                      {"mean_rms_jump",
                       n_jump_rows ? sum_jump / n_jump_rows : 0.0}};
  j["paragraphs"] = rows;
  std::ofstream os(report);
  if (!os) throw IoError("cannot write report: " + report);
  os << j.dump(2) << "\n";
  std::cout << "report written to " << report << "\n";
  return 0;
}

int cmd_schedule_dump(const std::string& config, long steps) {
  schedule::StageConfig sc = schedule::StageConfig::desk_defaults();
  if (!config.empty()) {
    kvconfig::KvConfig kv = kvconfig::KvConfig::from_file(config);
    std::string preset = kv.get_string("preset", "desk");
    if (preset == "paper")
      sc = schedule::StageConfig::paper_defaults();
    else if (preset == "desk")
      sc = schedule::StageConfig::desk_defaults();
    else
      throw ConfigError("schedule-dump: unknown preset " + preset);
    sc.step_w = kv.get_long("stages.step_w", sc.step_w);
    sc.stage2_len = kv.get_long("stages.stage2_len", sc.stage2_len);
    sc.lambda_slope = kv.get_double("stages.lambda_slope", sc.lambda_slope);
    sc.lambda_stage1 = kv.get_double("stages.lambda_stage1", sc.lambda_stage1);
    kv.finish();
  }
  sc.validate();
  if (steps <= 0) throw ConfigError("schedule-dump: --steps must be > 0");
  for (long s = 0; s < steps; ++s)
    std::cout << s << "\t" << schedule::stage_of(s, sc) << "\t"
              << schedule::lambda_kl(s, sc) << "\n";
  return 0;
}

int cmd_kl_report(const std::string& ckpt_path, const std::string& corpus_dir) {
  trainer::Checkpoint ck = trainer::Checkpoint::load(ckpt_path);
  evalkit::KlReport r = evalkit::kl_report(ck, corpus_dir);
  const char* names[5] = {"frame", "phoneme", "word", "sentence", "paragraph"};
  for (int i = 0; i < 5; ++i)
    std::cout << names[i] << "\t" << r.kl[i] << "\t"
              << (r.collapsed[i] ? "collapsed" : "ok") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"paragraph-scale hierarchical speech synthesis toolkit"};
  app.require_subcommand(1);

  std::string config, out, ckpt, manifest, ref_dir, syn_dir, report;
  std::string mode = "paragraph", profile = "desk";
  double temperature = 0.0;
  uint64_t seed = 0;
  long steps = 0;
  bool overwrite = false, deterministic = false, dump_latents = false;

  auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
  gen->add_option("--config", config, "corpus config file")->required();
  gen->add_option("--out", out, "output directory")->required();
  gen->add_flag("--overwrite", overwrite);
  auto* gen_seed = gen->add_option("--seed", seed, "override master seed");

  auto* train = app.add_subcommand("train", "run the training loop");
  train->add_option("--config", config, "training config file")->required();
  train->add_option("--out", out, "output directory")->required();
  train->add_flag("--overwrite", overwrite);
  train->add_flag("--deterministic", deterministic);
  auto* train_seed = train->add_option("--seed", seed, "override seed");

  auto* synth = app.add_subcommand("synth", "synthesize from a manifest");
  synth->add_option("--ckpt", ckpt, "checkpoint file")->required();
  synth->add_option("--manifest", manifest, "text manifest")->required();
  synth->add_option("--out", out, "output directory")->required();
  synth->add_option("--temperature", temperature, "sampling temperature");
  synth->add_option("--seed", seed, "sampling seed");
  synth->add_option("--mode", mode, "paragraph | sentence-concat");
  synth->add_flag("--dump-latents", dump_latents);
  synth->add_flag("--overwrite", overwrite);

  auto* ev = app.add_subcommand("eval", "objective evaluation report");
  ev->add_option("--ref", ref_dir, "reference corpus directory")->required();
  ev->add_option("--syn", syn_dir, "synthesis directory")->required();
  ev->add_option("--report", report, "report path")->required();
  ev->add_option("--profile", profile, "dsp profile");
  ev->add_flag("--overwrite", overwrite);

  auto* sd = app.add_subcommand("schedule-dump", "print (step, stage, lambda)");
  sd->add_option("--config", config, "schedule config file");
  sd->add_option("--steps", steps, "number of steps")->required();

  auto* kr = app.add_subcommand("kl-report", "per-level KL diagnostics");
  kr->add_option("--ckpt", ckpt, "checkpoint file")->required();
  kr->add_option("--corpus", out, "corpus directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed())
      return cmd_gen_corpus(config, out, overwrite, gen_seed->count() > 0,
                            seed);
    if (train->parsed())
      return cmd_train(config, out, overwrite, deterministic,
                       train_seed->count() > 0, seed);
    if (synth->parsed())
      return cmd_synth(ckpt, manifest, out, temperature, seed, mode,
                       dump_latents, overwrite);
    if (ev->parsed()) return cmd_eval(ref_dir, syn_dir, report, profile,
                                      overwrite);
    if (sd->parsed()) return cmd_schedule_dump(config, steps);
    if (kr->parsed()) return cmd_kl_report(ckpt, out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
