#ifndef PARATTS_CORPUS_HPP_
#define PARATTS_CORPUS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "paratts/dsp.hpp"
#include "paratts/hier.hpp"

namespace paratts::corpus {

struct PhonemeUnit {
  int phoneme_id = 0;
  int duration_frames = 1;
};

struct WordUnit {
  std::vector<int> subword_ids;
  std::vector<PhonemeUnit> phonemes;
  int duration_frames() const;
};

struct SentenceUnit {
  std::vector<WordUnit> words;
  int duration_frames() const;
};

struct Paragraph {
  std::string id;
  std::vector<SentenceUnit> sentences;
  std::string audio_path;  // relative to the corpus directory
  int sample_rate = 0;
  uint64_t style_seed = 0;

  int total_frames() const;
  int num_phonemes() const;
  int num_words() const;
  int num_sentences() const { return static_cast<int>(sentences.size()); }
  double duration_seconds(int hop) const;
  void validate() const;
};

struct CorpusConfig {
  int n_paragraphs = 50;
  int min_sentences = 2, max_sentences = 3;
  int min_words = 1, max_words = 3;
  int min_phonemes = 2, max_phonemes = 3;
  int min_subwords = 1, max_subwords = 2;
  int min_duration = 3, max_duration = 6;  // frames per phoneme
  double base_f0 = 220.0;
  double style_depth_paragraph = 0.15;
  double style_depth_sentence = 0.12;
  double style_depth_word = 0.08;
  double style_depth_phoneme = 0.06;
  double noise_level = 0.01;
  double max_paragraph_seconds = 4.0;  // desk batching cap, not the paper's 218
  int phoneme_vocab = 64;
  int subword_vocab = 256;
  std::string dsp_profile = "desk";
  uint64_t master_seed = 0;

  void validate() const;
};

// Per-level duration tables derived from the alignment.
struct LevelDurations {
  std::vector<int> frames_per_phoneme;
  std::vector<int> frames_per_word;
  std::vector<int> frames_per_sentence;
  std::vector<int> frames_per_paragraph;  // single entry
};

// Adjacent-level segmentations for the towers.
struct LevelSegs {
  hier::Segmentation frames_per_phoneme;    // L2 -> L1
  hier::Segmentation phonemes_per_word;     // L3 -> L2
  hier::Segmentation words_per_sentence;    // L4 -> L3
  hier::Segmentation sentences_per_paragraph;  // L5 -> L4
};

LevelDurations derive_level_durations(const Paragraph& p);
LevelSegs derive_segs(const Paragraph& p);

// Deterministic synthetic waveform for one paragraph (harmonics + noise with
// per-level style contours). Exposed for tests.
std::vector<double> render_waveform(const Paragraph& p, const CorpusConfig& cfg,
                                    const dsp::SpectrogramConfig& prof);

// Samples structure + styles, renders audio, writes manifest.jsonl and
// wav/<id>.wav under out_dir. Returns the paragraphs written.
std::vector<Paragraph> generate_corpus(const CorpusConfig& cfg,
                                       const std::string& out_dir);

std::vector<Paragraph> load_manifest(const std::string& path);

// Convenience: load manifest.jsonl from a corpus directory and read a wave.
std::vector<Paragraph> load_corpus(const std::string& dir);
std::vector<double> load_wave(const std::string& corpus_dir, const Paragraph& p);

void write_manifest(const std::vector<Paragraph>& paragraphs,
                    const std::string& path);

}  // namespace paratts::corpus

#endif  // PARATTS_CORPUS_HPP_
