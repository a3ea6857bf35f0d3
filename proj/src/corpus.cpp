#include "paratts/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "paratts/errors.hpp"
#include "paratts/rng.hpp"
#include "paratts/wav.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace paratts::corpus {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

int WordUnit::duration_frames() const {
  int d = 0;
  for (const auto& p : phonemes) d += p.duration_frames;
  return d;
}

int SentenceUnit::duration_frames() const {
  int d = 0;
  for (const auto& w : words) d += w.duration_frames();
  return d;
}

int Paragraph::total_frames() const {
  int d = 0;
  for (const auto& s : sentences) d += s.duration_frames();
  return d;
}

int Paragraph::num_phonemes() const {
  int n = 0;
  for (const auto& s : sentences)
    for (const auto& w : s.words) n += static_cast<int>(w.phonemes.size());
  return n;
}

int Paragraph::num_words() const {
  int n = 0;
  for (const auto& s : sentences) n += static_cast<int>(s.words.size());
  return n;
}

double Paragraph::duration_seconds(int hop) const {
  return static_cast<double>(total_frames()) * hop / sample_rate;
}

void Paragraph::validate() const {
  if (sentences.empty())
    throw ValidationError("paragraph " + id + ": no sentences");
  for (const auto& s : sentences) {
    if (s.words.empty()) throw ValidationError("paragraph " + id + ": empty sentence");
    for (const auto& w : s.words) {
      if (w.subword_ids.empty())
        throw ValidationError("paragraph " + id + ": word without subwords");
      if (w.phonemes.empty())
        throw ValidationError("paragraph " + id + ": word without phonemes");
      for (int sw : w.subword_ids)
        if (sw < 0) throw ValidationError("paragraph " + id + ": negative subword id");
      for (const auto& p : w.phonemes) {
        if (p.duration_frames < 1)
          throw ValidationError("paragraph " + id + ": phoneme duration < 1");
        if (p.phoneme_id < 0)
          throw ValidationError("paragraph " + id + ": negative phoneme id");
      }
    }
  }
}

void CorpusConfig::validate() const {
  auto range_ok = [](int lo, int hi) { return lo >= 1 && hi >= lo; };
  if (n_paragraphs < 1) throw ConfigError("corpus: n_paragraphs < 1");
  if (!range_ok(min_sentences, max_sentences))
    throw ConfigError("corpus: bad sentence count range");
  if (!range_ok(min_words, max_words)) throw ConfigError("corpus: bad word count range");
  if (!range_ok(min_phonemes, max_phonemes))
    throw ConfigError("corpus: bad phoneme count range");
  if (!range_ok(min_subwords, max_subwords))
    throw ConfigError("corpus: bad subword count range");
  if (!range_ok(min_duration, max_duration))
    throw ConfigError("corpus: bad duration range");
  if (phoneme_vocab < 1 || subword_vocab < 1) throw ConfigError("corpus: empty vocab");
  auto prof = dsp::SpectrogramConfig::preset(dsp_profile);
  if (base_f0 <= 0 || base_f0 >= prof.sample_rate / 2.0)
    throw ConfigError("corpus: base_f0 outside (0, Nyquist)");
  if (max_paragraph_seconds <= 0) throw ConfigError("corpus: non-positive cap");
}

LevelDurations derive_level_durations(const Paragraph& p) {
  p.validate();
  LevelDurations out;
  int total = 0;
  for (const auto& s : p.sentences) {
    int sd = 0;
    for (const auto& w : s.words) {
      int wd = 0;
      for (const auto& ph : w.phonemes) {
        out.frames_per_phoneme.push_back(ph.duration_frames);
        wd += ph.duration_frames;
      }
      out.frames_per_word.push_back(wd);
      sd += wd;
    }
    out.frames_per_sentence.push_back(sd);
    total += sd;
  }
  out.frames_per_paragraph.push_back(total);
  return out;
}

LevelSegs derive_segs(const Paragraph& p) {
  LevelSegs segs;
  for (const auto& s : p.sentences) {
    for (const auto& w : s.words) {
      for (const auto& ph : w.phonemes)
        segs.frames_per_phoneme.child_counts.push_back(ph.duration_frames);
      segs.phonemes_per_word.child_counts.push_back(
          static_cast<int>(w.phonemes.size()));
    }
    segs.words_per_sentence.child_counts.push_back(
        static_cast<int>(s.words.size()));
  }
  segs.sentences_per_paragraph.child_counts.push_back(
      static_cast<int>(p.sentences.size()));
  return segs;
}

std::vector<double> render_waveform(const Paragraph& p, const CorpusConfig& cfg,
                                    const dsp::SpectrogramConfig& prof) {
  Rng rng(p.style_seed);

  // Paragraph-level style.
  double par_pitch = cfg.style_depth_paragraph * rng.normal();
  double par_amp = 0.5 * cfg.style_depth_paragraph * rng.normal();
  double base_weights[3] = {1.0, 0.5, 0.25};
  double timbre[3];
  for (double& tw : timbre) tw = std::exp(0.5 * cfg.style_depth_paragraph * rng.normal());

  // Per-frame log-pitch offset and log-amplitude, piecewise linear inside
  // each phoneme so every level leaves a measurable footprint.
  const int total_frames = p.total_frames();
  std::vector<double> log_pitch(total_frames), log_amp(total_frames);
  int f = 0;
  for (const auto& s : p.sentences) {
    double sent_pitch = cfg.style_depth_sentence * rng.normal();
    double sent_amp = 0.5 * cfg.style_depth_sentence * rng.normal();
    for (const auto& w : s.words) {
      double word_pitch = cfg.style_depth_word * rng.normal();
      double word_amp = 0.5 * cfg.style_depth_word * rng.normal();
      for (const auto& ph : w.phonemes) {
        double p0 = cfg.style_depth_phoneme * rng.normal();
        double p1 = cfg.style_depth_phoneme * rng.normal();
        double a0 = 0.5 * cfg.style_depth_phoneme * rng.normal();
        double a1 = 0.5 * cfg.style_depth_phoneme * rng.normal();
        int d = ph.duration_frames;
        for (int k = 0; k < d; ++k) {
          double u = d == 1 ? 0.0 : static_cast<double>(k) / (d - 1);
          log_pitch[f] = par_pitch + sent_pitch + word_pitch + p0 + (p1 - p0) * u;
          log_amp[f] = par_amp + sent_amp + word_amp + a0 + (a1 - a0) * u;
          ++f;
        }
      }
    }
  }

  const int n = total_frames * prof.hop;
  std::vector<double> wave(n);
  const double max_f0 = prof.sample_rate / 2.0 / 3.5;  // 3 harmonics + margin
  double phase = 0.0;
  double wsum = base_weights[0] * timbre[0] + base_weights[1] * timbre[1] +
                base_weights[2] * timbre[2];
  for (int i = 0; i < n; ++i) {
    // linear interpolation between frame centers
    double pos = (static_cast<double>(i) + 0.5) / prof.hop - 0.5;
    int f0i = std::clamp(static_cast<int>(std::floor(pos)), 0, total_frames - 1);
    int f1i = std::min(f0i + 1, total_frames - 1);
    double u = std::clamp(pos - f0i, 0.0, 1.0);
    double lp = log_pitch[f0i] + (log_pitch[f1i] - log_pitch[f0i]) * u;
    double la = log_amp[f0i] + (log_amp[f1i] - log_amp[f0i]) * u;
    double f0 = std::min(cfg.base_f0 * std::exp(lp), max_f0);
    double amp = 0.3 * std::exp(la);
    phase += 2.0 * kPi * f0 / prof.sample_rate;
    double s = 0.0;
    for (int h = 0; h < 3; ++h)
      s += base_weights[h] * timbre[h] * std::sin((h + 1) * phase);
    double x = amp * (s / wsum) + cfg.noise_level * amp * rng.normal();
    wave[i] = std::clamp(x, -1.0, 1.0);
  }
  return wave;
}

namespace {

Paragraph sample_structure(const CorpusConfig& cfg, int index, Rng& rng) {
  Paragraph p;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "para_%05d", index);
  p.id = buf;
  p.audio_path = std::string("wav/") + buf + ".wav";
  int ns = rng.uniform_int(cfg.min_sentences, cfg.max_sentences);
  for (int s = 0; s < ns; ++s) {
    SentenceUnit sent;
    int nw = rng.uniform_int(cfg.min_words, cfg.max_words);
    for (int w = 0; w < nw; ++w) {
      WordUnit word;
      int nsw = rng.uniform_int(cfg.min_subwords, cfg.max_subwords);
      for (int k = 0; k < nsw; ++k)
        word.subword_ids.push_back(rng.uniform_int(0, cfg.subword_vocab - 1));
      int np = rng.uniform_int(cfg.min_phonemes, cfg.max_phonemes);
      for (int k = 0; k < np; ++k)
        word.phonemes.push_back(
            PhonemeUnit{rng.uniform_int(0, cfg.phoneme_vocab - 1),
                        rng.uniform_int(cfg.min_duration, cfg.max_duration)});
      sent.words.push_back(std::move(word));
    }
    p.sentences.push_back(std::move(sent));
  }
  return p;
}

ordered_json paragraph_to_json(const Paragraph& p) {
  ordered_json j;
  j["id"] = p.id;
  j["audio_path"] = p.audio_path;
  j["sample_rate"] = p.sample_rate;
  ordered_json sentences = ordered_json::array();
  for (const auto& s : p.sentences) {
    ordered_json words = ordered_json::array();
    for (const auto& w : s.words) {
      ordered_json phonemes = ordered_json::array();
      for (const auto& ph : w.phonemes)
        phonemes.push_back({{"phoneme_id", ph.phoneme_id},
                            {"duration_frames", ph.duration_frames}});
      words.push_back(
          {{"subword_ids", w.subword_ids}, {"phonemes", phonemes}});
    }
    sentences.push_back({{"words", words}});
  }
  j["sentences"] = sentences;
  j["style_seed"] = p.style_seed;
  return j;
}

Paragraph paragraph_from_json(const ordered_json& j, int line_no) {
  auto fail = [line_no](const std::string& what) -> ParseError {
    return ParseError("manifest line " + std::to_string(line_no) + ": " + what);
  };
  Paragraph p;
  try {
    p.id = j.at("id").get<std::string>();
    p.audio_path = j.at("audio_path").get<std::string>();
    p.sample_rate = j.at("sample_rate").get<int>();
    p.style_seed = j.at("style_seed").get<uint64_t>();
    for (const auto& sj : j.at("sentences")) {
      SentenceUnit s;
      for (const auto& wj : sj.at("words")) {
        WordUnit w;
        w.subword_ids = wj.at("subword_ids").get<std::vector<int>>();
        for (const auto& pj : wj.at("phonemes"))
          w.phonemes.push_back(PhonemeUnit{pj.at("phoneme_id").get<int>(),
                                           pj.at("duration_frames").get<int>()});
        // optional redundant span; must agree with the phoneme sum
        if (wj.contains("duration_frames")) {
          int span = wj.at("duration_frames").get<int>();
          if (span != w.duration_frames())
            throw ValidationError(
                "paragraph " + p.id + ": word span " + std::to_string(span) +
                " != phoneme duration sum " +
                std::to_string(w.duration_frames()));
        }
        s.words.push_back(std::move(w));
      }
      p.sentences.push_back(std::move(s));
    }
  } catch (const ordered_json::exception& e) {
    throw fail(e.what());
  }
  p.validate();
  return p;
}

}  // namespace

void write_manifest(const std::vector<Paragraph>& paragraphs,
                    const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write manifest: " + path);
  for (const auto& p : paragraphs) os << paragraph_to_json(p).dump() << "\n";
  if (!os) throw IoError("manifest write failed: " + path);
}

std::vector<Paragraph> load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest: " + path);
  std::vector<Paragraph> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const ordered_json::exception& e) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    out.push_back(paragraph_from_json(j, line_no));
  }
  return out;
}

std::vector<Paragraph> generate_corpus(const CorpusConfig& cfg,
                                       const std::string& out_dir) {
  cfg.validate();
  auto prof = dsp::SpectrogramConfig::preset(cfg.dsp_profile);
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "wav", ec);
  if (ec) throw IoError("cannot create corpus directory: " + out_dir);

  std::vector<Paragraph> paragraphs;
  paragraphs.reserve(cfg.n_paragraphs);
  for (int i = 0; i < cfg.n_paragraphs; ++i) {
    // Per-paragraph seed: order- and parallelism-independent.
    uint64_t seed = mix_seed(cfg.master_seed, static_cast<uint64_t>(i));
    Rng rng(seed);
    Paragraph p;
    for (int attempt = 0;; ++attempt) {
      p = sample_structure(cfg, i, rng);
      double secs =
          static_cast<double>(p.total_frames()) * prof.hop / prof.sample_rate;
      if (secs <= cfg.max_paragraph_seconds) break;
      if (attempt > 1000)
        throw ConfigError("corpus: duration ranges cannot satisfy the " +
                          std::to_string(cfg.max_paragraph_seconds) +
                          " s paragraph cap");
    }
    p.sample_rate = prof.sample_rate;
    p.style_seed = rng.next_u64();
    std::vector<double> wave = render_waveform(p, cfg, prof);
    write_wav((fs::path(out_dir) / p.audio_path).string(), wave,
              prof.sample_rate);
    paragraphs.push_back(std::move(p));
  }
  write_manifest(paragraphs, (fs::path(out_dir) / "manifest.jsonl").string());
  return paragraphs;
}

std::vector<Paragraph> load_corpus(const std::string& dir) {
  return load_manifest((fs::path(dir) / "manifest.jsonl").string());
}

std::vector<double> load_wave(const std::string& corpus_dir,
                              const Paragraph& p) {
  WavData w = read_wav((fs::path(corpus_dir) / p.audio_path).string());
  if (w.sample_rate != p.sample_rate)
    throw ValidationError("paragraph " + p.id + ": wav sample rate " +
                          std::to_string(w.sample_rate) + " != manifest " +
                          std::to_string(p.sample_rate));
  return w.samples;
}

}  // namespace paratts::corpus
