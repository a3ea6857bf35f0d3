#include "paratts/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "paratts/errors.hpp"

using ordered_json = nlohmann::ordered_json;

namespace paratts::trainer {

namespace {

constexpr char kMagic[4] = {'P', 'T', 'C', 'K'};

void put_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_i64(std::ostream& os, int64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_str(std::ostream& os, const std::string& s) {
  put_i64(os, static_cast<int64_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void put_mat(std::ostream& os, const ag::Mat& m) {
  put_i64(os, m.rows());
  put_i64(os, m.cols());
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * m.size()));
}
void put_mat_map(std::ostream& os, const std::map<std::string, ag::Mat>& mm) {
  put_i64(os, static_cast<int64_t>(mm.size()));
  for (const auto& [name, m] : mm) {
    put_str(os, name);
    put_mat(os, m);
  }
}

uint32_t get_u32(std::istream& is) {
  uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw LoadError("checkpoint: truncated file");
  return v;
}
int64_t get_i64(std::istream& is) {
  int64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw LoadError("checkpoint: truncated file");
  return v;
}
std::string get_str(std::istream& is) {
  int64_t n = get_i64(is);
  if (n < 0 || n > (1LL << 30)) throw LoadError("checkpoint: bad string size");
  std::string s(static_cast<size_t>(n), '\0');
  if (!is.read(s.data(), n)) throw LoadError("checkpoint: truncated string");
  return s;
}
ag::Mat get_mat(std::istream& is) {
  int64_t r = get_i64(is), c = get_i64(is);
  if (r < 0 || c < 0 || r * c > (1LL << 28))
    throw LoadError("checkpoint: bad tensor shape");
  ag::Mat m(r, c);
  if (!is.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(sizeof(double) * m.size())))
    throw LoadError("checkpoint: truncated tensor");
  return m;
}
std::map<std::string, ag::Mat> get_mat_map(std::istream& is) {
  int64_t n = get_i64(is);
  if (n < 0) throw LoadError("checkpoint: bad map size");
  std::map<std::string, ag::Mat> mm;
  for (int64_t i = 0; i < n; ++i) {
    std::string name = get_str(is);
    mm[name] = get_mat(is);
  }
  return mm;
}

ordered_json model_to_json(const ModelConfig& m) {
  ordered_json j;
  j["hidden_width"] = m.hidden_width;
  j["latent_width"] = m.latent_width;
  j["frame_enc_layers"] = m.frame_enc_layers;
  j["frame_enc_kernel"] = m.frame_enc_kernel;
  j["phoneme_vocab"] = m.phoneme_vocab;
  j["subword_vocab"] = m.subword_vocab;
  j["prior_blocks"] = m.prior_blocks;
  j["fft_heads"] = m.fft_heads;
  j["ffn_hidden"] = m.ffn_hidden;
  j["ffn_kernel"] = m.ffn_kernel;
  j["vocoder_factors"] = m.vocoder_factors;
  j["vocoder_channels"] = m.vocoder_channels;
  j["vocoder_noise_channels"] = m.vocoder_noise_channels;
  j["fusion"] = m.fusion;
  j["msd_enabled"] = m.msd_enabled;
  j["text_in_msae"] = m.text_in_msae;
  j["periods"] = m.periods;
  ordered_json res = ordered_json::array();
  for (const auto& r : m.resolutions)
    res.push_back({r.fft_size, r.hop, r.window});
  j["resolutions"] = res;
  j["sigma_floor"] = m.sigma_floor;
  return j;
}

ModelConfig model_from_json(const ordered_json& j) {
  ModelConfig m;
  m.hidden_width = j.at("hidden_width").get<int>();
  m.latent_width = j.at("latent_width").get<int>();
  m.frame_enc_layers = j.at("frame_enc_layers").get<int>();
  m.frame_enc_kernel = j.at("frame_enc_kernel").get<int>();
  m.phoneme_vocab = j.at("phoneme_vocab").get<int>();
  m.subword_vocab = j.at("subword_vocab").get<int>();
  m.prior_blocks = j.at("prior_blocks").get<std::array<int, 5>>();
  m.fft_heads = j.at("fft_heads").get<int>();
  m.ffn_hidden = j.at("ffn_hidden").get<int>();
  m.ffn_kernel = j.at("ffn_kernel").get<int>();
  m.vocoder_factors = j.at("vocoder_factors").get<std::vector<int>>();
  m.vocoder_channels = j.at("vocoder_channels").get<int>();
  m.vocoder_noise_channels = j.at("vocoder_noise_channels").get<int>();
  m.fusion = j.at("fusion").get<std::string>();
  m.msd_enabled = j.at("msd_enabled").get<bool>();
  m.text_in_msae = j.at("text_in_msae").get<bool>();
  m.periods = j.at("periods").get<std::vector<int>>();
  m.resolutions.clear();
  for (const auto& r : j.at("resolutions"))
    m.resolutions.push_back(
        {r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>()});
  m.sigma_floor = j.at("sigma_floor").get<double>();
  return m;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint: " + path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_i64(os, step);
  put_i64(os, epoch);

  ordered_json meta;
  meta["dsp_profile"] = dsp_profile;
  meta["model"] = model_to_json(model);
  meta["stages"] = {{"step_w", stages.step_w},
                    {"stage2_len", stages.stage2_len},
                    {"lambda_slope", stages.lambda_slope},
                    {"lambda_cap", stages.lambda_cap},
                    {"lambda_stage1", stages.lambda_stage1}};
  meta["adam_t_gen"] = adam_t_gen;
  meta["adam_t_disc"] = adam_t_disc;
  meta["lr_scale"] = lr_scale;
  meta["rng_state"] = rng_state;
  meta["init_seed"] = params.init_seed;
  put_str(os, meta.dump());

  put_mat_map(os, params.tensors);
  put_i64(os, static_cast<int64_t>(params.frozen.size()));
  for (const auto& name : params.frozen) put_str(os, name);
  put_mat_map(os, adam_m);
  put_mat_map(os, adam_v);
  if (!os) throw IoError("checkpoint write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("cannot open checkpoint: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw LoadError("checkpoint: bad magic in " + path);
  uint32_t version = get_u32(is);
  if (version != kVersion)
    throw LoadError("checkpoint: unsupported version " +
                    std::to_string(version));
  Checkpoint ck;
  ck.step = get_i64(is);
  ck.epoch = get_i64(is);

  ordered_json meta;
  try {
    meta = ordered_json::parse(get_str(is));
  } catch (const ordered_json::parse_error& e) {
    throw LoadError(std::string("checkpoint: bad metadata: ") + e.what());
  }
  ck.dsp_profile = meta.at("dsp_profile").get<std::string>();
  ck.model = model_from_json(meta.at("model"));
  const auto& st = meta.at("stages");
  ck.stages.step_w = st.at("step_w").get<long>();
  ck.stages.stage2_len = st.at("stage2_len").get<long>();
  ck.stages.lambda_slope = st.at("lambda_slope").get<double>();
  ck.stages.lambda_cap = st.at("lambda_cap").get<double>();
  ck.stages.lambda_stage1 = st.at("lambda_stage1").get<double>();
  ck.adam_t_gen = meta.at("adam_t_gen").get<long>();
  ck.adam_t_disc = meta.at("adam_t_disc").get<long>();
  ck.lr_scale = meta.at("lr_scale").get<double>();
  ck.rng_state = meta.at("rng_state").get<std::string>();
  ck.params.init_seed = meta.at("init_seed").get<uint64_t>();

  ck.params.tensors = get_mat_map(is);
  int64_t nfrozen = get_i64(is);
  for (int64_t i = 0; i < nfrozen; ++i) ck.params.frozen.insert(get_str(is));
  ck.adam_m = get_mat_map(is);
  ck.adam_v = get_mat_map(is);
  return ck;
}

}  // namespace paratts::trainer
