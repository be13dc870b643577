#include "skelssl/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "skelssl/io_util.hpp"
#include "skelssl/rng.hpp"

namespace skelssl {

std::vector<std::pair<std::string, Mat*>> ModelParams::entries() {
  std::vector<std::pair<std::string, Mat*>> out;
  out.reserve(45);
  enc_fwd.collect("enc.fwd", out);
  enc_bwd.collect("enc.bwd", out);
  decoder.collect("dec.gru", out);
  out.emplace_back("dec.out.w", &dec_w);
  out.emplace_back("dec.out.b", &dec_b);
  out.emplace_back("jig.w", &jig_w);
  out.emplace_back("jig.b", &jig_b);
  out.emplace_back("proj.w", &proj_w);
  out.emplace_back("proj.b", &proj_b);
  cls_gru.collect("cls.gru", out);
  out.emplace_back("cls.hidden.w", &cls_hidden_w);
  out.emplace_back("cls.hidden.b", &cls_hidden_b);
  out.emplace_back("cls.out.w", &cls_out_w);
  out.emplace_back("cls.out.b", &cls_out_b);
  out.emplace_back("probe.w", &probe_w);
  out.emplace_back("probe.b", &probe_b);
  return out;
}

std::vector<std::pair<std::string, const Mat*>> ModelParams::entries() const {
  auto mutable_entries = const_cast<ModelParams*>(this)->entries();
  std::vector<std::pair<std::string, const Mat*>> out;
  out.reserve(mutable_entries.size());
  for (auto& [name, mat] : mutable_entries) out.emplace_back(name, mat);
  return out;
}

namespace {

GRUParams gru_shapes(int input_dim, int hidden) {
  return GRUParams::zeros(input_dim, hidden);
}

// Skeleton of the full parameter set with correct shapes, all zeros.
ModelParams shaped_params(const ModelConfig& c) {
  ModelParams p;
  p.config = c;
  const int in = c.input_dim();
  const int feat = c.feature_dim();
  p.enc_fwd = gru_shapes(in, c.hidden);
  p.enc_bwd = gru_shapes(in, c.hidden);
  p.decoder = gru_shapes(in, feat);
  p.dec_w = Mat::Zero(feat, in);
  p.dec_b = Mat::Zero(1, in);
  p.jig_w = Mat::Zero(feat, c.jigsaw_classes);
  p.jig_b = Mat::Zero(1, c.jigsaw_classes);
  p.proj_w = Mat::Zero(feat, feat);
  p.proj_b = Mat::Zero(1, feat);
  p.cls_gru = gru_shapes(feat, feat);
  p.cls_hidden_w = Mat::Zero(feat, feat);
  p.cls_hidden_b = Mat::Zero(1, feat);
  p.cls_out_w = Mat::Zero(feat, c.num_classes);
  p.cls_out_b = Mat::Zero(1, c.num_classes);
  p.probe_w = Mat::Zero(feat, c.num_classes);
  p.probe_b = Mat::Zero(1, c.num_classes);
  return p;
}

bool is_bias(const std::string& name) {
  const auto dot = name.rfind('.');
  return dot != std::string::npos && name[dot + 1] == 'b';
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = shaped_params(config);
  std::mt19937_64 rng(mix_seed(seed, 0x696e6974ULL));  // "init"
  for (auto& [name, mat] : p.entries()) {
    if (is_bias(name)) continue;  // biases stay zero
    const double bound = std::sqrt(1.0 / static_cast<double>(mat->rows()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < mat->rows(); ++r) {
      for (Eigen::Index c = 0; c < mat->cols(); ++c) {
        (*mat)(r, c) = dist(rng);
      }
    }
  }
  return p;
}

BoundModel bind(Tape& tape, const ModelParams& params) {
  BoundModel m;
  m.config = &params.config;
  m.enc_fwd = bind(tape, params.enc_fwd);
  m.enc_bwd = bind(tape, params.enc_bwd);
  m.decoder = bind(tape, params.decoder);
  m.dec_w = tape.leaf(params.dec_w);
  m.dec_b = tape.leaf(params.dec_b);
  m.jig_w = tape.leaf(params.jig_w);
  m.jig_b = tape.leaf(params.jig_b);
  m.proj_w = tape.leaf(params.proj_w);
  m.proj_b = tape.leaf(params.proj_b);
  m.cls_gru = bind(tape, params.cls_gru);
  m.cls_hidden_w = tape.leaf(params.cls_hidden_w);
  m.cls_hidden_b = tape.leaf(params.cls_hidden_b);
  m.cls_out_w = tape.leaf(params.cls_out_w);
  m.cls_out_b = tape.leaf(params.cls_out_b);
  m.probe_w = tape.leaf(params.probe_w);
  m.probe_b = tape.leaf(params.probe_b);
  return m;
}

std::vector<DiffValue> BoundModel::entries() const {
  std::vector<DiffValue> out;
  out.reserve(45);
  auto gru = [&out](const GRUVars& v) {
    out.push_back(v.w_update);
    out.push_back(v.u_update);
    out.push_back(v.b_update);
    out.push_back(v.w_reset);
    out.push_back(v.u_reset);
    out.push_back(v.b_reset);
    out.push_back(v.w_cand);
    out.push_back(v.u_cand);
    out.push_back(v.b_cand);
  };
  gru(enc_fwd);
  gru(enc_bwd);
  gru(decoder);
  out.push_back(dec_w);
  out.push_back(dec_b);
  out.push_back(jig_w);
  out.push_back(jig_b);
  out.push_back(proj_w);
  out.push_back(proj_b);
  gru(cls_gru);
  out.push_back(cls_hidden_w);
  out.push_back(cls_hidden_b);
  out.push_back(cls_out_w);
  out.push_back(cls_out_b);
  out.push_back(probe_w);
  out.push_back(probe_b);
  return out;
}

namespace {

void check_input_width(const Mat& seq, const ModelConfig& c, const char* op) {
  if (seq.cols() != c.input_dim()) {
    throw DimensionError(std::string(op) + ": frame width " +
                         std::to_string(seq.cols()) + " does not match encoder input " +
                         std::to_string(c.input_dim()));
  }
  if (seq.rows() < 1) throw DimensionError(std::string(op) + ": empty sequence");
}

}  // namespace

EncodedSeq encode_seq(Tape& t, const Mat& seq, const BoundModel& m) {
  check_input_width(seq, *m.config, "encode");
  const int frames = static_cast<int>(seq.rows());
  const int hidden = m.config->hidden;

  DiffValue input = t.constant(seq);
  std::vector<DiffValue> fwd(static_cast<std::size_t>(frames));
  DiffValue h = t.constant(Mat::Zero(1, hidden));
  for (int i = 0; i < frames; ++i) {
    h = gru_cell(t, t.row(input, i), h, m.enc_fwd);
    fwd[static_cast<std::size_t>(i)] = h;
  }
  std::vector<DiffValue> bwd(static_cast<std::size_t>(frames));
  h = t.constant(Mat::Zero(1, hidden));
  for (int i = frames - 1; i >= 0; --i) {
    h = gru_cell(t, t.row(input, i), h, m.enc_bwd);
    bwd[static_cast<std::size_t>(i)] = h;
  }

  EncodedSeq out;
  out.frames.resize(static_cast<std::size_t>(frames));
  for (int i = 0; i < frames; ++i) {
    out.frames[static_cast<std::size_t>(i)] =
        t.concat_cols(fwd[static_cast<std::size_t>(i)], bwd[static_cast<std::size_t>(i)]);
  }
  out.pooled = t.mean_rows(t.concat_rows(out.frames));
  return out;
}

DiffValue predict_future(Tape& t, const Mat& noisy_prefix, int suffix_len,
                         const BoundModel& m) {
  check_input_width(noisy_prefix, *m.config, "predict_future");
  if (suffix_len < 1) throw DimensionError("predict_future: empty suffix");

  EncodedSeq enc = encode_seq(t, noisy_prefix, m);
  DiffValue h = enc.pooled;
  DiffValue x = t.constant(noisy_prefix.bottomRows(1));
  std::vector<DiffValue> predicted(static_cast<std::size_t>(suffix_len));
  for (int k = 0; k < suffix_len; ++k) {
    h = gru_cell(t, x, h, m.decoder);
    x = t.affine(h, m.dec_w, m.dec_b);
    predicted[static_cast<std::size_t>(k)] = x;
  }
  return t.concat_rows(predicted);
}

DiffValue jigsaw_logits(Tape& t, const Mat& seq, const BoundModel& m) {
  EncodedSeq enc = encode_seq(t, seq, m);
  return t.affine(enc.pooled, m.jig_w, m.jig_b);
}

DiffValue project(Tape& t, const Mat& seq, const BoundModel& m) {
  EncodedSeq enc = encode_seq(t, seq, m);
  return t.affine(enc.pooled, m.proj_w, m.proj_b);
}

DiffValue probe_logits(Tape& t, DiffValue pooled, const BoundModel& m) {
  return t.affine(pooled, m.probe_w, m.probe_b);
}

DiffValue classify(Tape& t, const Mat& seq, const BoundModel& m, ClassifyMode mode) {
  EncodedSeq enc = encode_seq(t, seq, m);
  if (mode == ClassifyMode::kLinearProbe) {
    return probe_logits(t, enc.pooled, m);
  }
  DiffValue h = t.constant(Mat::Zero(1, m.config->feature_dim()));
  for (const DiffValue& frame : enc.frames) {
    h = gru_cell(t, frame, h, m.cls_gru);
  }
  DiffValue hidden = t.tanh(t.affine(h, m.cls_hidden_w, m.cls_hidden_b));
  return t.affine(hidden, m.cls_out_w, m.cls_out_b);
}

// ---- inference path -------------------------------------------------------

EncodedValues encode_values(const Mat& seq, const ModelParams& p) {
  check_input_width(seq, p.config, "encode");
  const int frames = static_cast<int>(seq.rows());
  const int hidden = p.config.hidden;

  EncodedValues out;
  out.per_frame = Mat(frames, 2 * hidden);
  Mat h = Mat::Zero(1, hidden);
  for (int i = 0; i < frames; ++i) {
    h = gru_cell_values(seq.row(i), h, p.enc_fwd);
    out.per_frame.block(i, 0, 1, hidden) = h;
  }
  h = Mat::Zero(1, hidden);
  for (int i = frames - 1; i >= 0; --i) {
    h = gru_cell_values(seq.row(i), h, p.enc_bwd);
    out.per_frame.block(i, hidden, 1, hidden) = h;
  }
  out.pooled = out.per_frame.colwise().sum() * (1.0 / frames);
  return out;
}

namespace {

Mat affine_values(const Mat& x, const Mat& w, const Mat& b) {
  Mat out = x * w;
  out.rowwise() += b.row(0);
  return out;
}

}  // namespace

Mat predict_future_values(const Mat& noisy_prefix, int suffix_len, const ModelParams& p) {
  check_input_width(noisy_prefix, p.config, "predict_future");
  if (suffix_len < 1) throw DimensionError("predict_future: empty suffix");
  EncodedValues enc = encode_values(noisy_prefix, p);
  Mat h = enc.pooled;
  Mat x = noisy_prefix.bottomRows(1);
  Mat out(suffix_len, noisy_prefix.cols());
  for (int k = 0; k < suffix_len; ++k) {
    h = gru_cell_values(x, h, p.decoder);
    x = affine_values(h, p.dec_w, p.dec_b);
    out.row(k) = x.row(0);
  }
  return out;
}

Mat jigsaw_logits_values(const Mat& seq, const ModelParams& p) {
  return affine_values(encode_values(seq, p).pooled, p.jig_w, p.jig_b);
}

Mat project_values(const Mat& seq, const ModelParams& p) {
  return affine_values(encode_values(seq, p).pooled, p.proj_w, p.proj_b);
}

Mat probe_logits_values(const Mat& pooled, const ModelParams& p) {
  return affine_values(pooled, p.probe_w, p.probe_b);
}

Mat classify_values(const Mat& seq, const ModelParams& p, ClassifyMode mode) {
  EncodedValues enc = encode_values(seq, p);
  if (mode == ClassifyMode::kLinearProbe) {
    return probe_logits_values(enc.pooled, p);
  }
  Mat h = Mat::Zero(1, p.config.feature_dim());
  for (int i = 0; i < enc.per_frame.rows(); ++i) {
    h = gru_cell_values(enc.per_frame.row(i), h, p.cls_gru);
  }
  Mat hidden = affine_values(h, p.cls_hidden_w, p.cls_hidden_b).array().tanh().matrix();
  return affine_values(hidden, p.cls_out_w, p.cls_out_b);
}

// ---- checkpoints -----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'K', 'E', 'L', 'S', 'S', 'L', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t& at) {
  if (at + 4 > in.size()) throw DataError("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  at += 4;
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params) {
  std::string out;
  out.append(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.config.joints));
  put_u32(out, static_cast<std::uint32_t>(params.config.hidden));
  put_u32(out, static_cast<std::uint32_t>(params.config.segments));
  put_u32(out, static_cast<std::uint32_t>(params.config.jigsaw_classes));
  put_u32(out, static_cast<std::uint32_t>(params.config.num_classes));
  const auto entries = params.entries();
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, mat] : entries) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    put_u32(out, static_cast<std::uint32_t>(mat->rows()));
    put_u32(out, static_cast<std::uint32_t>(mat->cols()));
    for (Eigen::Index r = 0; r < mat->rows(); ++r) {
      for (Eigen::Index c = 0; c < mat->cols(); ++c) {
        const double v = (*mat)(r, c);
        char bytes[sizeof v];
        std::memcpy(bytes, &v, sizeof v);
        out.append(bytes, sizeof v);
      }
    }
  }
  atomic_write(path, out);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();

  std::size_t at = 0;
  if (data.size() < sizeof kMagic ||
      std::memcmp(data.data(), kMagic, sizeof kMagic) != 0) {
    throw DataError("checkpoint: bad magic in " + path);
  }
  at = sizeof kMagic;
  const std::uint32_t version = get_u32(data, at);
  if (version != kVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  ModelConfig config;
  config.joints = static_cast<int>(get_u32(data, at));
  config.hidden = static_cast<int>(get_u32(data, at));
  config.segments = static_cast<int>(get_u32(data, at));
  config.jigsaw_classes = static_cast<int>(get_u32(data, at));
  config.num_classes = static_cast<int>(get_u32(data, at));

  ModelParams params = shaped_params(config);
  auto entries = params.entries();
  const std::uint32_t count = get_u32(data, at);
  if (count != entries.size()) {
    throw DataError("checkpoint: expected " + std::to_string(entries.size()) +
                    " blocks, found " + std::to_string(count));
  }
  for (auto& [name, mat] : entries) {
    const std::uint32_t name_len = get_u32(data, at);
    if (at + name_len > data.size()) throw DataError("checkpoint: truncated file");
    const std::string block_name = data.substr(at, name_len);
    at += name_len;
    if (block_name != name) {
      throw DataError("checkpoint: expected block '" + name + "', found '" +
                      block_name + "'");
    }
    const std::uint32_t rows = get_u32(data, at);
    const std::uint32_t cols = get_u32(data, at);
    if (rows != static_cast<std::uint32_t>(mat->rows()) ||
        cols != static_cast<std::uint32_t>(mat->cols())) {
      throw DataError("checkpoint: block '" + name + "' is " + std::to_string(rows) +
                      "x" + std::to_string(cols) + ", expected " +
                      std::to_string(mat->rows()) + "x" + std::to_string(mat->cols()));
    }
    if (at + rows * cols * sizeof(double) > data.size()) {
      throw DataError("checkpoint: truncated file");
    }
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        double v;
        std::memcpy(&v, data.data() + at, sizeof v);
        at += sizeof v;
        (*mat)(r, c) = v;
      }
    }
  }
  if (at != data.size()) throw DataError("checkpoint: trailing bytes in " + path);
  return params;
}

}  // namespace skelssl
