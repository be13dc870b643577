#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "skelssl/gru.hpp"

namespace skelssl {

struct ModelConfig {
  int joints = 8;          // J; encoder input width is 3J
  int hidden = 30;         // H per direction; features are 2H wide
  int segments = 3;        // P for the temporal jigsaw head
  int jigsaw_classes = 6;  // P! (or 120 when the spatial variant is used)
  int num_classes = 4;

  int input_dim() const { return 3 * joints; }
  int feature_dim() const { return 2 * hidden; }
};

// Every weight in the system: the shared bidirectional encoder f, the three
// pretext heads (reconstruction h_m, jigsaw h_j, projection h_c), the action
// classifier C (GRU + MLP) and a separate linear-probe head.
struct ModelParams {
  ModelConfig config;

  GRUParams enc_fwd, enc_bwd;

  GRUParams decoder;   // h_m recurrence, hidden 2H, input 3J
  Mat dec_w, dec_b;    // h_m output projection 2H → 3J

  Mat jig_w, jig_b;    // h_j: 2H → jigsaw_classes
  Mat proj_w, proj_b;  // h_c: 2H → 2H

  GRUParams cls_gru;           // C recurrence, input 2H, hidden 2H
  Mat cls_hidden_w, cls_hidden_b;  // MLP hidden layer (tanh), 2H → 2H
  Mat cls_out_w, cls_out_b;        // 2H → num_classes

  Mat probe_w, probe_b;  // linear probe, 2H → num_classes

  // Canonical parameter enumeration; the optimizer, checkpoints and gradient
  // checks all rely on this order being stable.
  std::vector<std::pair<std::string, Mat*>> entries();
  std::vector<std::pair<std::string, const Mat*>> entries() const;
};

// Uniform(−a, a) with a = sqrt(1 / fan_in) per kernel, zero biases.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// All parameters bound to one tape for a training step.
struct BoundModel {
  const ModelConfig* config = nullptr;
  GRUVars enc_fwd, enc_bwd, decoder, cls_gru;
  DiffValue dec_w, dec_b, jig_w, jig_b, proj_w, proj_b;
  DiffValue cls_hidden_w, cls_hidden_b, cls_out_w, cls_out_b;
  DiffValue probe_w, probe_b;

  // Aligned with ModelParams::entries().
  std::vector<DiffValue> entries() const;
};

BoundModel bind(Tape& tape, const ModelParams& params);

struct EncodedSeq {
  std::vector<DiffValue> frames;  // one 1×2H feature per frame
  DiffValue pooled;               // temporal mean, 1×2H
};

// Bidirectional encoding: forward GRU over 1..T, backward GRU over T..1,
// features concatenated per frame as [fwd | bwd].
EncodedSeq encode_seq(Tape& tape, const Mat& seq, const BoundModel& m);

// Seq2Seq motion prediction. The encoder reads only the (noisy) prefix; the
// decoder GRU starts from the prefix-pooled feature, is seeded with the last
// prefix frame and feeds its own projected output back as the next input.
DiffValue predict_future(Tape& tape, const Mat& noisy_prefix, int suffix_len,
                         const BoundModel& m);

DiffValue jigsaw_logits(Tape& tape, const Mat& seq, const BoundModel& m);

// Contrastive feature z = h_c(pooled); no normalization here, the loss
// normalizes through the cosine similarity.
DiffValue project(Tape& tape, const Mat& seq, const BoundModel& m);

enum class ClassifyMode { kFull, kLinearProbe };

// Full mode runs the classifier GRU over the per-frame encoder features and
// an MLP on its final state; probe mode is a single affine on the pooled
// feature.
DiffValue classify(Tape& tape, const Mat& seq, const BoundModel& m, ClassifyMode mode);

// Probe logits from an already-computed pooled feature.
DiffValue probe_logits(Tape& tape, DiffValue pooled, const BoundModel& m);

// ---- Inference path (no tape). Must match the builders above exactly; the
// test suite pins the two paths together.

struct EncodedValues {
  Mat per_frame;  // T × 2H
  Mat pooled;     // 1 × 2H
};

EncodedValues encode_values(const Mat& seq, const ModelParams& p);
Mat predict_future_values(const Mat& noisy_prefix, int suffix_len, const ModelParams& p);
Mat jigsaw_logits_values(const Mat& seq, const ModelParams& p);
Mat project_values(const Mat& seq, const ModelParams& p);
Mat classify_values(const Mat& seq, const ModelParams& p, ClassifyMode mode);
Mat probe_logits_values(const Mat& pooled, const ModelParams& p);

// Binary checkpoint: versioned header with the model dimensions, then named
// blocks of row-major 64-bit little-endian values. Round-trips exactly.
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace skelssl
