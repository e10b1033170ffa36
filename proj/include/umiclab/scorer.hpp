//
// Copyright 2026 The UMICLab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <Eigen/Dense>
#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "umiclab/corpus.hpp"
#include "umiclab/errors.hpp"
#include "umiclab/vocabulary.hpp"

namespace umiclab {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

class CheckpointError : public Error {
 public:
  using Error::Error;
};

struct ScorerConfig {
  int layers = 2;
  int hidden_dim = 128;
  int heads = 4;
  int ffn_dim = 256;
  int max_regions = 36;
  int max_tokens = 40;
  int feature_dim = 64;
  double layer_norm_eps = 1e-5;
  Vocabulary vocab;

  // Throws InvariantError when a field is out of range.
  void validate() const;
  nlohmann::json to_json() const;
  static ScorerConfig from_json(const nlohmann::json& j);
};

// Input sequence ready for the encoder: token ids, region rows
// [feature | box], and per-slot validity. Invalid slots are padding and are
// never attended to.
template <typename Scalar>
struct EncoderInput {
  std::vector<int> token_ids;
  Matrix<Scalar> regions;  // N x (d + 4)
  std::vector<char> region_valid;

  Index num_regions() const { return regions.rows(); }
  Index num_tokens() const { return static_cast<Index>(token_ids.size()); }
  Index length() const { return 1 + num_regions() + num_tokens(); }
};

template <typename Scalar>
struct Encoding {
  RowVector<Scalar> cls;
  Matrix<Scalar> sequence;  // (1 + N + T) x hidden: CLS, regions, tokens
};

// Named slice of the flat parameter vector, stored column-major.
struct TensorSlot {
  std::string name;
  Index offset = 0;
  Index rows = 0;
  Index cols = 0;
  Index size() const { return rows * cols; }
};

template <typename Scalar>
struct LayerCache;

template <typename Scalar>
struct ForwardCache;

// Cross-modal transformer encoder with a sigmoid scoring head.
//
// The sequence is [CLS, region_1..region_N, token_1..token_T]. Regions enter
// through one linear projection of [feature, box]; they carry no position
// embedding, so only their boxes distinguish them. Tokens get token,
// position and type embeddings. Each layer is post-norm multi-head
// self-attention followed by a GELU feed-forward block. The score is
// sigmoid(w . h_CLS + b).
//
// All parameters live in one flat vector, which is what the optimizer,
// checkpoints and gradient checks operate on.
template <typename Scalar>
class ScorerModel {
 public:
  using scalar_type = Scalar;

  ScorerModel() = default;
  // Zero-initialized parameters.
  explicit ScorerModel(ScorerConfig config);

  const ScorerConfig& config() const { return config_; }
  Index hidden_dim() const { return config_.hidden_dim; }

  Vector<Scalar>& parameters() { return params_; }
  const Vector<Scalar>& parameters() const { return params_; }
  Index num_parameters() const { return params_.size(); }
  const std::vector<TensorSlot>& slots() const { return slots_; }
  const TensorSlot& slot(const std::string& name) const;

  Eigen::Map<Matrix<Scalar>> tensor(const std::string& name);
  Eigen::Map<const Matrix<Scalar>> tensor(const std::string& name) const;

  // Number of leading parameters belonging to the embedding block plus the
  // first `layers` transformer layers (for freezing).
  Index prefix_size(int layers) const;

  // Truncates to max_regions / max_tokens with a warning. Appends
  // `pad_regions` zero regions and `pad_tokens` PAD tokens, all masked.
  EncoderInput<Scalar> make_input(const ImageFeatures& features, const Caption& caption,
                                  Index pad_regions = 0, Index pad_tokens = 0) const;

  Encoding<Scalar> encode(const ImageFeatures& features, const Caption& caption) const;
  Encoding<Scalar> encode(const EncoderInput<Scalar>& input) const;

  Scalar score(const ImageFeatures& features, const Caption& caption) const;
  Scalar score(const EncoderInput<Scalar>& input) const;

  // Forward pass retaining everything the backward pass needs.
  void forward(const EncoderInput<Scalar>& input, ForwardCache<Scalar>& cache) const;

  // Accumulates d(loss)/d(params) into `gradient` given d(loss)/d(logit).
  void backward(const ForwardCache<Scalar>& cache, Scalar dlogit,
                Vector<Scalar>& gradient) const;

  // Logit gradient helper: d(score)/d(params) accumulated into `gradient`.
  Scalar score_with_gradient(const EncoderInput<Scalar>& input, Vector<Scalar>& gradient) const;

 private:
  struct LayerSlots {
    Index query_w, query_b, key_w, key_b, value_w, value_b, out_w, out_b;
    Index attn_gamma, attn_beta;
    Index ffn_in_w, ffn_in_b, ffn_out_w, ffn_out_b;
    Index ffn_gamma, ffn_beta;
  };

  Index add_slot(const std::string& name, Index rows, Index cols);
  Eigen::Map<const Matrix<Scalar>> view(Index slot) const;
  Eigen::Map<Matrix<Scalar>> grad_view(Vector<Scalar>& gradient, Index slot) const;

  void layer_forward(const LayerSlots& s, const std::vector<char>& key_valid,
                     const Matrix<Scalar>& x, LayerCache<Scalar>& cache,
                     Matrix<Scalar>& out) const;
  Matrix<Scalar> layer_backward(const LayerSlots& s, const LayerCache<Scalar>& cache,
                                const Matrix<Scalar>& dout,
                                Vector<Scalar>& gradient) const;

  ScorerConfig config_;
  Vector<Scalar> params_;
  std::vector<TensorSlot> slots_;
  Index token_emb_ = 0, position_emb_ = 0, type_emb_ = 0;
  Index region_w_ = 0, region_b_ = 0, emb_gamma_ = 0, emb_beta_ = 0;
  std::vector<LayerSlots> layer_slots_;
  Index head_w_ = 0, head_b_ = 0;
};

template <typename Scalar>
struct LayerCache {
  Matrix<Scalar> input;
  Matrix<Scalar> query, key, value;
  std::vector<Matrix<Scalar>> probs;  // one L x L matrix per head
  Matrix<Scalar> context;
  Matrix<Scalar> attn_hat;  // normalized residual after attention
  Vector<Scalar> attn_inv_std;
  Matrix<Scalar> attn_out;
  Matrix<Scalar> ffn_pre;  // pre-activation
  Matrix<Scalar> ffn_act;
  Matrix<Scalar> ffn_hat;
  Vector<Scalar> ffn_inv_std;
};

template <typename Scalar>
struct ForwardCache {
  EncoderInput<Scalar> input;
  std::vector<char> key_valid;
  Matrix<Scalar> emb_hat;
  Vector<Scalar> emb_inv_std;
  std::vector<LayerCache<Scalar>> layers;
  Matrix<Scalar> output;
  Scalar logit{};
  Scalar score{};
};

// Anything that maps (image, caption) to a joint encoding and a score in
// (0, 1). The transformer scorer is one implementation; tests plug in
// others.
template <typename E>
concept CaptionScorer = requires(const E& e, const ImageFeatures& f, const Caption& c) {
  typename E::scalar_type;
  { e.encode(f, c) } -> std::same_as<Encoding<typename E::scalar_type>>;
  { e.score(f, c) } -> std::convertible_to<double>;
  { e.hidden_dim() } -> std::convertible_to<Index>;
};

// Deterministic under `seed`: dense weights ~ N(0, 1/fan_in), embeddings
// ~ N(0, 0.02^2), norms at identity, biases zero.
template <typename Scalar>
ScorerModel<Scalar> init_model(const ScorerConfig& config, std::uint64_t seed);

// Versioned binary container: "UMCK", u32 version, u32 config length,
// config JSON, u32 tensor count, then per tensor u16 name length, name,
// u32 rows, u32 cols, rows*cols f32 little-endian in row-major order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename Scalar>
void save_checkpoint(const ScorerModel<Scalar>& model, const std::string& path);

// Throws CheckpointError on bad magic, version mismatch, truncation or
// tensors that disagree with the stored config.
template <typename Scalar>
ScorerModel<Scalar> load_checkpoint(const std::string& path);

extern template class ScorerModel<float>;
extern template class ScorerModel<double>;

using Scorer = ScorerModel<float>;

}  // namespace umiclab
