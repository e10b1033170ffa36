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

#include "umiclab/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "umiclab/binary_io.hpp"
#include "umiclab/logging.hpp"
#include "umiclab/random.hpp"

namespace umiclab {

void ScorerConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw InvariantError(std::string("scorer config: ") + what);
  };
  require(layers >= 0, "layers must be >= 0");
  require(hidden_dim >= 1, "hidden_dim must be >= 1");
  require(heads >= 1, "heads must be >= 1");
  require(hidden_dim % heads == 0, "hidden_dim must be divisible by heads");
  require(ffn_dim >= 1, "ffn_dim must be >= 1");
  require(max_regions >= 1, "max_regions must be >= 1");
  require(max_tokens >= 1, "max_tokens must be >= 1");
  require(feature_dim >= 1, "feature_dim must be >= 1");
  require(layer_norm_eps > 0.0, "layer_norm_eps must be > 0");
  require(vocab.size() >= 3 && vocab.token(Vocabulary::kCls) == Vocabulary::kClsToken,
          "vocabulary must contain the CLS, PAD and UNK specials");
}

nlohmann::json ScorerConfig::to_json() const {
  return {{"layers", layers},           {"hidden_dim", hidden_dim},
          {"heads", heads},             {"ffn_dim", ffn_dim},
          {"max_regions", max_regions}, {"max_tokens", max_tokens},
          {"feature_dim", feature_dim}, {"layer_norm_eps", layer_norm_eps},
          {"vocab", vocab.to_json()}};
}

ScorerConfig ScorerConfig::from_json(const nlohmann::json& j) {
  ScorerConfig c;
  c.layers = j.value("layers", c.layers);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.heads = j.value("heads", c.heads);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.max_regions = j.value("max_regions", c.max_regions);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.layer_norm_eps = j.value("layer_norm_eps", c.layer_norm_eps);
  if (j.contains("vocab")) c.vocab = Vocabulary::from_json(j.at("vocab"));
  return c;
}

namespace {

constexpr int kTextType = 0;
constexpr int kImageType = 1;

template <typename Scalar>
Scalar stable_sigmoid(Scalar x) {
  Scalar s;
  if (x >= Scalar(0)) {
    s = Scalar(1) / (Scalar(1) + std::exp(-x));
  } else {
    const Scalar e = std::exp(x);
    s = e / (Scalar(1) + e);
  }
  // Keep the score strictly inside (0, 1) even when the logit saturates.
  const Scalar lo = std::numeric_limits<Scalar>::min();
  const Scalar hi = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / Scalar(2);
  return std::clamp(s, lo, hi);
}

// tanh approximation of GELU.
template <typename Scalar>
struct Gelu {
  static constexpr Scalar kC = Scalar(0.7978845608028654);  // sqrt(2/pi)
  static constexpr Scalar kA = Scalar(0.044715);
  static Scalar value(Scalar x) {
    return Scalar(0.5) * x * (Scalar(1) + std::tanh(kC * (x + kA * x * x * x)));
  }
  static Scalar derivative(Scalar x) {
    const Scalar t = std::tanh(kC * (x + kA * x * x * x));
    return Scalar(0.5) * (Scalar(1) + t) +
           Scalar(0.5) * x * (Scalar(1) - t * t) * kC * (Scalar(1) + Scalar(3) * kA * x * x);
  }
};

template <typename Scalar, typename GammaT, typename BetaT>
void layer_norm_forward(const Matrix<Scalar>& x, const GammaT& gamma, const BetaT& beta,
                        Scalar eps, Matrix<Scalar>& hat, Vector<Scalar>& inv_std,
                        Matrix<Scalar>& y) {
  const Index n = x.cols();
  hat.resize(x.rows(), n);
  inv_std.resize(x.rows());
  for (Index r = 0; r < x.rows(); ++r) {
    const Scalar mean = x.row(r).mean();
    const Scalar var = (x.row(r).array() - mean).square().sum() / Scalar(n);
    inv_std(r) = Scalar(1) / std::sqrt(var + eps);
    hat.row(r) = (x.row(r).array() - mean) * inv_std(r);
  }
  y = (hat.array().rowwise() * gamma.array()).rowwise() + beta.array();
}

template <typename Scalar, typename GammaT, typename DGammaT, typename DBetaT>
Matrix<Scalar> layer_norm_backward(const Matrix<Scalar>& dy, const Matrix<Scalar>& hat,
                                   const Vector<Scalar>& inv_std, const GammaT& gamma,
                                   DGammaT&& dgamma, DBetaT&& dbeta) {
  dgamma += (dy.array() * hat.array()).colwise().sum().matrix();
  dbeta += dy.colwise().sum();
  const Matrix<Scalar> dhat = dy.array().rowwise() * gamma.array();
  const Vector<Scalar> mean_dhat = dhat.rowwise().mean();
  const Vector<Scalar> mean_dhat_hat = (dhat.array() * hat.array()).rowwise().mean();
  Matrix<Scalar> dx = dhat;
  dx.colwise() -= mean_dhat;
  dx -= (hat.array().colwise() * mean_dhat_hat.array()).matrix();
  dx.array().colwise() *= inv_std.array();
  return dx;
}

}  // namespace

template <typename Scalar>
ScorerModel<Scalar>::ScorerModel(ScorerConfig config) : config_(std::move(config)) {
  config_.validate();
  const Index h = config_.hidden_dim;
  token_emb_ = add_slot("embed.token", config_.vocab.size(), h);
  position_emb_ = add_slot("embed.position", config_.max_tokens, h);
  type_emb_ = add_slot("embed.type", 2, h);
  region_w_ = add_slot("embed.region.weight", config_.feature_dim + 4, h);
  region_b_ = add_slot("embed.region.bias", 1, h);
  emb_gamma_ = add_slot("embed.norm.gamma", 1, h);
  emb_beta_ = add_slot("embed.norm.beta", 1, h);
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerSlots s{};
    s.query_w = add_slot(p + "attn.query.weight", h, h);
    s.query_b = add_slot(p + "attn.query.bias", 1, h);
    s.key_w = add_slot(p + "attn.key.weight", h, h);
    s.key_b = add_slot(p + "attn.key.bias", 1, h);
    s.value_w = add_slot(p + "attn.value.weight", h, h);
    s.value_b = add_slot(p + "attn.value.bias", 1, h);
    s.out_w = add_slot(p + "attn.output.weight", h, h);
    s.out_b = add_slot(p + "attn.output.bias", 1, h);
    s.attn_gamma = add_slot(p + "attn.norm.gamma", 1, h);
    s.attn_beta = add_slot(p + "attn.norm.beta", 1, h);
    s.ffn_in_w = add_slot(p + "ffn.in.weight", h, config_.ffn_dim);
    s.ffn_in_b = add_slot(p + "ffn.in.bias", 1, config_.ffn_dim);
    s.ffn_out_w = add_slot(p + "ffn.out.weight", config_.ffn_dim, h);
    s.ffn_out_b = add_slot(p + "ffn.out.bias", 1, h);
    s.ffn_gamma = add_slot(p + "ffn.norm.gamma", 1, h);
    s.ffn_beta = add_slot(p + "ffn.norm.beta", 1, h);
    layer_slots_.push_back(s);
  }
  head_w_ = add_slot("head.weight", h, 1);
  head_b_ = add_slot("head.bias", 1, 1);
  params_ = Vector<Scalar>::Zero(slots_.empty() ? 0 : slots_.back().offset + slots_.back().size());
}

template <typename Scalar>
Index ScorerModel<Scalar>::add_slot(const std::string& name, Index rows, Index cols) {
  const Index offset = slots_.empty() ? 0 : slots_.back().offset + slots_.back().size();
  slots_.push_back({name, offset, rows, cols});
  return static_cast<Index>(slots_.size()) - 1;
}

template <typename Scalar>
const TensorSlot& ScorerModel<Scalar>::slot(const std::string& name) const {
  for (const auto& s : slots_) {
    if (s.name == name) return s;
  }
  throw Error("no parameter tensor named '" + name + "'");
}

template <typename Scalar>
Eigen::Map<Matrix<Scalar>> ScorerModel<Scalar>::tensor(const std::string& name) {
  const auto& s = slot(name);
  return {params_.data() + s.offset, s.rows, s.cols};
}

template <typename Scalar>
Eigen::Map<const Matrix<Scalar>> ScorerModel<Scalar>::tensor(const std::string& name) const {
  const auto& s = slot(name);
  return {params_.data() + s.offset, s.rows, s.cols};
}

template <typename Scalar>
Eigen::Map<const Matrix<Scalar>> ScorerModel<Scalar>::view(Index slot) const {
  const auto& s = slots_[static_cast<std::size_t>(slot)];
  return {params_.data() + s.offset, s.rows, s.cols};
}

template <typename Scalar>
Eigen::Map<Matrix<Scalar>> ScorerModel<Scalar>::grad_view(Vector<Scalar>& gradient,
                                                          Index slot) const {
  const auto& s = slots_[static_cast<std::size_t>(slot)];
  return {gradient.data() + s.offset, s.rows, s.cols};
}

template <typename Scalar>
Index ScorerModel<Scalar>::prefix_size(int layers) const {
  if (layers >= config_.layers) return slots_[static_cast<std::size_t>(head_w_)].offset;
  if (layers < 0) return 0;
  return slots_[static_cast<std::size_t>(layer_slots_[static_cast<std::size_t>(layers)].query_w)]
      .offset;
}

template <typename Scalar>
EncoderInput<Scalar> ScorerModel<Scalar>::make_input(const ImageFeatures& features,
                                                     const Caption& caption, Index pad_regions,
                                                     Index pad_tokens) const {
  if (caption.tokens.empty()) {
    throw InvariantError("cannot encode empty caption '" + caption.caption_id + "'");
  }
  if (features.dim() != config_.feature_dim) {
    throw InvariantError("image '" + features.image_id + "' has feature dimension " +
                         std::to_string(features.dim()) + ", model expects " +
                         std::to_string(config_.feature_dim));
  }
  Index n = features.num_regions();
  if (n > config_.max_regions) {
    warn("truncate-regions", "image '" + features.image_id + "' has " + std::to_string(n) +
                                 " regions; keeping the first " +
                                 std::to_string(config_.max_regions));
    n = config_.max_regions;
  }
  auto t = static_cast<Index>(caption.tokens.size());
  if (t > config_.max_tokens) {
    warn("truncate-tokens", "caption '" + caption.caption_id + "' has " + std::to_string(t) +
                                " tokens; keeping the first " +
                                std::to_string(config_.max_tokens));
    t = config_.max_tokens;
  }

  EncoderInput<Scalar> input;
  const Index d = config_.feature_dim;
  input.regions = Matrix<Scalar>::Zero(n + pad_regions, d + 4);
  input.regions.topLeftCorner(n, d) = features.regions.topRows(n).template cast<Scalar>();
  input.regions.block(0, d, n, 4) = features.boxes.topRows(n).template cast<Scalar>();
  input.region_valid.assign(static_cast<std::size_t>(n + pad_regions), 0);
  std::fill_n(input.region_valid.begin(), n, 1);
  for (Index k = 0; k < t; ++k) {
    input.token_ids.push_back(config_.vocab.id(caption.tokens[static_cast<std::size_t>(k)]));
  }
  input.token_ids.insert(input.token_ids.end(), static_cast<std::size_t>(pad_tokens),
                         Vocabulary::kPad);
  return input;
}

template <typename Scalar>
void ScorerModel<Scalar>::layer_forward(const LayerSlots& s, const std::vector<char>& key_valid,
                                        const Matrix<Scalar>& x, LayerCache<Scalar>& c,
                                        Matrix<Scalar>& out) const {
  const Index len = x.rows();
  const Index h = config_.hidden_dim;
  const Index dh = h / config_.heads;
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(dh));

  c.input = x;
  c.query = (x * view(s.query_w)).rowwise() + view(s.query_b).row(0);
  c.key = (x * view(s.key_w)).rowwise() + view(s.key_b).row(0);
  c.value = (x * view(s.value_w)).rowwise() + view(s.value_b).row(0);
  c.context.resize(len, h);
  c.probs.resize(static_cast<std::size_t>(config_.heads));
  for (int head = 0; head < config_.heads; ++head) {
    Matrix<Scalar>& p = c.probs[static_cast<std::size_t>(head)];
    p.noalias() = c.query.middleCols(head * dh, dh) * c.key.middleCols(head * dh, dh).transpose();
    p *= scale;
    for (Index r = 0; r < len; ++r) {
      Scalar max = -std::numeric_limits<Scalar>::infinity();
      for (Index j = 0; j < len; ++j) {
        if (key_valid[static_cast<std::size_t>(j)]) max = std::max(max, p(r, j));
      }
      Scalar sum = 0;
      for (Index j = 0; j < len; ++j) {
        const Scalar e = key_valid[static_cast<std::size_t>(j)] ? std::exp(p(r, j) - max) : Scalar(0);
        p(r, j) = e;
        sum += e;
      }
      p.row(r) /= sum;
    }
    c.context.middleCols(head * dh, dh).noalias() = p * c.value.middleCols(head * dh, dh);
  }
  const Matrix<Scalar> residual =
      x + ((c.context * view(s.out_w)).rowwise() + view(s.out_b).row(0));
  const auto eps = static_cast<Scalar>(config_.layer_norm_eps);
  layer_norm_forward<Scalar>(residual, view(s.attn_gamma).row(0), view(s.attn_beta).row(0), eps,
                             c.attn_hat, c.attn_inv_std, c.attn_out);

  c.ffn_pre = (c.attn_out * view(s.ffn_in_w)).rowwise() + view(s.ffn_in_b).row(0);
  c.ffn_act = c.ffn_pre.unaryExpr([](Scalar v) { return Gelu<Scalar>::value(v); });
  const Matrix<Scalar> residual2 =
      c.attn_out + ((c.ffn_act * view(s.ffn_out_w)).rowwise() + view(s.ffn_out_b).row(0));
  layer_norm_forward<Scalar>(residual2, view(s.ffn_gamma).row(0), view(s.ffn_beta).row(0), eps,
                             c.ffn_hat, c.ffn_inv_std, out);
}

template <typename Scalar>
void ScorerModel<Scalar>::forward(const EncoderInput<Scalar>& input,
                                  ForwardCache<Scalar>& cache) const {
  const Index n = input.num_regions();
  const Index t = input.num_tokens();
  const Index len = input.length();
  const Index h = config_.hidden_dim;
  if (t < 1) throw InvariantError("cannot encode an empty caption");
  if (input.regions.cols() != config_.feature_dim + 4) {
    throw InvariantError("region inputs must have feature_dim + 4 columns");
  }

  cache.input = input;
  cache.key_valid.assign(static_cast<std::size_t>(len), 1);
  for (Index j = 0; j < n; ++j) {
    cache.key_valid[static_cast<std::size_t>(1 + j)] = input.region_valid[static_cast<std::size_t>(j)];
  }
  for (Index k = 0; k < t; ++k) {
    cache.key_valid[static_cast<std::size_t>(1 + n + k)] =
        input.token_ids[static_cast<std::size_t>(k)] != Vocabulary::kPad;
  }

  const auto tok = view(token_emb_);
  const auto pos = view(position_emb_);
  const auto type = view(type_emb_);
  Matrix<Scalar> emb(len, h);
  emb.row(0) = tok.row(Vocabulary::kCls) + type.row(kTextType);
  if (n > 0) {
    emb.middleRows(1, n) = (input.regions * view(region_w_)).rowwise() +
                           (view(region_b_).row(0) + type.row(kImageType));
  }
  for (Index k = 0; k < t; ++k) {
    const Index p = std::min<Index>(k, config_.max_tokens - 1);
    emb.row(1 + n + k) =
        tok.row(input.token_ids[static_cast<std::size_t>(k)]) + pos.row(p) + type.row(kTextType);
  }
  Matrix<Scalar> x;
  layer_norm_forward<Scalar>(emb, view(emb_gamma_).row(0), view(emb_beta_).row(0),
                             static_cast<Scalar>(config_.layer_norm_eps), cache.emb_hat,
                             cache.emb_inv_std, x);

  cache.layers.resize(layer_slots_.size());
  for (std::size_t l = 0; l < layer_slots_.size(); ++l) {
    Matrix<Scalar> next;
    layer_forward(layer_slots_[l], cache.key_valid, x, cache.layers[l], next);
    x = std::move(next);
  }
  cache.output = std::move(x);
  cache.logit = cache.output.row(0).dot(view(head_w_).col(0).transpose()) + view(head_b_)(0, 0);
  cache.score = stable_sigmoid(cache.logit);
}

template <typename Scalar>
Matrix<Scalar> ScorerModel<Scalar>::layer_backward(const LayerSlots& s,
                                                   const LayerCache<Scalar>& c,
                                                   const Matrix<Scalar>& dout,
                                                   Vector<Scalar>& g) const {
  // Masked attention probabilities are exactly zero, so no mask is needed.
  const Index h = config_.hidden_dim;
  const Index dh = h / config_.heads;
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(dh));

  // Feed-forward block.
  const Matrix<Scalar> dres2 = layer_norm_backward<Scalar>(
      dout, c.ffn_hat, c.ffn_inv_std, view(s.ffn_gamma).row(0), grad_view(g, s.ffn_gamma).row(0),
      grad_view(g, s.ffn_beta).row(0));
  grad_view(g, s.ffn_out_w).noalias() += c.ffn_act.transpose() * dres2;
  grad_view(g, s.ffn_out_b).row(0) += dres2.colwise().sum();
  Matrix<Scalar> dpre = dres2 * view(s.ffn_out_w).transpose();
  dpre.array() *= c.ffn_pre.unaryExpr([](Scalar v) { return Gelu<Scalar>::derivative(v); }).array();
  grad_view(g, s.ffn_in_w).noalias() += c.attn_out.transpose() * dpre;
  grad_view(g, s.ffn_in_b).row(0) += dpre.colwise().sum();
  Matrix<Scalar> dattn_out = dres2;
  dattn_out.noalias() += dpre * view(s.ffn_in_w).transpose();

  // Attention block.
  const Matrix<Scalar> dres1 = layer_norm_backward<Scalar>(
      dattn_out, c.attn_hat, c.attn_inv_std, view(s.attn_gamma).row(0),
      grad_view(g, s.attn_gamma).row(0), grad_view(g, s.attn_beta).row(0));
  grad_view(g, s.out_w).noalias() += c.context.transpose() * dres1;
  grad_view(g, s.out_b).row(0) += dres1.colwise().sum();
  const Matrix<Scalar> dcontext = dres1 * view(s.out_w).transpose();

  const Index len = c.input.rows();
  Matrix<Scalar> dq(len, h), dk(len, h), dv(len, h);
  for (int head = 0; head < config_.heads; ++head) {
    const Matrix<Scalar>& p = c.probs[static_cast<std::size_t>(head)];
    const auto dctx = dcontext.middleCols(head * dh, dh);
    const Matrix<Scalar> dp = dctx * c.value.middleCols(head * dh, dh).transpose();
    dv.middleCols(head * dh, dh).noalias() = p.transpose() * dctx;
    const Vector<Scalar> row_dot = (dp.array() * p.array()).rowwise().sum();
    Matrix<Scalar> ds = p.array() * (dp.array().colwise() - row_dot.array());
    ds *= scale;
    dq.middleCols(head * dh, dh).noalias() = ds * c.key.middleCols(head * dh, dh);
    dk.middleCols(head * dh, dh).noalias() = ds.transpose() * c.query.middleCols(head * dh, dh);
  }
  grad_view(g, s.query_w).noalias() += c.input.transpose() * dq;
  grad_view(g, s.query_b).row(0) += dq.colwise().sum();
  grad_view(g, s.key_w).noalias() += c.input.transpose() * dk;
  grad_view(g, s.key_b).row(0) += dk.colwise().sum();
  grad_view(g, s.value_w).noalias() += c.input.transpose() * dv;
  grad_view(g, s.value_b).row(0) += dv.colwise().sum();

  Matrix<Scalar> dx = dres1;
  dx.noalias() += dq * view(s.query_w).transpose();
  dx.noalias() += dk * view(s.key_w).transpose();
  dx.noalias() += dv * view(s.value_w).transpose();
  return dx;
}

template <typename Scalar>
void ScorerModel<Scalar>::backward(const ForwardCache<Scalar>& cache, Scalar dlogit,
                                   Vector<Scalar>& gradient) const {
  if (gradient.size() != params_.size()) gradient = Vector<Scalar>::Zero(params_.size());
  const Index h = config_.hidden_dim;
  const Index len = cache.output.rows();
  const Index n = cache.input.num_regions();
  const Index t = cache.input.num_tokens();

  grad_view(gradient, head_w_).col(0) += dlogit * cache.output.row(0).transpose();
  grad_view(gradient, head_b_)(0, 0) += dlogit;

  Matrix<Scalar> dx = Matrix<Scalar>::Zero(len, h);
  dx.row(0) = dlogit * view(head_w_).col(0).transpose();
  for (std::size_t l = layer_slots_.size(); l-- > 0;) {
    dx = layer_backward(layer_slots_[l], cache.layers[l], dx, gradient);
  }

  const Matrix<Scalar> demb = layer_norm_backward<Scalar>(
      dx, cache.emb_hat, cache.emb_inv_std, view(emb_gamma_).row(0),
      grad_view(gradient, emb_gamma_).row(0), grad_view(gradient, emb_beta_).row(0));

  auto dtok = grad_view(gradient, token_emb_);
  auto dpos = grad_view(gradient, position_emb_);
  auto dtype = grad_view(gradient, type_emb_);
  dtok.row(Vocabulary::kCls) += demb.row(0);
  dtype.row(kTextType) += demb.row(0);
  if (n > 0) {
    const auto dregions = demb.middleRows(1, n);
    grad_view(gradient, region_w_).noalias() += cache.input.regions.transpose() * dregions;
    const RowVector<Scalar> col_sum = dregions.colwise().sum();
    grad_view(gradient, region_b_).row(0) += col_sum;
    dtype.row(kImageType) += col_sum;
  }
  for (Index k = 0; k < t; ++k) {
    const auto row = demb.row(1 + n + k);
    dtok.row(cache.input.token_ids[static_cast<std::size_t>(k)]) += row;
    dpos.row(std::min<Index>(k, config_.max_tokens - 1)) += row;
    dtype.row(kTextType) += row;
  }
}

template <typename Scalar>
Encoding<Scalar> ScorerModel<Scalar>::encode(const EncoderInput<Scalar>& input) const {
  ForwardCache<Scalar> cache;
  forward(input, cache);
  return {cache.output.row(0), std::move(cache.output)};
}

template <typename Scalar>
Encoding<Scalar> ScorerModel<Scalar>::encode(const ImageFeatures& features,
                                             const Caption& caption) const {
  return encode(make_input(features, caption));
}

template <typename Scalar>
Scalar ScorerModel<Scalar>::score(const EncoderInput<Scalar>& input) const {
  ForwardCache<Scalar> cache;
  forward(input, cache);
  return cache.score;
}

template <typename Scalar>
Scalar ScorerModel<Scalar>::score(const ImageFeatures& features, const Caption& caption) const {
  return score(make_input(features, caption));
}

template <typename Scalar>
Scalar ScorerModel<Scalar>::score_with_gradient(const EncoderInput<Scalar>& input,
                                                Vector<Scalar>& gradient) const {
  ForwardCache<Scalar> cache;
  forward(input, cache);
  backward(cache, cache.score * (Scalar(1) - cache.score), gradient);
  return cache.score;
}

template <typename Scalar>
ScorerModel<Scalar> init_model(const ScorerConfig& config, std::uint64_t seed) {
  ScorerModel<Scalar> model(config);
  Rng rng = make_rng(seed, "scorer.init");
  for (const auto& s : model.slots()) {
    auto t = model.tensor(s.name);
    const bool is_norm_gamma = s.name.ends_with(".gamma");
    const bool is_bias = s.name.ends_with(".bias") || s.name.ends_with(".beta");
    const bool is_embedding = s.name == "embed.token" || s.name == "embed.position" ||
                              s.name == "embed.type";
    if (is_norm_gamma) {
      t.setOnes();
    } else if (is_bias) {
      t.setZero();
    } else {
      const double stddev = is_embedding ? 0.02 : 1.0 / std::sqrt(static_cast<double>(s.rows));
      std::normal_distribution<double> normal(0.0, stddev);
      // Column-major fill keeps the draw order independent of Scalar.
      for (Index k = 0; k < t.size(); ++k) t.data()[k] = static_cast<Scalar>(normal(rng));
    }
  }
  return model;
}

template <typename Scalar>
void save_checkpoint(const ScorerModel<Scalar>& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  binary::write_bytes(out, "UMCK");
  binary::write_u32(out, kCheckpointVersion);
  const std::string config = model.config().to_json().dump();
  binary::write_u32(out, static_cast<std::uint32_t>(config.size()));
  binary::write_bytes(out, config);
  binary::write_u32(out, static_cast<std::uint32_t>(model.slots().size()));
  for (const auto& s : model.slots()) {
    binary::write_u16(out, static_cast<std::uint16_t>(s.name.size()));
    binary::write_bytes(out, s.name);
    binary::write_u32(out, static_cast<std::uint32_t>(s.rows));
    binary::write_u32(out, static_cast<std::uint32_t>(s.cols));
    const auto t = model.tensor(s.name);
    for (Index r = 0; r < s.rows; ++r) {
      for (Index c = 0; c < s.cols; ++c) binary::write_f32(out, static_cast<float>(t(r, c)));
    }
  }
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

template <typename Scalar>
ScorerModel<Scalar> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  try {
    if (binary::read_bytes(in, 4, "magic") != "UMCK") {
      throw CheckpointError("not a checkpoint (bad magic)");
    }
    const std::uint32_t version = binary::read_u32(in, "version");
    if (version != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                            " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const std::uint32_t config_len = binary::read_u32(in, "config length");
    const std::string config_text = binary::read_bytes(in, config_len, "config");
    ScorerConfig config;
    try {
      config = ScorerConfig::from_json(nlohmann::json::parse(config_text));
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(std::string("corrupt config blob: ") + e.what());
    }
    ScorerModel<Scalar> model(config);
    const std::uint32_t count = binary::read_u32(in, "tensor count");
    if (count != model.slots().size()) {
      throw CheckpointError("checkpoint has " + std::to_string(count) + " tensors, config implies " +
                            std::to_string(model.slots().size()));
    }
    std::vector<float> buffer;
    for (const auto& s : model.slots()) {
      const std::uint16_t name_len = binary::read_u16(in, "tensor name length");
      const std::string name = binary::read_bytes(in, name_len, "tensor name");
      const std::uint32_t rows = binary::read_u32(in, name + " rows");
      const std::uint32_t cols = binary::read_u32(in, name + " cols");
      if (name != s.name || rows != s.rows || cols != s.cols) {
        throw CheckpointError("tensor '" + name + "' does not match expected '" + s.name + "'");
      }
      buffer.resize(static_cast<std::size_t>(rows) * cols);
      binary::read_f32_array(in, buffer, name);
      auto t = model.tensor(s.name);
      for (Index r = 0; r < s.rows; ++r) {
        for (Index c = 0; c < s.cols; ++c) {
          t(r, c) = static_cast<Scalar>(buffer[static_cast<std::size_t>(r * s.cols + c)]);
        }
      }
    }
    if (!binary::at_end(in)) throw CheckpointError("trailing bytes after last tensor");
    if (!model.parameters().allFinite()) throw CheckpointError("non-finite parameter values");
    return model;
  } catch (const CheckpointError& e) {
    throw CheckpointError(path + ": " + e.what());
  } catch (const Error& e) {
    throw CheckpointError(path + ": corrupt checkpoint: " + e.what());
  }
}

template class ScorerModel<float>;
template class ScorerModel<double>;
template ScorerModel<float> init_model<float>(const ScorerConfig&, std::uint64_t);
template ScorerModel<double> init_model<double>(const ScorerConfig&, std::uint64_t);
template void save_checkpoint<float>(const ScorerModel<float>&, const std::string&);
template void save_checkpoint<double>(const ScorerModel<double>&, const std::string&);
template ScorerModel<float> load_checkpoint<float>(const std::string&);
template ScorerModel<double> load_checkpoint<double>(const std::string&);

}  // namespace umiclab
