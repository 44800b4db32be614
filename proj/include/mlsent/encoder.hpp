#pragma once

// Forward and backward passes of the compact encoder.
//
// Per layer, for token states x_i (hidden size d):
//   single-head self-attention with residual:  h_i = x_i + Wo * sum_j softmax_j(q_i.k_j / sqrt(d)) v_j + bo
//   GELU feed-forward with residual:           y_i = h_i + W2 * gelu(W1 h_i + b1) + b2
// Token states start as token + position embeddings; the classifier reads the
// mean of the final states. Pad positions never enter attention or pooling.

#include <cstddef>
#include <cstdint>
#include <span>

#include "mlsent/backend.hpp"

namespace mlsent::encoder {

struct LayerOffsets {
  std::size_t wq, bq, wk, bk, wv, bv, wo, bo, w1, b1, w2, b2;
};

struct Layout {
  std::size_t token_embeddings = 0;
  std::size_t position_embeddings = 0;
  std::vector<LayerOffsets> layers;
  std::size_t head_weight = 0;
  std::size_t head_bias = 0;
  std::size_t total = 0;
};

Layout layout(const EncoderArch& arch);

// `ids` holds only the real tokens (no padding); may be empty.
ProbaRow logits(const TrainableModel& model, std::span<const std::int32_t> ids);

// Adds scale * d(cross-entropy)/d(params) into `grad` for trainable groups only
// and returns the unscaled loss. Backpropagation stops below the lowest
// trainable group.
double accumulate_gradient(const TrainableModel& model, std::span<const std::int32_t> ids,
                           Label target, double scale, std::span<double> grad);

}  // namespace mlsent::encoder
