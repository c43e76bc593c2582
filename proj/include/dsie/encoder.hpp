#pragma once

#include <span>
#include <vector>

#include "dsie/layers.hpp"
#include "dsie/params.hpp"

namespace dsie {

// Global-scale preference encoder: a stack of self-attentive residual blocks
// followed by an attentive readout over positions that pools the raw item
// embeddings.
//
// Two API levels. The masked functions take full max_len x d matrices plus a
// mask and keep padded rows at zero. The compact functions work on the real
// rows only and carry the caches needed for the backward pass; masked
// attention over n real keys is exactly attention over the compact rows.

struct SequenceEmbedding {
  Matrix rows;  // max_len x d, zero at padded positions
  Mask mask;
};

struct ReadoutResult {
  Vector preference;  // d
  Vector weights;     // max_len, zero at padded positions
};

SequenceEmbedding embed_sequence(std::span<const ItemIndex> prefix, const Mask& mask, const ModelParams& params);
Matrix self_attention(const Matrix& x, const Mask& mask, const AttentionWeights& weights);
std::vector<Matrix> residual_stack(const SequenceEmbedding& embedded, const ModelParams& params);
ReadoutResult attentive_readout(const std::vector<Matrix>& hidden, const SequenceEmbedding& embedded,
                                const ModelParams& params);
Vector encode_preference(std::span<const ItemIndex> prefix, const Mask& mask, const ModelParams& params);

// ---- compact forward/backward ----

struct AttentionCache {
  Matrix input, query, key, value, probs;
};

struct BlockCache {
  AttentionCache attention;
  Matrix attended;        // attention output
  Matrix pre_activation;  // attended * W + b
};

struct EncoderTrace {
  Matrix embedded;                // n x d
  std::vector<BlockCache> blocks;
  std::vector<Matrix> hidden;     // h_1..h_S, each n x d
  Matrix concat;                  // n x (S*d)
  Matrix readout_act;             // tanh(concat * W_g1), n x d
  Vector weights;                 // n
  Vector preference;              // d
};

Matrix attention_forward(const AttentionWeights& w, const Matrix& x, AttentionCache* cache);
// Returns d_input; accumulates weight gradients.
Matrix attention_backward(const AttentionWeights& w, const AttentionCache& cache, const Matrix& d_out,
                          AttentionWeights& grad);

// embedded must have at least one row.
Vector encoder_forward(const Matrix& embedded, const ModelParams& params, EncoderTrace& trace);
// Returns the gradient w.r.t. the embedded rows; accumulates parameter gradients.
Matrix encoder_backward(const EncoderTrace& trace, const ModelParams& params, const Vector& d_preference,
                        ModelParams& grad);

// d_layers[s] is the gradient arriving directly at h_{s+1}. Returns the
// gradient w.r.t. the embedded rows.
Matrix residual_backward(const EncoderTrace& trace, const ModelParams& params, const std::vector<Matrix>& d_layers,
                         ModelParams& grad);

// Rows of the item table for the given items, n x d.
Matrix lookup_rows(const ModelParams& params, std::span<const ItemIndex> items);

}  // namespace dsie
