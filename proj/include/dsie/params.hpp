#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsie/types.hpp"

namespace dsie {

struct ModelDims {
  int item_count = 0;
  int dim = 128;
  int layers = 3;     // residual blocks in the preference encoder
  int interests = 3;  // intention prototypes

  bool operator==(const ModelDims&) const = default;
};

struct AttentionWeights {
  Matrix query;  // d x d
  Matrix key;
  Matrix value;
};

struct ResidualBlock {
  AttentionWeights attention;
  Matrix weight;  // d x d
  Vector bias;    // d
};

struct LayerNormParams {
  Vector gain;
  Vector bias;
};

// Every learnable tensor of the model. Gradients and optimizer moments use
// the same struct so they can be walked in lockstep.
struct ModelParams {
  ModelDims dims;

  // (item_count + 1) x d; the final row is the padding slot and stays zero.
  Matrix item_embeddings;

  std::vector<ResidualBlock> blocks;
  Matrix readout_hidden;  // (S*d) x d
  Vector readout_score;   // d

  Matrix prototypes;       // K x d
  Matrix assign_proj;      // d x d
  LayerNormParams item_norm;       // applied to projected items
  LayerNormParams prototype_norm;  // applied to prototypes
  LayerNormParams interest_norm;   // shared across interests

  Matrix position_hidden;       // d x 4d
  Vector position_hidden_bias;  // 4d
  Matrix position_out;          // 4d x K
  Vector position_out_bias;     // K

  Matrix guide_hidden;  // 2d x d, rows [0,d) act on the item, [d,2d) on the preference
  Vector guide_score;   // d

  Matrix interest_bias;  // K x d

  int pad_index() const { return dims.item_count; }
  auto item_table() const { return item_embeddings.topRows(dims.item_count); }
};

// Zero-valued tensors with the given shapes.
ModelParams zeros_like(const ModelDims& dims);

// Weights and embeddings ~ U(-1/sqrt(d), 1/sqrt(d)); biases zero; norm gains one.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

struct TensorRef {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;

  std::span<double> values() const { return {data, static_cast<std::size_t>(rows * cols)}; }
};

// Stable order; names are unique.
std::vector<TensorRef> tensors(ModelParams& params);

void set_zero(ModelParams& params);
void add_into(ModelParams& dst, const ModelParams& src);
bool all_finite(const ModelParams& params);

}  // namespace dsie
