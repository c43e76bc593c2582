#pragma once

#include <optional>

#include "dsie/layers.hpp"
#include "dsie/params.hpp"

namespace dsie {

// Local-scale multi-interest extraction. Items are soft-assigned to K
// intention prototypes, weighted per prototype by position importance and by
// their relevance to the global preference, then pooled into K interests.
//
// Shapes (n real positions): assignment and position are K x n, guide is n,
// interests are K x d. The masked wrappers return K x max_len with zero
// columns at padded positions.

struct InterestSet {
  Matrix interests;   // K x d
  Matrix assignment;  // K x max_len
  Matrix position;    // K x max_len
  Vector guide;       // max_len
};

Matrix intention_assignment(const Matrix& embedded, const Mask& mask, const ModelParams& params);
Matrix position_weights(const Matrix& embedded, const Mask& mask, const ModelParams& params);
Vector preference_guided_attention(const Matrix& embedded, const Mask& mask, const Vector& preference,
                                   const ModelParams& params);
Matrix interest_embeddings(const Matrix& embedded, const Mask& mask, const Matrix& assignment,
                           const Matrix& position, const Vector& guide, const ModelParams& params);

// Full local extraction on a masked sequence. Without a preference the guide
// weights are fixed to one.
InterestSet extract_interests(const Matrix& embedded, const Mask& mask, const std::optional<Vector>& preference,
                              const ModelParams& params);

// Half the squared off-diagonal mass of the prototype covariance.
double orthogonality_regularizer(const Matrix& prototypes);
// Returns the loss and accumulates scale * dL/dC into grad.
double orthogonality_regularizer(const Matrix& prototypes, Matrix& grad, double scale = 1.0);

// ---- compact stages ----

struct AssignmentCache {
  Matrix projected;    // E * W_c1
  LayerNormCache item_ln;
  Matrix item_normed;  // n x d
  LayerNormCache proto_ln;
  Matrix proto_normed; // K x d
  Matrix probs;        // K x n
};

struct PositionCache {
  Matrix hidden_pre;  // n x 4d
  Matrix hidden;      // ReLU
  Matrix probs;       // K x n
};

struct GuideCache {
  Matrix embedded;
  Vector preference;
  Matrix act;     // tanh(...), n x d
  Vector weights; // n
};

struct PoolCache {
  Matrix embedded;
  Matrix assignment, position;
  Vector guide;
  Matrix pool;  // K x n combined weights
  LayerNormCache ln;
  Matrix interests;
};

Matrix assignment_forward(const Matrix& embedded, const ModelParams& params, AssignmentCache& cache);
Matrix assignment_backward(const Matrix& embedded, const AssignmentCache& cache, const ModelParams& params,
                           const Matrix& d_probs, ModelParams& grad);

Matrix position_forward(const Matrix& embedded, const ModelParams& params, PositionCache& cache);
Matrix position_backward(const Matrix& embedded, const PositionCache& cache, const ModelParams& params,
                         const Matrix& d_probs, ModelParams& grad);

Vector guide_forward(const Matrix& embedded, const Vector& preference, const ModelParams& params, GuideCache& cache);
// Accumulates into d_embedded and d_preference.
void guide_backward(const GuideCache& cache, const ModelParams& params, const Vector& d_weights, Matrix& d_embedded,
                    Vector& d_preference, ModelParams& grad);

Matrix pool_forward(const Matrix& embedded, const Matrix& assignment, const Matrix& position, const Vector& guide,
                    const ModelParams& params, PoolCache& cache);
struct PoolGrad {
  Matrix d_embedded, d_assignment, d_position;
  Vector d_guide;
};
PoolGrad pool_backward(const PoolCache& cache, const ModelParams& params, const Matrix& d_interests,
                       ModelParams& grad);

struct InterestTrace {
  AssignmentCache assign;
  PositionCache position;
  std::optional<GuideCache> guide;  // empty when guide weights are fixed to one
  PoolCache pool;
};

Matrix interest_forward(const Matrix& embedded, const Vector* preference, const ModelParams& params,
                        InterestTrace& trace);
// Accumulates into d_embedded (n x d) and, when guided, d_preference.
void interest_backward(const InterestTrace& trace, const ModelParams& params, const Matrix& d_interests,
                       Matrix& d_embedded, Vector& d_preference, ModelParams& grad);

}  // namespace dsie
