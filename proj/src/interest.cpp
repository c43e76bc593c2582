#include "dsie/interest.hpp"

#include <cmath>

namespace dsie {

Matrix assignment_forward(const Matrix& embedded, const ModelParams& params, AssignmentCache& c) {
  c.projected = embedded * params.assign_proj;
  c.item_normed = layer_norm(c.projected, params.item_norm, &c.item_ln);
  c.proto_normed = layer_norm(params.prototypes, params.prototype_norm, &c.proto_ln);
  // softmax over prototypes for each position: columns of a K x n matrix
  Matrix logits = c.item_normed * c.proto_normed.transpose();  // n x K
  c.probs = softmax_rows(logits).transpose();
  return c.probs;
}

Matrix assignment_backward(const Matrix& embedded, const AssignmentCache& c, const ModelParams& params,
                           const Matrix& d_probs, ModelParams& grad) {
  Matrix d_logits = softmax_rows_backward(c.probs.transpose(), d_probs.transpose());  // n x K
  Matrix d_item_normed = d_logits * c.proto_normed;
  Matrix d_proto_normed = d_logits.transpose() * c.item_normed;
  grad.prototypes += layer_norm_backward(c.proto_ln, params.prototype_norm, d_proto_normed, grad.prototype_norm);
  Matrix d_projected = layer_norm_backward(c.item_ln, params.item_norm, d_item_normed, grad.item_norm);
  grad.assign_proj.noalias() += embedded.transpose() * d_projected;
  return d_projected * params.assign_proj.transpose();
}

Matrix position_forward(const Matrix& embedded, const ModelParams& params, PositionCache& c) {
  c.hidden_pre = (embedded * params.position_hidden).rowwise() + params.position_hidden_bias.transpose();
  c.hidden = c.hidden_pre.cwiseMax(0.0);
  Matrix logits = (c.hidden * params.position_out).rowwise() + params.position_out_bias.transpose();  // n x K
  c.probs = softmax_rows(logits.transpose());  // softmax over positions per prototype
  return c.probs;
}

Matrix position_backward(const Matrix& embedded, const PositionCache& c, const ModelParams& params,
                         const Matrix& d_probs, ModelParams& grad) {
  Matrix d_logits = softmax_rows_backward(c.probs, d_probs).transpose();  // n x K
  grad.position_out.noalias() += c.hidden.transpose() * d_logits;
  grad.position_out_bias += d_logits.colwise().sum().transpose();
  Matrix d_hidden = d_logits * params.position_out.transpose();
  Matrix d_pre = (c.hidden_pre.array() > 0.0).select(d_hidden, 0.0);
  grad.position_hidden.noalias() += embedded.transpose() * d_pre;
  grad.position_hidden_bias += d_pre.colwise().sum().transpose();
  return d_pre * params.position_hidden.transpose();
}

Vector guide_forward(const Matrix& embedded, const Vector& preference, const ModelParams& params, GuideCache& c) {
  const Eigen::Index d = params.dims.dim;
  c.embedded = embedded;
  c.preference = preference;
  // [e_i; g]^T W = e_i^T W_top + g^T W_bottom
  Eigen::RowVectorXd shared = preference.transpose() * params.guide_hidden.bottomRows(d);
  c.act = ((embedded * params.guide_hidden.topRows(d)).rowwise() + shared).array().tanh();
  Vector scores = c.act * params.guide_score;
  c.weights = scores.unaryExpr([](double s) { return sigmoid(s); });
  return c.weights;
}

void guide_backward(const GuideCache& c, const ModelParams& params, const Vector& d_weights, Matrix& d_embedded,
                    Vector& d_preference, ModelParams& grad) {
  const Eigen::Index d = params.dims.dim;
  Vector d_scores = d_weights.array() * c.weights.array() * (1.0 - c.weights.array());
  grad.guide_score.noalias() += c.act.transpose() * d_scores;
  Matrix d_pre = (d_scores * params.guide_score.transpose()).array() * (1.0 - c.act.array().square());
  Eigen::RowVectorXd d_shared = d_pre.colwise().sum();
  grad.guide_hidden.topRows(d).noalias() += c.embedded.transpose() * d_pre;
  grad.guide_hidden.bottomRows(d).noalias() += c.preference * d_shared;
  d_embedded.noalias() += d_pre * params.guide_hidden.topRows(d).transpose();
  d_preference.noalias() += params.guide_hidden.bottomRows(d) * d_shared.transpose();
}

Matrix pool_forward(const Matrix& embedded, const Matrix& assignment, const Matrix& position, const Vector& guide,
                    const ModelParams& params, PoolCache& c) {
  c.embedded = embedded;
  c.assignment = assignment;
  c.position = position;
  c.guide = guide;
  c.pool = (assignment.array() * position.array()).rowwise() * guide.transpose().array();
  Matrix pooled = c.pool * embedded + params.interest_bias;
  c.interests = layer_norm(pooled, params.interest_norm, &c.ln);
  return c.interests;
}

PoolGrad pool_backward(const PoolCache& c, const ModelParams& params, const Matrix& d_interests, ModelParams& grad) {
  Matrix d_pooled = layer_norm_backward(c.ln, params.interest_norm, d_interests, grad.interest_norm);
  grad.interest_bias += d_pooled;
  PoolGrad g;
  g.d_embedded = c.pool.transpose() * d_pooled;
  Matrix d_pool = d_pooled * c.embedded.transpose();  // K x n
  g.d_assignment = (d_pool.array() * c.position.array()).rowwise() * c.guide.transpose().array();
  g.d_position = (d_pool.array() * c.assignment.array()).rowwise() * c.guide.transpose().array();
  g.d_guide = (d_pool.array() * c.assignment.array() * c.position.array()).colwise().sum().transpose();
  return g;
}

Matrix interest_forward(const Matrix& embedded, const Vector* preference, const ModelParams& params,
                        InterestTrace& t) {
  Matrix assignment = assignment_forward(embedded, params, t.assign);
  Matrix position = position_forward(embedded, params, t.position);
  Vector guide;
  if (preference) {
    t.guide.emplace();
    guide = guide_forward(embedded, *preference, params, *t.guide);
  } else {
    t.guide.reset();
    guide = Vector::Ones(embedded.rows());
  }
  return pool_forward(embedded, assignment, position, guide, params, t.pool);
}

void interest_backward(const InterestTrace& t, const ModelParams& params, const Matrix& d_interests,
                       Matrix& d_embedded, Vector& d_preference, ModelParams& grad) {
  const Matrix& embedded = t.pool.embedded;
  PoolGrad pg = pool_backward(t.pool, params, d_interests, grad);
  d_embedded += pg.d_embedded;
  d_embedded += assignment_backward(embedded, t.assign, params, pg.d_assignment, grad);
  d_embedded += position_backward(embedded, t.position, params, pg.d_position, grad);
  if (t.guide) guide_backward(*t.guide, params, pg.d_guide, d_embedded, d_preference, grad);
}

// ---- masked wrappers ----

namespace {

Matrix scatter_cols(const Matrix& compact, const std::vector<Eigen::Index>& cols, Eigen::Index total) {
  Matrix out = Matrix::Zero(compact.rows(), total);
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(cols[i]) = compact.col(static_cast<Eigen::Index>(i));
  return out;
}

Matrix gather_cols(const Matrix& full, const std::vector<Eigen::Index>& cols) {
  Matrix out(full.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = full.col(cols[i]);
  return out;
}

}  // namespace

Matrix intention_assignment(const Matrix& embedded, const Mask& mask, const ModelParams& params) {
  auto rows = real_positions(mask);
  if (rows.empty()) return Matrix::Zero(params.dims.interests, embedded.rows());
  AssignmentCache cache;
  return scatter_cols(assignment_forward(gather_rows(embedded, rows), params, cache), rows, embedded.rows());
}

Matrix position_weights(const Matrix& embedded, const Mask& mask, const ModelParams& params) {
  auto rows = real_positions(mask);
  if (rows.empty()) return Matrix::Zero(params.dims.interests, embedded.rows());
  PositionCache cache;
  return scatter_cols(position_forward(gather_rows(embedded, rows), params, cache), rows, embedded.rows());
}

Vector preference_guided_attention(const Matrix& embedded, const Mask& mask, const Vector& preference,
                                   const ModelParams& params) {
  auto rows = real_positions(mask);
  Vector out = Vector::Zero(embedded.rows());
  if (rows.empty()) return out;
  GuideCache cache;
  Vector w = guide_forward(gather_rows(embedded, rows), preference, params, cache);
  for (std::size_t i = 0; i < rows.size(); ++i) out[rows[i]] = w[static_cast<Eigen::Index>(i)];
  return out;
}

Matrix interest_embeddings(const Matrix& embedded, const Mask& mask, const Matrix& assignment,
                           const Matrix& position, const Vector& guide, const ModelParams& params) {
  auto rows = real_positions(mask);
  Vector compact_guide(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) compact_guide[static_cast<Eigen::Index>(i)] = guide[rows[i]];
  PoolCache cache;
  return pool_forward(gather_rows(embedded, rows), gather_cols(assignment, rows), gather_cols(position, rows),
                      compact_guide, params, cache);
}

InterestSet extract_interests(const Matrix& embedded, const Mask& mask, const std::optional<Vector>& preference,
                              const ModelParams& params) {
  InterestSet out;
  out.assignment = intention_assignment(embedded, mask, params);
  out.position = position_weights(embedded, mask, params);
  if (preference) {
    out.guide = preference_guided_attention(embedded, mask, *preference, params);
  } else {
    out.guide = Vector::Zero(embedded.rows());
    for (auto r : real_positions(mask)) out.guide[r] = 1.0;
  }
  out.interests = interest_embeddings(embedded, mask, out.assignment, out.position, out.guide, params);
  return out;
}

double orthogonality_regularizer(const Matrix& prototypes) {
  Matrix unused = Matrix::Zero(prototypes.rows(), prototypes.cols());
  return orthogonality_regularizer(prototypes, unused, 0.0);
}

double orthogonality_regularizer(const Matrix& prototypes, Matrix& grad, double scale) {
  const double k = static_cast<double>(prototypes.rows());
  Matrix centered = prototypes.rowwise() - prototypes.colwise().mean();
  Matrix cov = centered * centered.transpose() / k;
  Matrix off = cov;
  off.diagonal().setZero();
  const double loss = 0.5 * off.squaredNorm();
  if (scale != 0.0) {
    // dL/dT = off (symmetric), dL/dCc = 2 * off * Cc / K, then undo centering
    Matrix d_centered = (2.0 / k) * off * centered;
    grad += scale * (d_centered.rowwise() - d_centered.colwise().mean());
  }
  return loss;
}

}  // namespace dsie
