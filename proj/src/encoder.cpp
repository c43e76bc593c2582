#include "dsie/encoder.hpp"

#include <cmath>

namespace dsie {

namespace {

void run_blocks(const Matrix& embedded, const ModelParams& params, EncoderTrace& trace) {
  trace.embedded = embedded;
  trace.blocks.resize(params.blocks.size());
  trace.hidden.resize(params.blocks.size());
  const Matrix* prev = &trace.embedded;
  for (std::size_t s = 0; s < params.blocks.size(); ++s) {
    const auto& block = params.blocks[s];
    auto& cache = trace.blocks[s];
    cache.attended = attention_forward(block.attention, *prev, &cache.attention);
    cache.pre_activation = (cache.attended * block.weight).rowwise() + block.bias.transpose();
    trace.hidden[s] = cache.pre_activation.cwiseMax(0.0) + *prev;
    prev = &trace.hidden[s];
  }
}

void run_readout(const ModelParams& params, EncoderTrace& trace) {
  const Eigen::Index n = trace.embedded.rows();
  const Eigen::Index d = trace.embedded.cols();
  trace.concat.resize(n, d * static_cast<Eigen::Index>(trace.hidden.size()));
  for (std::size_t s = 0; s < trace.hidden.size(); ++s)
    trace.concat.middleCols(static_cast<Eigen::Index>(s) * d, d) = trace.hidden[s];
  trace.readout_act = (trace.concat * params.readout_hidden).array().tanh();
  trace.weights = softmax(trace.readout_act * params.readout_score);
  trace.preference = trace.embedded.transpose() * trace.weights;
}

}  // namespace

Matrix lookup_rows(const ModelParams& params, std::span<const ItemIndex> items) {
  Matrix out(static_cast<Eigen::Index>(items.size()), params.dims.dim);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto item = items[i];
    if (item < 0 || item >= params.dims.item_count) throw std::out_of_range("item index out of range");
    out.row(static_cast<Eigen::Index>(i)) = params.item_embeddings.row(item);
  }
  return out;
}

Matrix attention_forward(const AttentionWeights& w, const Matrix& x, AttentionCache* cache) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.cols()));
  Matrix q = x * w.query;
  Matrix k = x * w.key;
  Matrix v = x * w.value;
  Matrix probs = softmax_rows((q * k.transpose()) * scale);
  Matrix out = probs * v;
  if (cache) {
    cache->input = x;
    cache->query = std::move(q);
    cache->key = std::move(k);
    cache->value = std::move(v);
    cache->probs = std::move(probs);
  }
  return out;
}

Matrix attention_backward(const AttentionWeights& w, const AttentionCache& c, const Matrix& d_out,
                          AttentionWeights& grad) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(c.input.cols()));
  Matrix d_probs = d_out * c.value.transpose();
  Matrix d_value = c.probs.transpose() * d_out;
  Matrix d_scores = softmax_rows_backward(c.probs, d_probs) * scale;
  Matrix d_query = d_scores * c.key;
  Matrix d_key = d_scores.transpose() * c.query;
  grad.query.noalias() += c.input.transpose() * d_query;
  grad.key.noalias() += c.input.transpose() * d_key;
  grad.value.noalias() += c.input.transpose() * d_value;
  Matrix dx = d_query * w.query.transpose();
  dx.noalias() += d_key * w.key.transpose();
  dx.noalias() += d_value * w.value.transpose();
  return dx;
}

Vector encoder_forward(const Matrix& embedded, const ModelParams& params, EncoderTrace& trace) {
  if (embedded.rows() == 0) throw std::invalid_argument("empty sequence");
  run_blocks(embedded, params, trace);
  run_readout(params, trace);
  return trace.preference;
}

Matrix encoder_backward(const EncoderTrace& t, const ModelParams& params, const Vector& d_pref, ModelParams& grad) {
  const Eigen::Index d = t.embedded.cols();
  // g = E^T A
  Matrix d_embedded = t.weights * d_pref.transpose();
  Vector d_weights = t.embedded * d_pref;
  Vector d_logits = softmax_backward(t.weights, d_weights);
  grad.readout_score.noalias() += t.readout_act.transpose() * d_logits;
  Matrix d_act = d_logits * params.readout_score.transpose();
  Matrix d_pre = d_act.array() * (1.0 - t.readout_act.array().square());
  grad.readout_hidden.noalias() += t.concat.transpose() * d_pre;
  Matrix d_concat = d_pre * params.readout_hidden.transpose();

  std::vector<Matrix> d_layers;
  for (std::size_t s = 0; s < t.hidden.size(); ++s)
    d_layers.push_back(d_concat.middleCols(static_cast<Eigen::Index>(s) * d, d));
  d_embedded += residual_backward(t, params, d_layers, grad);
  return d_embedded;
}

Matrix residual_backward(const EncoderTrace& t, const ModelParams& params, const std::vector<Matrix>& d_layers,
                         ModelParams& grad) {
  const auto layers = t.hidden.size();
  Matrix d_hidden = d_layers[layers - 1];
  for (std::size_t s = layers; s-- > 0;) {
    const auto& block = params.blocks[s];
    const auto& cache = t.blocks[s];
    auto& gblock = grad.blocks[s];
    Matrix d_z = (cache.pre_activation.array() > 0.0).select(d_hidden, 0.0);
    gblock.weight.noalias() += cache.attended.transpose() * d_z;
    gblock.bias += d_z.colwise().sum().transpose();
    Matrix d_attended = d_z * block.weight.transpose();
    Matrix d_prev = d_hidden + attention_backward(block.attention, cache.attention, d_attended, gblock.attention);
    if (s == 0) return d_prev;
    d_hidden = d_prev + d_layers[s - 1];
  }
  return Matrix::Zero(t.embedded.rows(), t.embedded.cols());
}

SequenceEmbedding embed_sequence(std::span<const ItemIndex> prefix, const Mask& mask, const ModelParams& params) {
  if (prefix.size() != mask.size()) throw std::invalid_argument("prefix and mask lengths differ");
  SequenceEmbedding out;
  out.mask = mask;
  out.rows = Matrix::Zero(static_cast<Eigen::Index>(prefix.size()), params.dims.dim);
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (!mask[i]) continue;
    const auto item = prefix[i];
    if (item < 0 || item >= params.dims.item_count) throw std::out_of_range("item index out of range");
    out.rows.row(static_cast<Eigen::Index>(i)) = params.item_embeddings.row(item);
  }
  return out;
}

Matrix self_attention(const Matrix& x, const Mask& mask, const AttentionWeights& weights) {
  auto rows = real_positions(mask);
  if (rows.empty()) return Matrix::Zero(x.rows(), x.cols());
  return scatter_rows(attention_forward(weights, gather_rows(x, rows), nullptr), rows, x.rows());
}

std::vector<Matrix> residual_stack(const SequenceEmbedding& embedded, const ModelParams& params) {
  auto rows = real_positions(embedded.mask);
  std::vector<Matrix> out;
  if (rows.empty()) {
    out.assign(params.blocks.size(), Matrix::Zero(embedded.rows.rows(), embedded.rows.cols()));
    return out;
  }
  EncoderTrace trace;
  run_blocks(gather_rows(embedded.rows, rows), params, trace);
  for (const auto& h : trace.hidden) out.push_back(scatter_rows(h, rows, embedded.rows.rows()));
  return out;
}

ReadoutResult attentive_readout(const std::vector<Matrix>& hidden, const SequenceEmbedding& embedded,
                                const ModelParams& params) {
  auto rows = real_positions(embedded.mask);
  if (rows.empty()) throw std::invalid_argument("empty sequence");
  if (hidden.size() != params.blocks.size()) throw std::invalid_argument("hidden layer count mismatch");
  EncoderTrace trace;
  trace.embedded = gather_rows(embedded.rows, rows);
  for (const auto& h : hidden) trace.hidden.push_back(gather_rows(h, rows));
  run_readout(params, trace);
  ReadoutResult out;
  out.preference = trace.preference;
  out.weights = Vector::Zero(embedded.rows.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) out.weights[rows[i]] = trace.weights[static_cast<Eigen::Index>(i)];
  return out;
}

Vector encode_preference(std::span<const ItemIndex> prefix, const Mask& mask, const ModelParams& params) {
  auto embedded = embed_sequence(prefix, mask, params);
  auto rows = real_positions(mask);
  if (rows.empty()) throw std::invalid_argument("empty sequence");
  EncoderTrace trace;
  return encoder_forward(gather_rows(embedded.rows, rows), params, trace);
}

}  // namespace dsie
