#include "dsie/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dsie/layers.hpp"

namespace dsie {

std::vector<ItemIndex> draw_negatives(Rng& rng, int item_count, ItemIndex target, int n) {
  if (n < 1) throw std::invalid_argument("need at least one negative");
  if (item_count < n + 1) throw std::invalid_argument("catalog smaller than negatives + 1");
  std::vector<ItemIndex> out;
  out.reserve(static_cast<std::size_t>(n));
  if (2 * n >= item_count) {
    std::vector<ItemIndex> pool;
    pool.reserve(static_cast<std::size_t>(item_count - 1));
    for (ItemIndex i = 0; i < item_count; ++i)
      if (i != target) pool.push_back(i);
    for (int i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), pool.size() - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
      out.push_back(pool[static_cast<std::size_t>(i)]);
    }
    return out;
  }
  std::uniform_int_distribution<ItemIndex> pick(0, item_count - 1);
  while (static_cast<int>(out.size()) < n) {
    const ItemIndex cand = pick(rng);
    if (cand == target || std::find(out.begin(), out.end(), cand) != out.end()) continue;
    out.push_back(cand);
  }
  return out;
}

double sampled_softmax_loss(const Vector& current, ItemIndex target, std::span<const ItemIndex> negatives,
                            const ModelParams& params, Vector* d_current, ModelParams* grad, double scale) {
  const auto m = static_cast<Eigen::Index>(negatives.size()) + 1;
  Vector logits(m);
  auto item_of = [&](Eigen::Index j) { return j == 0 ? target : negatives[static_cast<std::size_t>(j - 1)]; };
  for (Eigen::Index j = 0; j < m; ++j) logits[j] = params.item_embeddings.row(item_of(j)).dot(current);
  const double top = logits.maxCoeff();
  const double lse = top + std::log((logits.array() - top).exp().sum());
  const double loss = lse - logits[0];
  if (d_current) {
    Vector d_logits = (logits.array() - lse).exp();
    d_logits[0] -= 1.0;
    d_logits *= scale;
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto row = item_of(j);
      d_current->noalias() += d_logits[j] * params.item_embeddings.row(row).transpose();
      if (grad) grad->item_embeddings.row(row) += d_logits[j] * current.transpose();
    }
  }
  return loss;
}

double sampled_softmax_loss(const Matrix& current_interests, std::span<const ItemIndex> targets,
                            const ModelParams& params, int n_negatives, Rng& rng) {
  if (static_cast<std::size_t>(current_interests.rows()) != targets.size())
    throw std::invalid_argument("batch size mismatch");
  double total = 0.0;
  for (std::size_t b = 0; b < targets.size(); ++b) {
    auto negatives = draw_negatives(rng, params.dims.item_count, targets[b], n_negatives);
    total += sampled_softmax_loss(current_interests.row(static_cast<Eigen::Index>(b)).transpose(), targets[b],
                                  negatives, params);
  }
  return targets.empty() ? 0.0 : total / static_cast<double>(targets.size());
}

double bpr_contrastive_loss(const Vector& original, const Vector& shuffled, const Vector& negative,
                            Vector* d_original, Vector* d_shuffled, Vector* d_negative, double scale) {
  const double margin = original.dot(shuffled) - original.dot(negative);
  const double loss = softplus_neg(margin);
  const double d_margin = -sigmoid(-margin) * scale;
  if (d_original) d_original->noalias() += d_margin * (shuffled - negative);
  if (d_shuffled) d_shuffled->noalias() += d_margin * original;
  if (d_negative) d_negative->noalias() -= d_margin * original;
  return loss;
}

double bpr_contrastive_loss(const Matrix& original, const Matrix& shuffled, const Matrix& negative) {
  double total = 0.0;
  for (Eigen::Index b = 0; b < original.rows(); ++b)
    total += bpr_contrastive_loss(Vector(original.row(b).transpose()), Vector(shuffled.row(b).transpose()),
                                  Vector(negative.row(b).transpose()));
  return original.rows() ? total / static_cast<double>(original.rows()) : 0.0;
}

}  // namespace dsie
