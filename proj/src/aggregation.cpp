#include "dsie/aggregation.hpp"

#include <algorithm>
#include <unordered_map>

#include "dsie/layers.hpp"

namespace dsie {

AggregationOutput aggregate(const Matrix& interests, const Vector& preference, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  AggregationOutput out;
  out.alpha = softmax((interests * preference) / tau);
  out.current_interest = interests.transpose() * out.alpha;
  return out;
}

void aggregate_backward(const Matrix& interests, const Vector& preference, double tau, const AggregationOutput& out,
                        const Vector& d_current, Matrix& d_interests, Vector& d_preference) {
  d_interests.noalias() += out.alpha * d_current.transpose();
  Vector d_alpha = interests * d_current;
  Vector d_logits = softmax_backward(out.alpha, d_alpha) / tau;
  d_interests.noalias() += d_logits * preference.transpose();
  d_preference.noalias() += interests.transpose() * d_logits;
}

Vector score_items(const Vector& current_interest, const ModelParams& params, std::span<const ItemIndex> candidates) {
  Vector scores(static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto item = candidates[i];
    if (item < 0 || item >= params.dims.item_count) throw std::out_of_range("candidate index out of range");
    scores[static_cast<Eigen::Index>(i)] = params.item_embeddings.row(item).dot(current_interest);
  }
  return scores;
}

Vector score_catalog(const Vector& current_interest, const ModelParams& params) {
  return params.item_table() * current_interest;
}

Retrieval top_n(const Vector& scores, std::size_t n, const std::vector<std::uint8_t>& excluded) {
  if (n < 1) throw std::invalid_argument("N must be >= 1");
  std::vector<ScoredItem> pool;
  pool.reserve(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (!excluded.empty() && excluded[static_cast<std::size_t>(i)]) continue;
    pool.push_back({static_cast<ItemIndex>(i), scores[i]});
  }
  Retrieval out;
  out.short_list = pool.size() < n;
  const auto keep = std::min(n, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(), ranks_before);
  pool.resize(keep);
  out.items = std::move(pool);
  return out;
}

Retrieval retrieve_topn(const Vector& current_interest, const ModelParams& params, std::size_t n,
                        const std::vector<std::uint8_t>& excluded) {
  return top_n(score_catalog(current_interest, params), n, excluded);
}

Retrieval retrieve_multi_interest(const Matrix& interests, const ModelParams& params, std::size_t n,
                                  const std::vector<std::uint8_t>& excluded) {
  std::unordered_map<ItemIndex, double> best;
  bool short_list = false;
  for (Eigen::Index k = 0; k < interests.rows(); ++k) {
    Vector f = interests.row(k).transpose();
    auto part = retrieve_topn(f, params, n, excluded);
    short_list = short_list || part.short_list;
    for (const auto& s : part.items) {
      auto [it, inserted] = best.try_emplace(s.item, s.score);
      if (!inserted) it->second = std::max(it->second, s.score);
    }
  }
  std::vector<ScoredItem> merged;
  merged.reserve(best.size());
  for (const auto& [item, score] : best) merged.push_back({item, score});
  std::sort(merged.begin(), merged.end(), ranks_before);
  if (merged.size() > n) merged.resize(n);
  return {std::move(merged), short_list};
}

}  // namespace dsie
