#pragma once

#include <span>
#include <vector>

#include "dsie/params.hpp"

namespace dsie {

struct AggregationOutput {
  Vector alpha;             // K, sums to one
  Vector current_interest;  // d
};

// alpha = softmax_k(<g, f_k> / tau), R = sum_k alpha_k f_k.
AggregationOutput aggregate(const Matrix& interests, const Vector& preference, double tau);
// Accumulates into d_interests and d_preference.
void aggregate_backward(const Matrix& interests, const Vector& preference, double tau, const AggregationOutput& out,
                        const Vector& d_current, Matrix& d_interests, Vector& d_preference);

struct ScoredItem {
  ItemIndex item;
  double score;

  bool operator==(const ScoredItem&) const = default;
};

// Descending score, ties by ascending item index.
inline bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
  return a.score > b.score || (a.score == b.score && a.item < b.item);
}

Vector score_items(const Vector& current_interest, const ModelParams& params, std::span<const ItemIndex> candidates);
// Scores every catalog item.
Vector score_catalog(const Vector& current_interest, const ModelParams& params);

struct Retrieval {
  std::vector<ScoredItem> items;
  bool short_list = false;  // fewer than N candidates survived exclusion
};

// excluded is indexed by item; empty means nothing excluded.
Retrieval top_n(const Vector& scores, std::size_t n, const std::vector<std::uint8_t>& excluded);
Retrieval retrieve_topn(const Vector& current_interest, const ModelParams& params, std::size_t n,
                        const std::vector<std::uint8_t>& excluded);

// Retrieval without aggregation: each interest retrieves its own top N, the
// union is reranked by each item's best score over the interests.
Retrieval retrieve_multi_interest(const Matrix& interests, const ModelParams& params, std::size_t n,
                                  const std::vector<std::uint8_t>& excluded);

}  // namespace dsie
