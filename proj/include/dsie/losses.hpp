#pragma once

#include <span>
#include <vector>

#include "dsie/params.hpp"

namespace dsie {

// n distinct items drawn uniformly from the catalog, never the target.
std::vector<ItemIndex> draw_negatives(Rng& rng, int item_count, ItemIndex target, int n);

// -log softmax of the target among {target} + negatives, scores <R, e_x>.
// When d_current is given, accumulates scale * dL/dR into it and
// scale * dL/de_x into grad->item_embeddings.
double sampled_softmax_loss(const Vector& current_interest, ItemIndex target, std::span<const ItemIndex> negatives,
                            const ModelParams& params, Vector* d_current = nullptr, ModelParams* grad = nullptr,
                            double scale = 1.0);

// Batch form: rows of current_interests pair with targets; mean over the batch.
double sampled_softmax_loss(const Matrix& current_interests, std::span<const ItemIndex> targets,
                            const ModelParams& params, int n_negatives, Rng& rng);

// -log sigmoid(<g, g_shuffled> - <g, g_negative>).
double bpr_contrastive_loss(const Vector& original, const Vector& shuffled, const Vector& negative,
                            Vector* d_original = nullptr, Vector* d_shuffled = nullptr, Vector* d_negative = nullptr,
                            double scale = 1.0);

// Rows are paired; mean over the batch.
double bpr_contrastive_loss(const Matrix& original, const Matrix& shuffled, const Matrix& negative);

}  // namespace dsie
