#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsie/aggregation.hpp"
#include "dsie/dataset.hpp"
#include "dsie/encoder.hpp"
#include "dsie/interest.hpp"
#include "dsie/params.hpp"

namespace dsie {

enum class Variant { full, no_cl, no_gs };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

struct TrainConfig {
  int dim = 128;
  int max_len = 20;
  int layers = 3;
  int interests = 3;
  double tau = 0.1;
  double alpha_reg = 0.1;
  double beta_cl = 0.4;
  int negatives = 10;
  int batch_size = 128;
  double learning_rate = 0.001;
  int patience = 20;
  int max_epochs = 100;
  int max_samples_per_user = 0;  // 0 keeps every prefix
  int eval_topn = 50;
  std::uint64_t seed = 42;
  Variant variant = Variant::full;

  // The global preference encoder is active (false for no_gs).
  bool uses_global() const { return variant != Variant::no_gs; }
  bool uses_contrastive() const { return uses_global() && beta_cl > 0.0; }

  ModelDims dims(int item_count) const { return {item_count, dim, layers, interests}; }
};

void validate(const TrainConfig& config);

struct LossBreakdown {
  double main = 0.0;
  double aux = 0.0;
  double contrastive = 0.0;
  double total = 0.0;
};

// Random draws for one batch, fixed up front so the objective is a
// deterministic function of the parameters.
struct BatchPlan {
  struct Entry {
    std::vector<ItemIndex> items;     // real prefix items, oldest first
    std::vector<ItemIndex> shuffled;  // permutation of items; empty without contrastive term
    std::vector<ItemIndex> negatives;
    ItemIndex target = 0;
  };
  std::vector<Entry> entries;
};

BatchPlan plan_batch(std::span<const TrainingSample> batch, const TrainConfig& config, int item_count, Rng& rng);

// Evaluates main + alpha_reg * aux + beta_cl * contrastive on a planned batch.
// When grad is non-null it is overwritten with the gradient of the total.
// serial and parallel give the same result up to summation order.
LossBreakdown batch_objective(const BatchPlan& plan, const ModelParams& params, const TrainConfig& config,
                              ModelParams* grad, Execution exec = Execution::parallel);

LossBreakdown total_loss(std::span<const TrainingSample> batch, const ModelParams& params, const TrainConfig& config,
                         Rng& rng);

struct UserRepresentation {
  std::optional<Vector> preference;
  Matrix interests;  // K x d
  std::optional<AggregationOutput> aggregation;
};

// history holds real items only, oldest first; the most recent max_len are used.
UserRepresentation represent_user(std::span<const ItemIndex> history, const ModelParams& params,
                                  const TrainConfig& config);

// Aggregated single-vector retrieval, or per-interest retrieval + rerank for no_gs.
Retrieval recommend(std::span<const ItemIndex> history, const ModelParams& params, const TrainConfig& config,
                    std::size_t n, const std::vector<std::uint8_t>& excluded);

}  // namespace dsie
