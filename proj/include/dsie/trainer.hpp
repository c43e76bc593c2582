#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "dsie/corpus_io.hpp"
#include "dsie/model.hpp"

namespace dsie {

// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
class Adam {
 public:
  Adam(const ModelParams& like, double learning_rate);
  void step(ModelParams& params, const ModelParams& grad);
  long steps() const { return t_; }

 private:
  double lr_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  ModelParams m_;
  ModelParams v_;
};

TrainConfig ablation_variant(const TrainConfig& config, Variant variant);

struct EpochLog {
  int epoch = 0;
  LossBreakdown loss;  // mean over the epoch's batches
  double valid_recall = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams best;
  ModelParams last;
  int best_epoch = 0;
  double best_valid_recall = -1.0;
  std::vector<EpochLog> log;
};

// One row per epoch: epoch, main, aux, contrastive, total, valid_recall@N, seconds.
void write_log_row(std::ostream& out, const EpochLog& row);

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  Execution exec = Execution::parallel;
};

// Training prefixes of every train user, most recent max_samples_per_user
// per user when that is set.
std::vector<TrainingSample> training_samples(const Corpus& corpus, const DatasetSplit& split,
                                             const TrainConfig& config);

TrainResult train(const Corpus& corpus, const DatasetSplit& split, const TrainConfig& config,
                  const TrainHooks& hooks = {});

}  // namespace dsie
