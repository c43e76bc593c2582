#include "dsie/trainer.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "dsie/evaluation.hpp"

namespace dsie {

Adam::Adam(const ModelParams& like, double learning_rate)
    : lr_(learning_rate), m_(zeros_like(like.dims)), v_(zeros_like(like.dims)) {}

void Adam::step(ModelParams& params, const ModelParams& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto p = tensors(params);
  auto g = tensors(const_cast<ModelParams&>(grad));
  auto m = tensors(m_);
  auto v = tensors(v_);
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto pv = p[i].values();
    auto gv = g[i].values();
    auto mv = m[i].values();
    auto vv = v[i].values();
    for (std::size_t j = 0; j < pv.size(); ++j) {
      mv[j] = beta1_ * mv[j] + (1.0 - beta1_) * gv[j];
      vv[j] = beta2_ * vv[j] + (1.0 - beta2_) * gv[j] * gv[j];
      pv[j] -= lr_ * (mv[j] / c1) / (std::sqrt(vv[j] / c2) + eps_);
    }
  }
}

TrainConfig ablation_variant(const TrainConfig& config, Variant variant) {
  TrainConfig out = config;
  out.variant = variant;
  if (variant == Variant::no_cl) out.beta_cl = 0.0;
  // no_gs drops the global encoder, and with it the contrastive term.
  if (variant == Variant::no_gs) out.beta_cl = 0.0;
  return out;
}

void write_log_row(std::ostream& out, const EpochLog& r) {
  out << r.epoch << '\t' << std::setprecision(10) << r.loss.main << '\t' << r.loss.aux << '\t' << r.loss.contrastive
      << '\t' << r.loss.total << '\t' << r.valid_recall << '\t' << std::setprecision(4) << r.seconds << '\n';
}

std::vector<TrainingSample> training_samples(const Corpus& corpus, const DatasetSplit& split,
                                             const TrainConfig& config) {
  std::vector<TrainingSample> samples;
  for (auto u : split.train) {
    auto user = expand_training_samples(corpus.sequences.at(static_cast<std::size_t>(u)), config.max_len);
    auto first = user.begin();
    if (config.max_samples_per_user > 0 && user.size() > static_cast<std::size_t>(config.max_samples_per_user))
      first = user.end() - config.max_samples_per_user;
    samples.insert(samples.end(), std::make_move_iterator(first), std::make_move_iterator(user.end()));
  }
  return samples;
}

namespace {

void check_finite(const LossBreakdown& loss, int epoch) {
  auto bad = [&](double v, const char* term) {
    if (!std::isfinite(v))
      throw DataError("training diverged at epoch " + std::to_string(epoch) + ": non-finite " + term + " loss");
  };
  bad(loss.main, "main");
  bad(loss.aux, "aux");
  bad(loss.contrastive, "contrastive");
  bad(loss.total, "total");
}

}  // namespace

TrainResult train(const Corpus& corpus, const DatasetSplit& split, const TrainConfig& config,
                  const TrainHooks& hooks) {
  validate(config);
  const int item_count = static_cast<int>(corpus.catalog.item_count());
  auto samples = training_samples(corpus, split, config);
  if (samples.empty()) throw DataError("no training samples");

  Rng rng(config.seed);
  ModelParams params = init_params(config.dims(item_count), rng());
  ModelParams grad = zeros_like(params.dims);
  Adam adam(params, config.learning_rate);

  EvalOptions eval_opt;
  eval_opt.n = static_cast<std::size_t>(config.eval_topn);
  eval_opt.max_len = config.max_len;
  eval_opt.exec = hooks.exec;

  TrainResult result;
  int since_best = 0;
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }

    LossBreakdown sum;
    int batches = 0;
    const auto bs = static_cast<std::size_t>(config.batch_size);
    std::vector<TrainingSample> batch;
    std::size_t begin = 0;
    while (begin < order.size()) {
      auto end = std::min(order.size(), begin + bs);
      // a trailing batch of one has no in-batch negative; fold it in
      if (order.size() - end == 1) end = order.size();
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(samples[order[i]]);
      begin = end;

      auto plan = plan_batch(batch, config, item_count, rng);
      auto loss = batch_objective(plan, params, config, &grad, hooks.exec);
      check_finite(loss, epoch);
      adam.step(params, grad);
      sum.main += loss.main;
      sum.aux += loss.aux;
      sum.contrastive += loss.contrastive;
      sum.total += loss.total;
      ++batches;
    }

    EpochLog row;
    row.epoch = epoch;
    row.loss = {sum.main / batches, sum.aux / batches, sum.contrastive / batches, sum.total / batches};
    ModelRecommender recommender(params, config);
    row.valid_recall = evaluate_split(recommender, corpus, split.valid, "valid", eval_opt).recall;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(row);
    if (hooks.on_epoch) hooks.on_epoch(row);

    if (row.valid_recall > result.best_valid_recall) {
      result.best_valid_recall = row.valid_recall;
      result.best_epoch = epoch;
      result.best = params;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= config.patience) break;
  }
  result.last = std::move(params);
  return result;
}

}  // namespace dsie
