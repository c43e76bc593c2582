#include "dsie/model.hpp"

#include <cmath>

#include "dsie/losses.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dsie {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_cl: return "no_cl";
    case Variant::no_gs: return "no_gs";
  }
  return "full";
}

Variant parse_variant(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "no_cl") return Variant::no_cl;
  if (name == "no_gs") return Variant::no_gs;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

void validate(const TrainConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(c.dim > 0, "dim must be positive");
  require(c.max_len > 0, "max_len must be positive");
  require(c.layers > 0, "layers must be positive");
  require(c.interests > 0, "interests must be positive");
  require(c.tau > 0.0, "tau must be positive");
  require(c.alpha_reg >= 0.0, "alpha_reg must be non-negative");
  require(c.beta_cl >= 0.0, "beta_cl must be non-negative");
  require(c.negatives > 0, "negatives must be positive");
  require(c.batch_size > 0, "batch_size must be positive");
  require(c.learning_rate > 0.0, "learning_rate must be positive");
  require(c.patience >= 0, "patience must be non-negative");
  require(c.max_epochs > 0, "max_epochs must be positive");
  require(c.max_samples_per_user >= 0, "max_samples_per_user must be non-negative");
  require(c.eval_topn > 0, "eval_topn must be positive");
}

BatchPlan plan_batch(std::span<const TrainingSample> batch, const TrainConfig& config, int item_count, Rng& rng) {
  if (config.uses_contrastive() && batch.size() < 2)
    throw std::invalid_argument("in-batch negatives need a batch of at least 2");
  BatchPlan plan;
  plan.entries.reserve(batch.size());
  for (const auto& sample : batch) {
    BatchPlan::Entry e;
    for (std::size_t i = 0; i < sample.prefix.size(); ++i)
      if (sample.mask[i]) e.items.push_back(sample.prefix[i]);
    if (e.items.empty()) throw std::invalid_argument("training sample with empty prefix");
    e.target = sample.target;
    if (config.uses_contrastive()) {
      auto shuffled = shuffle_augment(sample.prefix, sample.mask, rng);
      for (std::size_t i = 0; i < shuffled.size(); ++i)
        if (sample.mask[i]) e.shuffled.push_back(shuffled[i]);
    }
    e.negatives = draw_negatives(rng, item_count, e.target, config.negatives);
    plan.entries.push_back(std::move(e));
  }
  return plan;
}

namespace {

struct SampleWork {
  Matrix embedded;
  EncoderTrace encoder;
  InterestTrace local;
  Matrix interests;
  AggregationOutput aggregation;
  Vector current;
  Eigen::Index chosen = 0;

  Matrix shuffled_embedded;
  EncoderTrace shuffled_encoder;

  Vector d_current;
  Vector d_preference;
  Vector d_shuffled;
};

void forward_sample(const BatchPlan::Entry& e, const ModelParams& params, const TrainConfig& config, SampleWork& w) {
  w.embedded = lookup_rows(params, e.items);
  if (config.uses_global()) {
    const Vector& g = encoder_forward(w.embedded, params, w.encoder);
    w.interests = interest_forward(w.embedded, &g, params, w.local);
    w.aggregation = aggregate(w.interests, g, config.tau);
    w.current = w.aggregation.current_interest;
  } else {
    // Without the preference there is nothing to aggregate with; train the
    // interest closest to the target.
    w.interests = interest_forward(w.embedded, nullptr, params, w.local);
    Vector affinity = w.interests * params.item_embeddings.row(e.target).transpose();
    affinity.maxCoeff(&w.chosen);
    w.current = w.interests.row(w.chosen).transpose();
  }
  if (config.uses_contrastive()) {
    w.shuffled_embedded = lookup_rows(params, e.shuffled);
    encoder_forward(w.shuffled_embedded, params, w.shuffled_encoder);
  }
}

void scatter_item_grad(const std::vector<ItemIndex>& items, const Matrix& d_rows, ModelParams& grad) {
  for (std::size_t i = 0; i < items.size(); ++i)
    grad.item_embeddings.row(items[i]) += d_rows.row(static_cast<Eigen::Index>(i));
}

void backward_sample(const BatchPlan::Entry& e, const ModelParams& params, const TrainConfig& config,
                     const SampleWork& w, ModelParams& grad) {
  const Eigen::Index d = params.dims.dim;
  Matrix d_interests = Matrix::Zero(params.dims.interests, d);
  Vector d_pref = w.d_preference;
  if (config.uses_global()) {
    aggregate_backward(w.interests, w.encoder.preference, config.tau, w.aggregation, w.d_current, d_interests,
                       d_pref);
  } else {
    d_interests.row(w.chosen) += w.d_current.transpose();
  }
  Matrix d_embedded = Matrix::Zero(w.embedded.rows(), d);
  interest_backward(w.local, params, d_interests, d_embedded, d_pref, grad);
  if (config.uses_global()) d_embedded += encoder_backward(w.encoder, params, d_pref, grad);
  scatter_item_grad(e.items, d_embedded, grad);
  if (config.uses_contrastive()) {
    Matrix d_shuffled = encoder_backward(w.shuffled_encoder, params, w.d_shuffled, grad);
    scatter_item_grad(e.shuffled, d_shuffled, grad);
  }
}

int thread_count(Execution exec) {
#ifdef _OPENMP
  if (exec == Execution::parallel) return omp_get_max_threads();
#endif
  (void)exec;
  return 1;
}

}  // namespace

LossBreakdown batch_objective(const BatchPlan& plan, const ModelParams& params, const TrainConfig& config,
                              ModelParams* grad, Execution exec) {
  const auto batch = static_cast<std::ptrdiff_t>(plan.entries.size());
  if (batch == 0) throw std::invalid_argument("empty batch");
  const bool contrastive = config.uses_contrastive();
  if (contrastive && batch < 2) throw std::invalid_argument("in-batch negatives need a batch of at least 2");
  std::vector<SampleWork> work(plan.entries.size());

  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < batch; ++i) forward_sample(plan.entries[i], params, config, work[i]);
  } else {
    for (std::ptrdiff_t i = 0; i < batch; ++i) forward_sample(plan.entries[i], params, config, work[i]);
  }

  // Loss heads couple samples (in-batch negatives) and are cheap: serial.
  if (grad) {
    if (grad->dims != params.dims) *grad = zeros_like(params.dims);
    else set_zero(*grad);
  }
  const double inv_b = 1.0 / static_cast<double>(batch);
  const Eigen::Index d = params.dims.dim;
  LossBreakdown out;
  for (std::ptrdiff_t i = 0; i < batch; ++i) {
    auto& w = work[i];
    w.d_current = Vector::Zero(d);
    w.d_preference = Vector::Zero(d);
    w.d_shuffled = Vector::Zero(d);
    const auto& e = plan.entries[i];
    out.main += sampled_softmax_loss(w.current, e.target, e.negatives, params, grad ? &w.d_current : nullptr, grad,
                                     inv_b);
  }
  out.main *= inv_b;
  if (contrastive) {
    const double scale = config.beta_cl * inv_b;
    for (std::ptrdiff_t i = 0; i < batch; ++i) {
      auto& w = work[i];
      auto& neighbour = work[(i + 1) % batch];
      out.contrastive += bpr_contrastive_loss(
          w.encoder.preference, w.shuffled_encoder.preference, neighbour.encoder.preference,
          grad ? &w.d_preference : nullptr, grad ? &w.d_shuffled : nullptr, grad ? &neighbour.d_preference : nullptr,
          scale);
    }
    out.contrastive *= inv_b;
  }
  if (grad) out.aux = orthogonality_regularizer(params.prototypes, grad->prototypes, config.alpha_reg);
  else out.aux = orthogonality_regularizer(params.prototypes);
  out.total = out.main + config.alpha_reg * out.aux + config.beta_cl * out.contrastive;
  if (!grad) return out;

  const int threads = thread_count(exec);
  if (threads <= 1) {
    for (std::ptrdiff_t i = 0; i < batch; ++i) backward_sample(plan.entries[i], params, config, work[i], *grad);
  } else {
    std::vector<ModelParams> partial(static_cast<std::size_t>(threads));
#pragma omp parallel num_threads(threads)
    {
#ifdef _OPENMP
      auto& local = partial[static_cast<std::size_t>(omp_get_thread_num())];
#else
      auto& local = partial[0];
#endif
      local = zeros_like(params.dims);
#pragma omp for schedule(static)
      for (std::ptrdiff_t i = 0; i < batch; ++i) backward_sample(plan.entries[i], params, config, work[i], local);
    }
    // fixed reduction order keeps runs reproducible for a given thread count
    for (const auto& local : partial) add_into(*grad, local);
  }
  grad->item_embeddings.row(params.pad_index()).setZero();
  return out;
}

LossBreakdown total_loss(std::span<const TrainingSample> batch, const ModelParams& params, const TrainConfig& config,
                         Rng& rng) {
  auto plan = plan_batch(batch, config, params.dims.item_count, rng);
  return batch_objective(plan, params, config, nullptr, Execution::serial);
}

UserRepresentation represent_user(std::span<const ItemIndex> history, const ModelParams& params,
                                  const TrainConfig& config) {
  if (history.empty()) throw std::invalid_argument("empty sequence");
  const auto keep = std::min(history.size(), static_cast<std::size_t>(config.max_len));
  auto recent = history.subspan(history.size() - keep);
  Matrix embedded = lookup_rows(params, recent);
  UserRepresentation rep;
  InterestTrace local;
  if (config.uses_global()) {
    EncoderTrace trace;
    rep.preference = encoder_forward(embedded, params, trace);
    rep.interests = interest_forward(embedded, &*rep.preference, params, local);
    rep.aggregation = aggregate(rep.interests, *rep.preference, config.tau);
  } else {
    rep.interests = interest_forward(embedded, nullptr, params, local);
  }
  return rep;
}

Retrieval recommend(std::span<const ItemIndex> history, const ModelParams& params, const TrainConfig& config,
                    std::size_t n, const std::vector<std::uint8_t>& excluded) {
  auto rep = represent_user(history, params, config);
  if (rep.aggregation) return retrieve_topn(rep.aggregation->current_interest, params, n, excluded);
  return retrieve_multi_interest(rep.interests, params, n, excluded);
}

}  // namespace dsie
