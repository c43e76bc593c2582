#include "suites.hpp"

#include <algorithm>
#include <cmath>

#include "dsie/aggregation.hpp"
#include "dsie/encoder.hpp"
#include "dsie/evaluation.hpp"
#include "dsie/interest.hpp"
#include "dsie/layers.hpp"
#include "dsie/losses.hpp"
#include "dsie/model.hpp"
#include "reference.hpp"

namespace dsie::suites {

namespace ref = dsie::reference;

double NormalizationResult::worst() const {
  return std::max({worst_readout, worst_assignment, worst_position, worst_alpha, worst_full_softmax});
}

namespace {

// init_params leaves biases at zero and gains at one; jitter everything so
// every term is exercised.
ModelParams jittered_params(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p = init_params(dims, seed);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& t : tensors(p))
    for (auto& v : t.values()) v += u(rng);
  p.item_embeddings.row(p.pad_index()).setZero();
  return p;
}

std::vector<ItemIndex> random_items(Rng& rng, int count, int item_count) {
  std::vector<ItemIndex> items;
  std::uniform_int_distribution<int> pick(0, item_count - 1);
  for (int i = 0; i < count; ++i) items.push_back(pick(rng));
  return items;
}

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Vector random_vector(Rng& rng, Eigen::Index n, double lo = -1.0, double hi = 1.0) {
  return random_matrix(rng, n, 1, lo, hi);
}

void scatter_items(const std::vector<ItemIndex>& items, const Matrix& d_rows, ModelParams& grad) {
  for (std::size_t i = 0; i < items.size(); ++i)
    grad.item_embeddings.row(items[i]) += d_rows.row(static_cast<Eigen::Index>(i));
}

std::vector<TrainingSample> random_samples(Rng& rng, int count, int item_count, int max_len) {
  std::vector<TrainingSample> out;
  while (static_cast<int>(out.size()) < count) {
    UserSequence seq;
    seq.items = random_items(rng, std::uniform_int_distribution<int>(2, max_len + 3)(rng), item_count);
    auto samples = expand_training_samples(seq, max_len);
    out.push_back(samples[std::uniform_int_distribution<std::size_t>(0, samples.size() - 1)(rng)]);
  }
  return out;
}

}  // namespace

NormalizationResult run_normalization_suite(int configurations, std::uint64_t seed) {
  NormalizationResult r;
  Rng rng(seed);
  auto draw = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  for (int c = 0; c < configurations; ++c) {
    const int d = draw(2, 12), width = draw(1, 12), layers = draw(1, 3), k = draw(1, 6);
    const int real = draw(1, width), items = draw(2, 40);
    auto p = jittered_params({items, d, layers, k}, rng());
    std::vector<ItemIndex> prefix(static_cast<std::size_t>(width), kPadItem);
    Mask mask(static_cast<std::size_t>(width), 0);
    auto chosen = random_items(rng, real, items);
    for (int i = 0; i < real; ++i) {
      prefix[static_cast<std::size_t>(width - real + i)] = chosen[static_cast<std::size_t>(i)];
      mask[static_cast<std::size_t>(width - real + i)] = 1;
    }
    auto embedded = embed_sequence(prefix, mask, p);
    auto readout = attentive_readout(residual_stack(embedded, p), embedded, p);
    r.worst_readout = std::max(r.worst_readout, std::abs(readout.weights.sum() - 1.0));

    auto set = extract_interests(embedded.rows, mask, readout.preference, p);
    for (int i = width - real; i < width; ++i)
      r.worst_assignment = std::max(r.worst_assignment, std::abs(set.assignment.col(i).sum() - 1.0));
    for (int j = 0; j < k; ++j)
      r.worst_position = std::max(r.worst_position, std::abs(set.position.row(j).sum() - 1.0));

    const double tau = std::pow(10.0, std::uniform_real_distribution<double>(-2.0, 1.0)(rng));
    auto agg = aggregate(set.interests, readout.preference, tau);
    r.worst_alpha = std::max(r.worst_alpha, std::abs(agg.alpha.sum() - 1.0));

    Vector probs = softmax(score_catalog(agg.current_interest, p));
    r.worst_full_softmax = std::max(r.worst_full_softmax, std::abs(probs.sum() - 1.0));
    ++r.configurations;
  }
  return r;
}

std::vector<GradientResult> run_gradient_suite(std::uint64_t seed) {
  const ModelDims dims{20, 8, 2, 3};
  const int n = 5;
  Rng rng(seed);
  const ModelParams p = jittered_params(dims, rng());
  const auto items = random_items(rng, n, dims.item_count);
  const Matrix e = lookup_rows(p, items);
  std::vector<GradientResult> out;

  auto record = [&](const std::string& check, const std::vector<ref::TensorCheck>& checks) {
    for (const auto& c : checks) out.push_back({check, c.name, c.rel_error, c.analytic_norm});
  };
  auto record_input = [&](const std::string& check, const std::string& name, double err) {
    out.push_back({check, "input:" + name, err});
  };

  {  // global encoder
    const Vector w = random_vector(rng, dims.dim);
    auto f = [&](const ModelParams& q) {
      EncoderTrace t;
      return w.dot(encoder_forward(lookup_rows(q, items), q, t));
    };
    ModelParams g = zeros_like(dims);
    EncoderTrace t;
    encoder_forward(e, p, t);
    scatter_items(items, encoder_backward(t, p, w, g), g);
    record("encoder", ref::check_param_gradients(p, g, f));
  }
  {  // intention assignment
    const Matrix w = random_matrix(rng, dims.interests, n);
    auto f = [&](const ModelParams& q) {
      AssignmentCache c;
      return (w.array() * assignment_forward(lookup_rows(q, items), q, c).array()).sum();
    };
    ModelParams g = zeros_like(dims);
    AssignmentCache c;
    assignment_forward(e, p, c);
    scatter_items(items, assignment_backward(e, c, p, w, g), g);
    record("assignment", ref::check_param_gradients(p, g, f));
  }
  {  // position importance
    const Matrix w = random_matrix(rng, dims.interests, n);
    auto f = [&](const ModelParams& q) {
      PositionCache c;
      return (w.array() * position_forward(lookup_rows(q, items), q, c).array()).sum();
    };
    ModelParams g = zeros_like(dims);
    PositionCache c;
    position_forward(e, p, c);
    scatter_items(items, position_backward(e, c, p, w, g), g);
    record("position", ref::check_param_gradients(p, g, f));
  }
  {  // preference-guided weights
    const Vector w = random_vector(rng, n);
    const Vector pref = random_vector(rng, dims.dim);
    auto f = [&](const ModelParams& q) {
      GuideCache c;
      return w.dot(guide_forward(lookup_rows(q, items), pref, q, c));
    };
    ModelParams g = zeros_like(dims);
    GuideCache c;
    guide_forward(e, pref, p, c);
    Matrix d_e = Matrix::Zero(n, dims.dim);
    Vector d_pref = Vector::Zero(dims.dim);
    guide_backward(c, p, w, d_e, d_pref, g);
    scatter_items(items, d_e, g);
    record("guide", ref::check_param_gradients(p, g, f));
    record_input("guide", "preference", ref::check_input_gradient<Vector>(pref, d_pref, [&](const Vector& x) {
                   GuideCache cc;
                   return w.dot(guide_forward(e, x, p, cc));
                 }));
  }
  {  // weighted pooling and normalization
    const Matrix w = random_matrix(rng, dims.interests, dims.dim);
    const Matrix assign = random_matrix(rng, dims.interests, n, 0.05, 1.0);
    const Matrix pos = random_matrix(rng, dims.interests, n, 0.05, 1.0);
    const Vector guide = random_vector(rng, n, 0.05, 1.0);
    auto pooled = [&](const Matrix& E, const Matrix& A, const Matrix& P, const Vector& a, const ModelParams& q) {
      PoolCache c;
      return (w.array() * pool_forward(E, A, P, a, q, c).array()).sum();
    };
    ModelParams g = zeros_like(dims);
    PoolCache c;
    pool_forward(e, assign, pos, guide, p, c);
    auto pg = pool_backward(c, p, w, g);
    scatter_items(items, pg.d_embedded, g);
    record("pool", ref::check_param_gradients(
                       p, g, [&](const ModelParams& q) { return pooled(lookup_rows(q, items), assign, pos, guide, q); }));
    record_input("pool", "assignment", ref::check_input_gradient<Matrix>(assign, pg.d_assignment, [&](const Matrix& x) {
                   return pooled(e, x, pos, guide, p);
                 }));
    record_input("pool", "position", ref::check_input_gradient<Matrix>(pos, pg.d_position, [&](const Matrix& x) {
                   return pooled(e, assign, x, guide, p);
                 }));
    record_input("pool", "guide", ref::check_input_gradient<Vector>(guide, pg.d_guide, [&](const Vector& x) {
                   return pooled(e, assign, pos, x, p);
                 }));
  }
  {  // aggregation
    const Matrix interests = random_matrix(rng, dims.interests, dims.dim);
    const Vector pref = random_vector(rng, dims.dim);
    const Vector w = random_vector(rng, dims.dim);
    const double tau = 0.1;
    auto out_agg = aggregate(interests, pref, tau);
    Matrix d_f = Matrix::Zero(dims.interests, dims.dim);
    Vector d_g = Vector::Zero(dims.dim);
    aggregate_backward(interests, pref, tau, out_agg, w, d_f, d_g);
    record_input("aggregate", "interests", ref::check_input_gradient<Matrix>(interests, d_f, [&](const Matrix& x) {
                   return w.dot(aggregate(x, pref, tau).current_interest);
                 }));
    record_input("aggregate", "preference", ref::check_input_gradient<Vector>(pref, d_g, [&](const Vector& x) {
                   return w.dot(aggregate(interests, x, tau).current_interest);
                 }));
  }
  {  // sampled softmax
    const Vector current = random_vector(rng, dims.dim, -2.0, 2.0);
    const ItemIndex target = items[0];
    const auto negatives = draw_negatives(rng, dims.item_count, target, 10);
    ModelParams g = zeros_like(dims);
    Vector d_r = Vector::Zero(dims.dim);
    sampled_softmax_loss(current, target, negatives, p, &d_r, &g, 1.0);
    record("sampled_softmax", ref::check_param_gradients(p, g, [&](const ModelParams& q) {
             return sampled_softmax_loss(current, target, negatives, q);
           }));
    record_input("sampled_softmax", "current_interest",
                 ref::check_input_gradient<Vector>(current, d_r, [&](const Vector& x) {
                   return sampled_softmax_loss(x, target, negatives, p);
                 }));
  }
  {  // contrastive
    const Vector a = random_vector(rng, dims.dim), b = random_vector(rng, dims.dim), c = random_vector(rng, dims.dim);
    Vector da = Vector::Zero(dims.dim), db = Vector::Zero(dims.dim), dc = Vector::Zero(dims.dim);
    bpr_contrastive_loss(a, b, c, &da, &db, &dc);
    record_input("bpr", "original", ref::check_input_gradient<Vector>(a, da, [&](const Vector& x) {
                   return bpr_contrastive_loss(x, b, c);
                 }));
    record_input("bpr", "shuffled", ref::check_input_gradient<Vector>(b, db, [&](const Vector& x) {
                   return bpr_contrastive_loss(a, x, c);
                 }));
    record_input("bpr", "negative", ref::check_input_gradient<Vector>(c, dc, [&](const Vector& x) {
                   return bpr_contrastive_loss(a, b, x);
                 }));
  }
  {  // prototype orthogonality
    ModelParams g = zeros_like(dims);
    orthogonality_regularizer(p.prototypes, g.prototypes, 1.0);
    record("orthogonality", ref::check_param_gradients(p, g, [](const ModelParams& q) {
             return orthogonality_regularizer(q.prototypes);
           }));
  }
  for (auto variant : {Variant::full, Variant::no_cl, Variant::no_gs}) {
    TrainConfig config;
    config.dim = dims.dim;
    config.max_len = n;
    config.layers = dims.layers;
    config.interests = dims.interests;
    config.negatives = 5;
    config.variant = variant;
    if (variant != Variant::full) config.beta_cl = 0.0;
    auto batch = random_samples(rng, 4, dims.item_count, n);
    auto plan = plan_batch(batch, config, dims.item_count, rng);
    ModelParams g;
    batch_objective(plan, p, config, &g, Execution::serial);
    record("total_" + to_string(variant), ref::check_param_gradients(p, g, [&](const ModelParams& q) {
             return batch_objective(plan, q, config, nullptr, Execution::serial).total;
           }));
  }
  return out;
}

OracleResult run_oracle_suite(std::uint64_t seed) {
  OracleResult r;
  Rng rng(seed);

  for (int t = 0; t < 100; ++t) {
    auto p = jittered_params({6, 4, 1, 1}, rng());
    const Vector current = random_vector(rng, 4, -3.0, 3.0);
    const ItemIndex target = static_cast<ItemIndex>(t % 6);
    std::vector<ItemIndex> negatives;
    for (ItemIndex i = 0; i < 6; ++i)
      if (i != target) negatives.push_back(i);
    std::vector<double> logits;
    for (int i = 0; i < 6; ++i) {
      double s = 0.0;
      for (int c = 0; c < 4; ++c) s += p.item_embeddings(i, c) * current[c];
      logits.push_back(s);
    }
    double z = 0.0;
    for (double l : logits) z += std::exp(l);
    const double exact = std::log(z) - logits[static_cast<std::size_t>(target)];
    r.sampled_vs_exact = std::max(r.sampled_vs_exact,
                                  std::abs(sampled_softmax_loss(current, target, negatives, p) - exact));
  }

  for (int t = 0; t < 100; ++t) {
    const int catalog = 30;
    const auto n = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 20)(rng));
    std::vector<ItemIndex> all(catalog);
    for (int i = 0; i < catalog; ++i) all[static_cast<std::size_t>(i)] = i;
    std::shuffle(all.begin(), all.end(), rng);
    const auto ranked_len = std::uniform_int_distribution<std::size_t>(0, n)(rng);
    std::vector<ItemIndex> ranked(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(ranked_len));
    std::shuffle(all.begin(), all.end(), rng);
    const auto target_len = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    std::vector<ItemIndex> targets(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(target_len));
    std::sort(targets.begin(), targets.end());
    auto got = metrics_for_user(ranked, targets, n);
    auto want = ref::brute_metrics(ranked, targets, n);
    if (got.recall != want.recall || got.ndcg != want.ndcg || got.hr != want.hr) ++r.metric_mismatches;
    ++r.metric_instances;
  }

  for (int t = 0; t < 100; ++t) {
    auto p = jittered_params({50, 6, 1, 1}, rng());
    if (t % 4 == 0) p.item_embeddings.row(11) = p.item_embeddings.row(2);
    const Vector current = random_vector(rng, 6);
    std::vector<std::uint8_t> excluded(50, 0);
    for (auto& x : excluded) x = std::uniform_int_distribution<int>(0, 7)(rng) == 0;
    std::vector<std::pair<double, ItemIndex>> all;
    for (int i = 0; i < 50; ++i) {
      if (excluded[static_cast<std::size_t>(i)]) continue;
      double s = 0.0;
      for (int c = 0; c < 6; ++c) s += p.item_embeddings(i, c) * current[c];
      all.emplace_back(-s, i);  // ascending pair order = descending score, then index
    }
    std::sort(all.begin(), all.end());
    auto got = retrieve_topn(current, p, 5, excluded);
    bool same = got.items.size() == 5;
    for (std::size_t i = 0; same && i < 5; ++i) same = got.items[i].item == all[i].second;
    if (!same) ++r.retrieval_mismatches;
    ++r.retrieval_catalogs;
  }

  r.orthogonality_example = orthogonality_regularizer(Matrix::Identity(2, 2));
  return r;
}

SpotResult run_spot_values() {
  SpotResult r;
  Vector g(3), pos(3), neg(3);
  g << 0.5, -1.0, 2.0;
  pos << 1.0, 1.0, 1.0;
  neg << 1.0, 1.0, 1.0;
  r.bpr_zero_margin = bpr_contrastive_loss(g, pos, neg);

  auto p = init_params({10, 4, 1, 1}, 3);
  for (int i = 0; i < 10; ++i) p.item_embeddings.row(i) << 0.2, -0.4, 0.1, 0.3;
  std::vector<ItemIndex> negatives = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  Vector current(4);
  current << 1.5, -0.5, 0.25, 2.0;
  r.uniform_ten_way = sampled_softmax_loss(current, 0, negatives, p);

  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    Matrix f = random_matrix(rng, 1, 7);
    auto out = aggregate(f, random_vector(rng, 7), 0.1);
    r.single_interest_max_diff = std::max(r.single_interest_max_diff,
                                          (out.current_interest - f.row(0).transpose()).cwiseAbs().maxCoeff());
  }
  return r;
}

}  // namespace dsie::suites
