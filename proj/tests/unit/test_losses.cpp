#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dsie/losses.hpp"
#include "dsie/model.hpp"
#include "dsie/run_config.hpp"
#include "dsie/trainer.hpp"

using namespace dsie;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.dim = 8;
  c.max_len = 5;
  c.layers = 2;
  c.interests = 3;
  c.negatives = 4;
  c.batch_size = 4;
  return c;
}

std::vector<TrainingSample> tiny_batch(int item_count, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainingSample> out;
  while (static_cast<int>(out.size()) < count) {
    UserSequence seq;
    const int len = std::uniform_int_distribution<int>(2, 8)(rng);
    for (int i = 0; i < len; ++i) seq.items.push_back(std::uniform_int_distribution<int>(0, item_count - 1)(rng));
    for (auto& s : expand_training_samples(seq, 5)) {
      if (static_cast<int>(out.size()) < count) out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace

TEST(DrawNegatives, DistinctAndNeverTarget) {
  Rng rng(1);
  for (int count : {6, 11, 50, 1000}) {
    for (int t = 0; t < 100; ++t) {
      const ItemIndex target = static_cast<ItemIndex>(t % count);
      auto neg = draw_negatives(rng, count, target, 5);
      std::set<ItemIndex> s(neg.begin(), neg.end());
      ASSERT_EQ(s.size(), 5u);
      ASSERT_FALSE(s.count(target));
      ASSERT_GE(*s.begin(), 0);
      ASSERT_LT(*s.rbegin(), count);
    }
  }
  EXPECT_THROW(draw_negatives(rng, 5, 0, 5), std::invalid_argument);
}

TEST(SampledSoftmax, CertainPositiveApproachesZero) {
  auto p = init_params({6, 2, 1, 1}, 1);
  p.item_embeddings.topRows(6).setConstant(0.0);
  p.item_embeddings.row(0) << 50, 0;
  for (int i = 1; i < 6; ++i) p.item_embeddings.row(i) << -50, 0;
  Vector r(2);
  r << 1, 0;
  std::vector<ItemIndex> neg = {1, 2, 3, 4, 5};
  EXPECT_LT(sampled_softmax_loss(r, 0, neg, p), 1e-30);
}

TEST(SampledSoftmax, UniformTenWayIsLnTen) {
  auto p = init_params({10, 3, 1, 1}, 2);
  for (int i = 0; i < 10; ++i) p.item_embeddings.row(i) << 0.3, -0.1, 0.7;
  std::vector<ItemIndex> neg = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_NEAR(sampled_softmax_loss(Vector::Random(3), 0, neg, p), std::log(10.0), 1e-9);
}

TEST(SampledSoftmax, AllNonTargetsEqualsFullCrossEntropy) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    auto p = init_params({6, 4, 1, 1}, rng());
    Vector r = Vector::Random(4) * 2;
    const ItemIndex target = static_cast<ItemIndex>(t % 6);
    std::vector<ItemIndex> neg;
    for (ItemIndex i = 0; i < 6; ++i)
      if (i != target) neg.push_back(i);
    // exact -log p(target) under the softmax over the whole catalog
    double z = 0.0;
    for (int i = 0; i < 6; ++i) z += std::exp(p.item_embeddings.row(i).dot(r));
    const double exact = -std::log(std::exp(p.item_embeddings.row(target).dot(r)) / z);
    EXPECT_NEAR(sampled_softmax_loss(r, target, neg, p), exact, 1e-6);
  }
}

TEST(SampledSoftmax, BatchFormAveragesAndRejectsSmallCatalog) {
  auto p = init_params({4, 3, 1, 1}, 4);
  Matrix rows = Matrix::Random(2, 3);
  std::vector<ItemIndex> targets = {0, 1};
  Rng rng(5);
  EXPECT_THROW(sampled_softmax_loss(rows, targets, p, 4, rng), std::invalid_argument);
  Rng a(6), b(6);
  const double batch = sampled_softmax_loss(rows, targets, p, 3, a);
  double manual = 0.0;
  for (int i = 0; i < 2; ++i) {
    auto neg = draw_negatives(b, 4, targets[i], 3);
    manual += sampled_softmax_loss(rows.row(i).transpose(), targets[i], neg, p);
  }
  EXPECT_NEAR(batch, manual / 2, 1e-15);
}

TEST(BprLoss, SpotValues) {
  Vector g(2), pos(2), neg(2);
  g << 1, 0;
  pos << 0.3, 5;
  neg << 0.3, -2;
  EXPECT_NEAR(bpr_contrastive_loss(g, pos, neg), std::log(2.0), 1e-9);
  pos << 1.3, 0;  // margin 1
  EXPECT_NEAR(bpr_contrastive_loss(g, pos, neg), 0.31326168751822286, 1e-12);
  pos << 1000, 0;
  EXPECT_LT(bpr_contrastive_loss(g, pos, neg), 1e-300);
}

TEST(BprLoss, InvariantToCommonRotation) {
  Matrix q = Matrix::Random(4, 4).householderQr().householderQ();
  for (int t = 0; t < 20; ++t) {
    Vector a = Vector::Random(4), b = Vector::Random(4), c = Vector::Random(4);
    EXPECT_NEAR(bpr_contrastive_loss(a, b, c), bpr_contrastive_loss(Vector(q * a), Vector(q * b), Vector(q * c)), 1e-12);
  }
}

TEST(BprLoss, MatrixFormIsRowMean) {
  Matrix a = Matrix::Random(3, 4), b = Matrix::Random(3, 4), c = Matrix::Random(3, 4);
  double manual = 0.0;
  for (int r = 0; r < 3; ++r)
    manual += bpr_contrastive_loss(Vector(a.row(r).transpose()), Vector(b.row(r).transpose()),
                                   Vector(c.row(r).transpose()));
  EXPECT_NEAR(bpr_contrastive_loss(a, b, c), manual / 3, 1e-15);
}

TEST(TotalLoss, BreakdownIsExactWeightedSum) {
  auto config = tiny_config();
  auto p = init_params(config.dims(20), 7);
  auto batch = tiny_batch(20, 6, 8);
  Rng weights(9);
  for (int t = 0; t < 10; ++t) {
    config.alpha_reg = std::uniform_real_distribution<double>(0, 2)(weights);
    config.beta_cl = std::uniform_real_distribution<double>(0.01, 2)(weights);
    Rng rng(10);
    auto loss = total_loss(batch, p, config, rng);
    EXPECT_EQ(loss.total, loss.main + config.alpha_reg * loss.aux + config.beta_cl * loss.contrastive);
    EXPECT_GE(loss.main, 0.0);
    EXPECT_GE(loss.aux, 0.0);
    EXPECT_GE(loss.contrastive, 0.0);
  }
}

TEST(TotalLoss, ZeroWeightsGiveMainOnly) {
  auto config = tiny_config();
  config.alpha_reg = 0;
  config.beta_cl = 0;
  auto p = init_params(config.dims(20), 7);
  Rng rng(11);
  auto loss = total_loss(tiny_batch(20, 5, 3), p, config, rng);
  EXPECT_EQ(loss.total, loss.main);
  EXPECT_EQ(loss.contrastive, 0.0);
}

TEST(TotalLoss, DeterministicWithFrozenRng) {
  auto config = tiny_config();
  auto p = init_params(config.dims(20), 7);
  auto batch = tiny_batch(20, 6, 4);
  Rng a(12), b(12);
  auto x = total_loss(batch, p, config, a), y = total_loss(batch, p, config, b);
  EXPECT_EQ(x.main, y.main);
  EXPECT_EQ(x.aux, y.aux);
  EXPECT_EQ(x.contrastive, y.contrastive);
  EXPECT_EQ(x.total, y.total);
}

TEST(BatchObjective, SerialAndParallelAgree) {
  for (auto variant : {Variant::full, Variant::no_cl, Variant::no_gs}) {
    auto config = ablation_variant(tiny_config(), variant);
    auto p = init_params(config.dims(20), 13);
    auto batch = tiny_batch(20, 16, 14);
    Rng rng(15);
    auto plan = plan_batch(batch, config, 20, rng);
    ModelParams gs, gp;
    auto ls = batch_objective(plan, p, config, &gs, Execution::serial);
    auto lp = batch_objective(plan, p, config, &gp, Execution::parallel);
    EXPECT_NEAR(ls.total, lp.total, 1e-12);
    auto ts = tensors(gs), tp = tensors(gp);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      auto a = ts[i].values(), b = tp[i].values();
      for (std::size_t j = 0; j < a.size(); ++j) ASSERT_NEAR(a[j], b[j], 1e-12) << ts[i].name;
    }
  }
}

TEST(BatchObjective, OneStepMovesEveryTensorButThePadRow) {
  auto config = tiny_config();
  auto p = init_params(config.dims(20), 16);
  auto batch = tiny_batch(20, 8, 17);
  Rng rng(18);
  auto plan = plan_batch(batch, config, 20, rng);
  ModelParams grad;
  batch_objective(plan, p, config, &grad, Execution::serial);
  ModelParams after = p;
  Adam adam(after, 1e-3);
  adam.step(after, grad);
  auto before_t = tensors(p), after_t = tensors(after);
  for (std::size_t i = 0; i < before_t.size(); ++i) {
    auto a = before_t[i].values(), b = after_t[i].values();
    bool moved = false;
    for (std::size_t j = 0; j < a.size(); ++j) moved = moved || a[j] != b[j];
    EXPECT_TRUE(moved) << before_t[i].name;
  }
  EXPECT_TRUE(after.item_embeddings.row(p.pad_index()).isZero(0.0));
}

TEST(AblationVariant, FieldEdits) {
  TrainConfig base;
  auto full = ablation_variant(base, Variant::full);
  EXPECT_EQ(format_train_config(full), format_train_config(base));
  auto no_cl = ablation_variant(base, Variant::no_cl);
  EXPECT_EQ(no_cl.beta_cl, 0.0);
  EXPECT_EQ(no_cl.tau, base.tau);
  EXPECT_EQ(no_cl.alpha_reg, base.alpha_reg);
  auto no_gs = ablation_variant(base, Variant::no_gs);
  EXPECT_FALSE(no_gs.uses_global());
  EXPECT_FALSE(no_gs.uses_contrastive());
  EXPECT_THROW(parse_variant("no_xy"), std::invalid_argument);
}
