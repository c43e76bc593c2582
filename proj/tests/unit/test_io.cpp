#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dsie/checkpoint.hpp"
#include "dsie/corpus_io.hpp"
#include "dsie/evaluation.hpp"
#include "dsie/run_config.hpp"

using namespace dsie;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("dsie_test_" + name + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(PreparedCorpus, RoundTripsExactly) {
  SyntheticConfig sc;
  sc.n_users = 40;
  sc.n_items = 30;
  auto syn = generate_synthetic(sc);
  auto split = split_users(syn.corpus.catalog, 3);
  auto dir = scratch("corpus");
  write_prepared_corpus(dir, syn.corpus, split);
  auto back = read_prepared_corpus(dir);
  EXPECT_EQ(back.corpus.catalog.item_ids, syn.corpus.catalog.item_ids);
  EXPECT_EQ(back.corpus.catalog.item_categories, syn.corpus.catalog.item_categories);
  EXPECT_EQ(back.corpus.catalog.user_ids, syn.corpus.catalog.user_ids);
  ASSERT_EQ(back.corpus.sequences.size(), syn.corpus.sequences.size());
  for (std::size_t u = 0; u < back.corpus.sequences.size(); ++u)
    EXPECT_EQ(back.corpus.sequences[u].items, syn.corpus.sequences[u].items);
  EXPECT_EQ(back.split.train, split.train);
  EXPECT_EQ(back.split.valid, split.valid);
  EXPECT_EQ(back.split.test, split.test);
  EXPECT_EQ(catalog_hash(back.corpus.catalog), catalog_hash(syn.corpus.catalog));

  auto dir2 = scratch("corpus2");
  write_prepared_corpus(dir2, back.corpus, back.split);
  for (const char* f : {"catalog.tsv", "sequences.tsv", "split.tsv", "users.tsv"})
    EXPECT_EQ(slurp(dir / f), slurp(dir2 / f)) << f;
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST(PreparedCorpus, StatsAndHashSensitivity) {
  Corpus c;
  c.catalog.add_item("x");
  c.catalog.add_item("y");
  c.catalog.user_ids = {"u", "v"};
  c.sequences = {{0, {0, 1, 0}}, {1, {1}}};
  auto s = corpus_stats(c);
  EXPECT_EQ(s.users, 2u);
  EXPECT_EQ(s.items, 2u);
  EXPECT_EQ(s.interactions, 4u);
  EXPECT_DOUBLE_EQ(s.mean_length, 2.0);
  const auto h = catalog_hash(c.catalog);
  c.catalog.add_item_category(1, c.catalog.intern_category("g"));
  EXPECT_NE(catalog_hash(c.catalog), h);
}

TEST(Checkpoint, RoundTripAtFloatPrecision) {
  TrainConfig config;
  config.dim = 6;
  config.layers = 2;
  config.interests = 3;
  config.tau = 0.07;
  config.variant = Variant::no_cl;
  Checkpoint ck{config, 0xdeadbeefcafeULL, init_params(config.dims(11), 5)};
  auto dir = scratch("ckpt");
  save_checkpoint(dir / "m.ckpt", ck);
  auto back = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(format_train_config(back.config), format_train_config(config));
  EXPECT_EQ(back.catalog_hash, ck.catalog_hash);
  auto a = tensors(ck.params), b = tensors(back.params);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].name, b[i].name);
    ASSERT_EQ(a[i].rows, b[i].rows);
    auto x = a[i].values(), y = b[i].values();
    for (std::size_t j = 0; j < x.size(); ++j) ASSERT_EQ(static_cast<float>(x[j]), y[j]);
  }
  // identical bytes on re-save
  save_checkpoint(dir / "again.ckpt", back);
  EXPECT_EQ(slurp(dir / "m.ckpt"), slurp(dir / "again.ckpt"));
  fs::remove_all(dir);
}

TEST(Checkpoint, RejectsGarbageAndCatalogMismatch) {
  auto dir = scratch("ckpt_bad");
  { std::ofstream(dir / "junk.ckpt") << "hello"; }
  EXPECT_THROW(load_checkpoint(dir / "junk.ckpt"), DataError);

  SyntheticConfig sc;
  sc.n_users = 30;
  sc.n_items = 20;
  auto syn = generate_synthetic(sc);
  PreparedCorpus prepared{syn.corpus, split_users(syn.corpus.catalog, 1)};
  TrainConfig config;
  config.dim = 4;
  config.layers = 1;
  config.interests = 2;
  Checkpoint ck{config, catalog_hash(syn.corpus.catalog) + 1, init_params(config.dims(20), 1)};
  EXPECT_THROW(evaluate_checkpoint(ck, prepared, "test", 5, EvalMode::standard), DataError);
  ck.catalog_hash -= 1;
  EXPECT_NO_THROW(evaluate_checkpoint(ck, prepared, "test", 5, EvalMode::standard));
  fs::remove_all(dir);
}

TEST(RunConfig, DefaultsCommentsAndOverrides) {
  std::istringstream in(
      "# comment\n"
      "\n"
      "tau = 0.02\n"
      "  interests=5  \n"
      "variant = no_gs\n"
      "corpus = data/vg\n");
  auto rc = parse_run_config(in);
  EXPECT_EQ(rc.train.tau, 0.02);
  EXPECT_EQ(rc.train.interests, 5);
  EXPECT_EQ(rc.train.variant, Variant::no_gs);
  EXPECT_EQ(rc.corpus_dir, "data/vg");
  TrainConfig defaults;
  EXPECT_EQ(rc.train.dim, defaults.dim);
  EXPECT_EQ(rc.train.batch_size, 128);
  EXPECT_EQ(rc.train.negatives, 10);
  EXPECT_EQ(rc.train.patience, 20);
  EXPECT_EQ(rc.train.alpha_reg, 0.1);
  EXPECT_EQ(rc.train.beta_cl, 0.4);
  EXPECT_EQ(rc.train.learning_rate, 0.001);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  std::istringstream unknown("temperature = 0.1\n");
  EXPECT_THROW(parse_run_config(unknown), std::invalid_argument);
  std::istringstream bad("dim = twelve\n");
  EXPECT_THROW(parse_run_config(bad), std::invalid_argument);
  std::istringstream no_eq("dim 12\n");
  EXPECT_THROW(parse_run_config(no_eq), std::invalid_argument);
}

TEST(RunConfig, FormatParseRoundTrip) {
  TrainConfig t;
  t.tau = 0.1 + 0.2;  // not exactly representable in short decimal
  t.learning_rate = 3e-4;
  t.seed = 18446744073709551615ULL;
  t.variant = Variant::no_cl;
  t.max_samples_per_user = 7;
  auto back = parse_train_config(format_train_config(t));
  EXPECT_EQ(back.tau, t.tau);
  EXPECT_EQ(back.learning_rate, t.learning_rate);
  EXPECT_EQ(back.seed, t.seed);
  EXPECT_EQ(back.variant, t.variant);
  EXPECT_EQ(format_train_config(back), format_train_config(t));
}
