#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsie/types.hpp"

namespace dsie {

struct Interaction {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;
  std::string category_id;  // may be empty

  bool operator==(const Interaction&) const = default;
};

struct UserSequence {
  UserIndex user_index = 0;
  std::vector<ItemIndex> items;  // ascending timestamp, ties in file order

  std::size_t length() const { return items.size(); }
};

struct Catalog {
  std::vector<std::string> item_ids;                   // index -> id
  std::unordered_map<std::string, ItemIndex> item_lookup;
  std::vector<std::string> user_ids;                   // index -> id
  std::vector<std::string> category_names;             // category index -> name
  std::vector<std::vector<std::int32_t>> item_categories;  // sorted, unique

  std::size_t item_count() const { return item_ids.size(); }
  std::size_t user_count() const { return user_ids.size(); }

  ItemIndex add_item(const std::string& id);
  std::int32_t intern_category(const std::string& name);
  void add_item_category(ItemIndex item, std::int32_t category);

  // Throws DataError when the id is unknown.
  ItemIndex item_index(const std::string& id) const;
};

struct Corpus {
  Catalog catalog;
  std::vector<UserSequence> sequences;  // sequences[u].user_index == u
};

struct DatasetSplit {
  std::vector<UserIndex> train;
  std::vector<UserIndex> valid;
  std::vector<UserIndex> test;
};

struct TrainingSample {
  std::vector<ItemIndex> prefix;  // length max_len, left-padded with kPadItem
  Mask mask;
  ItemIndex target = 0;
};

struct EvalSample {
  std::vector<ItemIndex> history;     // most recent max_len items of the inference part
  std::vector<ItemIndex> full_history;  // entire inference part, for exclusion
  std::vector<ItemIndex> targets;     // sorted, unique
};

// Placeholder stored in padded prefix slots; never looked up.
inline constexpr ItemIndex kPadItem = -1;

std::vector<Interaction> load_interactions(const std::filesystem::path& path);
std::vector<Interaction> parse_interactions(std::istream& in);

// Filters users and items with fewer than min_feedback interactions, items
// first then users, repeated until nothing changes.
Corpus build_corpus(const std::vector<Interaction>& interactions, int min_feedback = 3);

// Shuffles users with the seed and cuts 8:1:1 (rounded to nearest).
DatasetSplit split_users(std::size_t user_count, std::uint64_t seed);
DatasetSplit split_users(const Catalog& catalog, std::uint64_t seed);

std::vector<TrainingSample> expand_training_samples(const UserSequence& sequence, int max_len = 20);

std::vector<ItemIndex> shuffle_augment(std::span<const ItemIndex> prefix, const Mask& mask, Rng& rng);
std::vector<ItemIndex> shuffle_augment(std::span<const ItemIndex> prefix, const Mask& mask, std::uint64_t seed);

// Position j is paired with position (j + 1) mod B.
std::vector<std::size_t> in_batch_negative_indices(std::size_t batch_size);
std::vector<std::vector<ItemIndex>> in_batch_negative(const std::vector<std::vector<ItemIndex>>& prefixes);

// Targets are the last ceil(holdout_fraction * len) items. Sequences shorter
// than 2 yield nullopt; callers count them as skipped.
std::optional<EvalSample> build_eval_sample(const UserSequence& sequence, double holdout_fraction = 0.2,
                                            int max_len = 20);

struct SyntheticConfig {
  int n_users = 500;
  int n_items = 200;
  int n_clusters = 4;
  int min_length = 10;
  int max_length = 30;
  double concentration = 0.5;  // Dirichlet parameter of the per-user cluster mixture
  std::uint64_t seed = 7;
};

struct SyntheticCorpus {
  Corpus corpus;
  std::vector<Interaction> interactions;
  std::vector<std::vector<std::int32_t>> user_clusters;  // clusters each user mixes over
  std::vector<std::vector<double>> user_mixtures;        // weights aligned with user_clusters
};

SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

}  // namespace dsie
