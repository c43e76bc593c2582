#include "dsie/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>

namespace dsie {

ItemIndex Catalog::add_item(const std::string& id) {
  auto [it, inserted] = item_lookup.try_emplace(id, static_cast<ItemIndex>(item_ids.size()));
  if (inserted) {
    item_ids.push_back(id);
    item_categories.emplace_back();
  }
  return it->second;
}

std::int32_t Catalog::intern_category(const std::string& name) {
  auto it = std::find(category_names.begin(), category_names.end(), name);
  if (it != category_names.end()) return static_cast<std::int32_t>(it - category_names.begin());
  category_names.push_back(name);
  return static_cast<std::int32_t>(category_names.size() - 1);
}

void Catalog::add_item_category(ItemIndex item, std::int32_t category) {
  auto& cats = item_categories.at(static_cast<std::size_t>(item));
  auto pos = std::lower_bound(cats.begin(), cats.end(), category);
  if (pos == cats.end() || *pos != category) cats.insert(pos, category);
}

ItemIndex Catalog::item_index(const std::string& id) const {
  auto it = item_lookup.find(id);
  if (it == item_lookup.end()) throw DataError("unknown item id '" + id + "'");
  return it->second;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace

std::vector<Interaction> parse_interactions(std::istream& in) {
  std::vector<Interaction> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    auto fail = [&](const std::string& why) {
      return DataError("line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() < 3 || fields.size() > 4) throw fail("expected 3 or 4 tab-separated fields");
    Interaction row;
    row.user_id = std::string(fields[0]);
    row.item_id = std::string(fields[1]);
    if (row.user_id.empty() || row.item_id.empty()) throw fail("empty user or item id");
    auto ts = fields[2];
    auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), row.timestamp);
    if (ec != std::errc{} || ptr != ts.data() + ts.size()) throw fail("bad timestamp '" + std::string(ts) + "'");
    if (row.timestamp < 0) throw fail("negative timestamp");
    if (fields.size() == 4) row.category_id = std::string(fields[3]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Interaction> load_interactions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  return parse_interactions(in);
}

Corpus build_corpus(const std::vector<Interaction>& interactions, int min_feedback) {
  if (min_feedback < 1) throw std::invalid_argument("min_feedback must be >= 1");

  std::vector<std::uint8_t> alive(interactions.size(), 1);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      // pass 0 filters items, pass 1 filters users
      std::unordered_map<std::string_view, int> counts;
      for (std::size_t i = 0; i < interactions.size(); ++i) {
        if (!alive[i]) continue;
        const auto& r = interactions[i];
        ++counts[pass == 0 ? std::string_view(r.item_id) : std::string_view(r.user_id)];
      }
      for (std::size_t i = 0; i < interactions.size(); ++i) {
        if (!alive[i]) continue;
        const auto& r = interactions[i];
        if (counts[pass == 0 ? std::string_view(r.item_id) : std::string_view(r.user_id)] < min_feedback) {
          alive[i] = 0;
          changed = true;
        }
      }
    }
  }

  Corpus corpus;
  auto& catalog = corpus.catalog;
  std::unordered_map<std::string, UserIndex> user_lookup;
  std::vector<std::vector<std::pair<std::int64_t, ItemIndex>>> events;
  for (std::size_t i = 0; i < interactions.size(); ++i) {
    if (!alive[i]) continue;
    const auto& r = interactions[i];
    ItemIndex item = catalog.add_item(r.item_id);
    if (!r.category_id.empty()) catalog.add_item_category(item, catalog.intern_category(r.category_id));
    auto [it, inserted] = user_lookup.try_emplace(r.user_id, static_cast<UserIndex>(catalog.user_ids.size()));
    if (inserted) {
      catalog.user_ids.push_back(r.user_id);
      events.emplace_back();
    }
    events[static_cast<std::size_t>(it->second)].emplace_back(r.timestamp, item);
  }
  if (catalog.user_ids.empty()) throw DataError("corpus empty after filtering");

  corpus.sequences.resize(events.size());
  for (std::size_t u = 0; u < events.size(); ++u) {
    auto& ev = events[u];
    std::stable_sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& seq = corpus.sequences[u];
    seq.user_index = static_cast<UserIndex>(u);
    seq.items.reserve(ev.size());
    for (const auto& e : ev) seq.items.push_back(e.second);
  }
  return corpus;
}

DatasetSplit split_users(std::size_t user_count, std::uint64_t seed) {
  if (user_count < 10) throw std::invalid_argument("split_users needs at least 10 users");
  std::vector<UserIndex> order(user_count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = user_count - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }
  auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(user_count)));
  auto n_valid = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(user_count)));
  DatasetSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.valid.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                     order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), order.end());
  for (auto* part : {&split.train, &split.valid, &split.test}) std::sort(part->begin(), part->end());
  return split;
}

DatasetSplit split_users(const Catalog& catalog, std::uint64_t seed) {
  return split_users(catalog.user_count(), seed);
}

std::vector<TrainingSample> expand_training_samples(const UserSequence& sequence, int max_len) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  std::vector<TrainingSample> samples;
  const auto len = sequence.items.size();
  if (len < 2) return samples;
  samples.reserve(len - 1);
  const auto width = static_cast<std::size_t>(max_len);
  // target at 0-based position t, prefix is items[t - real, t)
  for (std::size_t t = 1; t < len; ++t) {
    TrainingSample s;
    s.prefix.assign(width, kPadItem);
    s.mask.assign(width, 0);
    const std::size_t real = std::min(t, width);
    for (std::size_t j = 0; j < real; ++j) {
      s.prefix[width - real + j] = sequence.items[t - real + j];
      s.mask[width - real + j] = 1;
    }
    s.target = sequence.items[t];
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<ItemIndex> shuffle_augment(std::span<const ItemIndex> prefix, const Mask& mask, Rng& rng) {
  std::vector<ItemIndex> out(prefix.begin(), prefix.end());
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) slots.push_back(i);
  for (std::size_t i = slots.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(out[slots[i - 1]], out[slots[pick(rng)]]);
  }
  return out;
}

std::vector<ItemIndex> shuffle_augment(std::span<const ItemIndex> prefix, const Mask& mask, std::uint64_t seed) {
  Rng rng(seed);
  return shuffle_augment(prefix, mask, rng);
}

std::vector<std::size_t> in_batch_negative_indices(std::size_t batch_size) {
  if (batch_size < 2) throw std::invalid_argument("in-batch negatives need a batch of at least 2");
  std::vector<std::size_t> idx(batch_size);
  for (std::size_t j = 0; j < batch_size; ++j) idx[j] = (j + 1) % batch_size;
  return idx;
}

std::vector<std::vector<ItemIndex>> in_batch_negative(const std::vector<std::vector<ItemIndex>>& prefixes) {
  auto idx = in_batch_negative_indices(prefixes.size());
  std::vector<std::vector<ItemIndex>> out;
  out.reserve(prefixes.size());
  for (auto j : idx) out.push_back(prefixes[j]);
  return out;
}

std::optional<EvalSample> build_eval_sample(const UserSequence& sequence, double holdout_fraction, int max_len) {
  const auto len = sequence.items.size();
  if (len < 2) return std::nullopt;
  auto n_targets = static_cast<std::size_t>(std::ceil(holdout_fraction * static_cast<double>(len) - 1e-9));
  n_targets = std::clamp<std::size_t>(n_targets, 1, len - 1);
  const std::size_t n_history = len - n_targets;

  EvalSample sample;
  sample.full_history.assign(sequence.items.begin(), sequence.items.begin() + static_cast<std::ptrdiff_t>(n_history));
  const std::size_t keep = std::min(n_history, static_cast<std::size_t>(max_len));
  sample.history.assign(sample.full_history.end() - static_cast<std::ptrdiff_t>(keep), sample.full_history.end());
  sample.targets.assign(sequence.items.begin() + static_cast<std::ptrdiff_t>(n_history), sequence.items.end());
  std::sort(sample.targets.begin(), sample.targets.end());
  sample.targets.erase(std::unique(sample.targets.begin(), sample.targets.end()), sample.targets.end());
  return sample;
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
  if (config.n_clusters < 2) throw std::invalid_argument("need >=2 clusters");
  if (config.n_items < config.n_clusters) throw std::invalid_argument("need at least one item per cluster");
  if (config.min_length < 1 || config.max_length < config.min_length)
    throw std::invalid_argument("bad sequence length range");

  Rng rng(config.seed);
  std::vector<std::vector<int>> members(static_cast<std::size_t>(config.n_clusters));
  for (int i = 0; i < config.n_items; ++i) {
    auto c = static_cast<std::size_t>(static_cast<long long>(i) * config.n_clusters / config.n_items);
    members[c].push_back(i);
  }

  SyntheticCorpus out;
  std::gamma_distribution<double> gamma(config.concentration, 1.0);
  std::uniform_int_distribution<int> length_dist(config.min_length, config.max_length);
  const int max_mix = std::min(3, config.n_clusters);
  std::uniform_int_distribution<int> mix_count(2, max_mix);

  for (int u = 0; u < config.n_users; ++u) {
    std::vector<int> clusters(static_cast<std::size_t>(config.n_clusters));
    std::iota(clusters.begin(), clusters.end(), 0);
    const int m = mix_count(rng);
    for (int i = 0; i < m; ++i) {
      std::uniform_int_distribution<int> pick(i, config.n_clusters - 1);
      std::swap(clusters[static_cast<std::size_t>(i)], clusters[static_cast<std::size_t>(pick(rng))]);
    }
    clusters.resize(static_cast<std::size_t>(m));
    std::sort(clusters.begin(), clusters.end());

    std::vector<double> weights(clusters.size());
    double total = 0.0;
    for (auto& w : weights) total += (w = std::max(gamma(rng), 1e-12));
    for (auto& w : weights) w /= total;

    // Items are drawn without replacement within a user.
    std::vector<std::vector<int>> pool;
    for (int c : clusters) pool.push_back(members[static_cast<std::size_t>(c)]);

    const int len = length_dist(rng);
    std::int64_t ts = std::uniform_int_distribution<std::int64_t>(0, 1'000'000)(rng);
    std::discrete_distribution<std::size_t> pick_cluster(weights.begin(), weights.end());
    for (int step = 0; step < len; ++step) {
      std::size_t c = pick_cluster(rng);
      if (pool[c].empty()) {
        auto it = std::find_if(pool.begin(), pool.end(), [](const auto& p) { return !p.empty(); });
        if (it == pool.end()) break;
        c = static_cast<std::size_t>(it - pool.begin());
      }
      std::uniform_int_distribution<std::size_t> pick_item(0, pool[c].size() - 1);
      const auto slot = pick_item(rng);
      const int item = pool[c][slot];
      pool[c][slot] = pool[c].back();
      pool[c].pop_back();
      ts += std::uniform_int_distribution<std::int64_t>(1, 3600)(rng);
      out.interactions.push_back({"u" + std::to_string(u), "i" + std::to_string(item), ts,
                                  "c" + std::to_string(clusters[c])});
    }
    out.user_clusters.emplace_back(clusters.begin(), clusters.end());
    out.user_mixtures.push_back(std::move(weights));
  }
  out.corpus = build_corpus(out.interactions, 1);
  return out;
}

}  // namespace dsie
