#include "dsie/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace dsie {

Metrics metrics_for_user(std::span<const ItemIndex> ranked, std::span<const ItemIndex> targets, std::size_t n) {
  Metrics m;
  if (targets.empty()) return m;
  double dcg = 0.0;
  std::size_t hits = 0;
  const auto depth = std::min(n, ranked.size());
  for (std::size_t r = 0; r < depth; ++r) {
    if (std::binary_search(targets.begin(), targets.end(), ranked[r])) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0.0;
  const auto ideal = std::min(n, targets.size());
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  m.recall = static_cast<double>(hits) / static_cast<double>(targets.size());
  m.hr = hits > 0 ? 1.0 : 0.0;
  m.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
  return m;
}

std::string to_string(EvalMode mode) { return mode == EvalMode::novelty ? "novelty" : "standard"; }

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "standard") return EvalMode::standard;
  if (name == "novelty") return EvalMode::novelty;
  throw std::invalid_argument("unknown eval mode '" + name + "'");
}

std::vector<ItemIndex> ModelRecommender::rank(std::span<const ItemIndex> history, std::size_t budget,
                                              const std::vector<std::uint8_t>& excluded) const {
  auto retrieval = recommend(history, params_, config_, budget, excluded);
  std::vector<ItemIndex> out;
  out.reserve(retrieval.items.size());
  for (const auto& s : retrieval.items) out.push_back(s.item);
  return out;
}

std::vector<ItemIndex> MostPopular::rank(std::span<const ItemIndex>, std::size_t budget,
                                         const std::vector<std::uint8_t>& excluded) const {
  std::vector<ItemIndex> out;
  for (auto item : order_) {
    if (out.size() >= budget) break;
    if (!excluded.empty() && excluded[static_cast<std::size_t>(item)]) continue;
    out.push_back(item);
  }
  return out;
}

MostPopular most_popular_baseline(const Corpus& corpus, const DatasetSplit& split) {
  std::vector<std::size_t> counts(corpus.catalog.item_count(), 0);
  for (auto u : split.train)
    for (auto item : corpus.sequences.at(static_cast<std::size_t>(u)).items) ++counts[static_cast<std::size_t>(item)];
  std::vector<ItemIndex> order(counts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<ItemIndex>(i);
  std::stable_sort(order.begin(), order.end(), [&](ItemIndex a, ItemIndex b) {
    return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
  });
  return MostPopular(std::move(order));
}

namespace {

bool shares_category(std::span<const std::int32_t> item_cats, std::span<const std::int32_t> history_cats) {
  // both sorted
  auto a = item_cats.begin();
  auto b = history_cats.begin();
  while (a != item_cats.end() && b != history_cats.end()) {
    if (*a == *b) return true;
    if (*a < *b) ++a;
    else ++b;
  }
  return false;
}

}  // namespace

std::vector<ItemIndex> novelty_filter(std::span<const ItemIndex> ranked_extended,
                                      std::span<const std::int32_t> history_categories, const Catalog& catalog,
                                      std::size_t n) {
  std::vector<ItemIndex> novel;
  std::vector<ItemIndex> filtered;
  for (auto item : ranked_extended) {
    if (shares_category(catalog.item_categories.at(static_cast<std::size_t>(item)), history_categories))
      filtered.push_back(item);
    else if (novel.size() < n)
      novel.push_back(item);
  }
  for (std::size_t i = 0; novel.size() < n && i < filtered.size(); ++i) novel.push_back(filtered[i]);
  return novel;
}

EvalReport evaluate_split(const Recommender& recommender, const Corpus& corpus, std::span<const UserIndex> users,
                          const std::string& split_name, const EvalOptions& opt) {
  const auto& catalog = corpus.catalog;
  const auto count = static_cast<std::ptrdiff_t>(users.size());
  std::vector<Metrics> per_user(users.size());
  std::vector<std::uint8_t> evaluated(users.size(), 0);

  auto run_user = [&](std::ptrdiff_t idx) {
    const auto& seq = corpus.sequences.at(static_cast<std::size_t>(users[static_cast<std::size_t>(idx)]));
    auto sample = build_eval_sample(seq, opt.holdout_fraction, opt.max_len);
    if (!sample || sample->targets.empty()) return;
    std::vector<std::uint8_t> excluded(catalog.item_count(), 0);
    for (auto item : sample->full_history) excluded[static_cast<std::size_t>(item)] = 1;

    std::vector<ItemIndex> ranked;
    if (opt.mode == EvalMode::standard) {
      ranked = recommender.rank(sample->history, opt.n, excluded);
    } else {
      std::vector<std::int32_t> history_cats;
      for (auto item : sample->full_history) {
        const auto& cats = catalog.item_categories[static_cast<std::size_t>(item)];
        history_cats.insert(history_cats.end(), cats.begin(), cats.end());
      }
      std::sort(history_cats.begin(), history_cats.end());
      history_cats.erase(std::unique(history_cats.begin(), history_cats.end()), history_cats.end());
      std::size_t shared = 0;
      for (std::size_t i = 0; i < catalog.item_count(); ++i)
        if (!excluded[i] && shares_category(catalog.item_categories[i], history_cats)) ++shared;
      const auto budget = std::max(4 * opt.n, opt.n + shared);
      auto extended = recommender.rank(sample->history, budget, excluded);
      ranked = novelty_filter(extended, history_cats, catalog, opt.n);
    }
    per_user[static_cast<std::size_t>(idx)] = metrics_for_user(ranked, sample->targets, opt.n);
    evaluated[static_cast<std::size_t>(idx)] = 1;
  };

  if (opt.exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < count; ++i) run_user(i);
  } else {
    for (std::ptrdiff_t i = 0; i < count; ++i) run_user(i);
  }

  EvalReport report;
  report.mode = opt.mode;
  report.split = split_name;
  report.n = opt.n;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (!evaluated[i]) {
      ++report.users_skipped;
      continue;
    }
    ++report.users_evaluated;
    report.recall += per_user[i].recall;
    report.ndcg += per_user[i].ndcg;
    report.hr += per_user[i].hr;
  }
  if (report.users_evaluated) {
    const auto denom = static_cast<double>(report.users_evaluated);
    report.recall /= denom;
    report.ndcg /= denom;
    report.hr /= denom;
  }
  return report;
}

const std::vector<UserIndex>& split_users_named(const DatasetSplit& split, const std::string& name) {
  if (name == "train") return split.train;
  if (name == "valid") return split.valid;
  if (name == "test") return split.test;
  throw std::invalid_argument("unknown split '" + name + "'");
}

EvalReport evaluate_checkpoint(const Checkpoint& checkpoint, const PreparedCorpus& prepared,
                               const std::string& split_name, std::size_t n, EvalMode mode) {
  const auto expected = catalog_hash(prepared.corpus.catalog);
  if (checkpoint.catalog_hash != expected) {
    std::ostringstream msg;
    msg << "checkpoint catalog hash " << std::hex << checkpoint.catalog_hash << " does not match corpus catalog hash "
        << expected;
    throw DataError(msg.str());
  }
  ModelRecommender recommender(checkpoint.params, checkpoint.config);
  EvalOptions opt;
  opt.n = n;
  opt.mode = mode;
  opt.max_len = checkpoint.config.max_len;
  return evaluate_split(recommender, prepared.corpus, split_users_named(prepared.split, split_name), split_name, opt);
}

void write_report_row(std::ostream& out, const EvalReport& r) {
  out << to_string(r.mode) << '\t' << r.split << '\t' << r.n << '\t' << std::setprecision(17) << r.recall << '\t'
      << r.ndcg << '\t' << r.hr << '\t' << r.users_evaluated << '\t' << r.users_skipped << '\n';
}

void write_report(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << kReportHeader << '\n';
  for (const auto& r : reports) write_report_row(out, r);
}

std::vector<EvalReport> read_reports(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) throw DataError("report header missing or malformed");
  std::vector<EvalReport> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string mode, split;
    EvalReport r;
    if (!std::getline(row, mode, '\t') || !std::getline(row, split, '\t') ||
        !(row >> r.n >> r.recall >> r.ndcg >> r.hr >> r.users_evaluated >> r.users_skipped))
      throw DataError("report line " + std::to_string(line_no) + " malformed");
    r.mode = parse_eval_mode(mode);
    r.split = split;
    out.push_back(r);
  }
  return out;
}

std::vector<EvalReport> read_reports(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  return read_reports(in);
}

}  // namespace dsie
