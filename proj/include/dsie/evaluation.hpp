#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dsie/checkpoint.hpp"
#include "dsie/corpus_io.hpp"
#include "dsie/dataset.hpp"
#include "dsie/model.hpp"

namespace dsie {

struct Metrics {
  double recall = 0.0;
  double ndcg = 0.0;
  double hr = 0.0;
};

// ranked: at most n distinct items. targets: sorted, unique, non-empty.
Metrics metrics_for_user(std::span<const ItemIndex> ranked, std::span<const ItemIndex> targets, std::size_t n);

enum class EvalMode { standard, novelty };

std::string to_string(EvalMode mode);
EvalMode parse_eval_mode(const std::string& name);

struct EvalReport {
  EvalMode mode = EvalMode::standard;
  std::string split;
  std::size_t n = 50;
  double recall = 0.0;
  double ndcg = 0.0;
  double hr = 0.0;
  std::size_t users_evaluated = 0;
  std::size_t users_skipped = 0;
};

// Anything that can rank the catalog for a user history. Must be safe to
// call concurrently.
class Recommender {
 public:
  virtual ~Recommender() = default;
  // history: inference items, oldest first. Returns up to budget items, best
  // first, never any excluded item.
  virtual std::vector<ItemIndex> rank(std::span<const ItemIndex> history, std::size_t budget,
                                      const std::vector<std::uint8_t>& excluded) const = 0;
};

class ModelRecommender final : public Recommender {
 public:
  ModelRecommender(const ModelParams& params, const TrainConfig& config) : params_(params), config_(config) {}
  std::vector<ItemIndex> rank(std::span<const ItemIndex> history, std::size_t budget,
                              const std::vector<std::uint8_t>& excluded) const override;

 private:
  const ModelParams& params_;
  TrainConfig config_;
};

// Static ranking by training-set interaction count, ties by item index.
class MostPopular final : public Recommender {
 public:
  explicit MostPopular(std::vector<ItemIndex> order) : order_(std::move(order)) {}
  const std::vector<ItemIndex>& order() const { return order_; }
  std::vector<ItemIndex> rank(std::span<const ItemIndex> history, std::size_t budget,
                              const std::vector<std::uint8_t>& excluded) const override;

 private:
  std::vector<ItemIndex> order_;
};

MostPopular most_popular_baseline(const Corpus& corpus, const DatasetSplit& split);

// Keeps candidates whose categories miss history_categories, in rank order,
// then backfills with the best filtered ones until n items.
std::vector<ItemIndex> novelty_filter(std::span<const ItemIndex> ranked_extended,
                                      std::span<const std::int32_t> history_categories, const Catalog& catalog,
                                      std::size_t n);

struct EvalOptions {
  std::size_t n = 50;
  EvalMode mode = EvalMode::standard;
  int max_len = 20;
  double holdout_fraction = 0.2;
  Execution exec = Execution::parallel;
};

EvalReport evaluate_split(const Recommender& recommender, const Corpus& corpus, std::span<const UserIndex> users,
                          const std::string& split_name, const EvalOptions& options);

// Refuses when the checkpoint was trained on a different catalog.
EvalReport evaluate_checkpoint(const Checkpoint& checkpoint, const PreparedCorpus& prepared,
                               const std::string& split_name, std::size_t n, EvalMode mode);

const std::vector<UserIndex>& split_users_named(const DatasetSplit& split, const std::string& name);

// Tab-separated with a header row.
inline constexpr const char* kReportHeader = "mode\tsplit\tN\trecall\tndcg\thr\tusers_evaluated\tusers_skipped";
void write_report_row(std::ostream& out, const EvalReport& report);
void write_report(const std::filesystem::path& path, const std::vector<EvalReport>& reports);
std::vector<EvalReport> read_reports(std::istream& in);
std::vector<EvalReport> read_reports(const std::filesystem::path& path);

}  // namespace dsie
