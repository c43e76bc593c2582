#include "dsie/sweep.hpp"

#include <cmath>
#include <ostream>

namespace dsie {

TrainConfig with_param(const TrainConfig& base, const std::string& param, double value) {
  TrainConfig out = base;
  auto as_count = [&](const char* what) {
    if (value < 1.0 || std::floor(value) != value)
      throw std::invalid_argument(std::string(what) + " must be a positive integer");
    return static_cast<int>(value);
  };
  if (param == "tau") out.tau = value;
  else if (param == "S") out.layers = as_count("S");
  else if (param == "K") out.interests = as_count("K");
  else throw std::invalid_argument("cannot sweep '" + param + "' (expected tau, S or K)");
  validate(out);
  return out;
}

std::vector<SweepRow> run_sweep(const PreparedCorpus& prepared, const TrainConfig& base, const std::string& param,
                                const std::vector<double>& values, const std::string& split_name, std::size_t n,
                                EvalMode mode, const std::function<void(const SweepRow&)>& on_row) {
  std::vector<SweepRow> rows;
  for (double value : values) {
    auto config = with_param(base, param, value);
    auto result = train(prepared.corpus, prepared.split, config);
    ModelRecommender recommender(result.best, config);
    EvalOptions opt;
    opt.n = n;
    opt.mode = mode;
    opt.max_len = config.max_len;
    SweepRow row;
    row.param = param;
    row.value = value;
    row.best_epoch = result.best_epoch;
    row.report = evaluate_split(recommender, prepared.corpus, split_users_named(prepared.split, split_name),
                                split_name, opt);
    if (on_row) on_row(row);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepHeader << '\n';
  for (const auto& row : rows) {
    out << row.param << '\t' << row.value << '\t' << row.best_epoch << '\t';
    write_report_row(out, row.report);
  }
}

}  // namespace dsie
