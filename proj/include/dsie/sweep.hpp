#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dsie/corpus_io.hpp"
#include "dsie/evaluation.hpp"
#include "dsie/trainer.hpp"

namespace dsie {

struct SweepRow {
  std::string param;
  double value = 0.0;
  int best_epoch = 0;
  EvalReport report;
};

// Sets one sweepable hyperparameter: "tau", "S" (layers) or "K" (interests).
TrainConfig with_param(const TrainConfig& base, const std::string& param, double value);

// Trains one model per value and evaluates its best checkpoint on split_name.
std::vector<SweepRow> run_sweep(const PreparedCorpus& prepared, const TrainConfig& base, const std::string& param,
                                const std::vector<double>& values, const std::string& split_name, std::size_t n,
                                EvalMode mode = EvalMode::standard,
                                const std::function<void(const SweepRow&)>& on_row = {});

inline constexpr const char* kSweepHeader =
    "param\tvalue\tbest_epoch\tmode\tsplit\tN\trecall\tndcg\thr\tusers_evaluated\tusers_skipped";
void write_sweep(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace dsie
