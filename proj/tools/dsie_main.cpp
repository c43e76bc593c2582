// dsie: prepare corpora, train, evaluate and query the dual-scale interest
// recommender.
//
// Configuration precedence: built-in defaults < --config file < flags.
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "dsie/checkpoint.hpp"
#include "dsie/corpus_io.hpp"
#include "dsie/dataset.hpp"
#include "dsie/evaluation.hpp"
#include "dsie/run_config.hpp"
#include "dsie/sweep.hpp"
#include "dsie/trainer.hpp"

namespace {

using namespace dsie;

// Flags that map 1:1 onto config keys.
struct Overrides {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_file;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    options[key] = app->add_option(flag, values[key], help);
  }

  void add_training(CLI::App* app) {
    app->add_option("--config", config_file, "key = value configuration file")->check(CLI::ExistingFile);
    app->footer("Precedence: command-line flags, then --config values, then built-in defaults.");
    add(app, "--dim", "dim", "hidden dimension d");
    add(app, "--max-len", "max_len", "maximum prefix length L");
    add(app, "--layers", "layers", "residual blocks S");
    add(app, "--interests", "interests", "intention prototypes K");
    add(app, "--tau", "tau", "aggregation temperature");
    add(app, "--alpha", "alpha_reg", "orthogonality weight");
    add(app, "--beta", "beta_cl", "contrastive weight");
    add(app, "--negatives", "negatives", "sampled softmax negatives");
    add(app, "--batch-size", "batch_size", "batch size");
    add(app, "--lr", "learning_rate", "Adam learning rate");
    add(app, "--patience", "patience", "early stopping patience in epochs");
    add(app, "--max-epochs", "max_epochs", "epoch cap");
    add(app, "--max-samples-per-user", "max_samples_per_user", "keep the most recent prefixes per user (0 = all)");
    add(app, "--seed", "seed", "training seed");
    options["variant"] = app->add_option("--variant", values["variant"], "full, no_cl or no_gs")
                             ->check(CLI::IsMember({"full", "no_cl", "no_gs"}));
  }

  RunConfig resolve() const {
    RunConfig config = config_file.empty() ? RunConfig{} : load_run_config(config_file);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) apply_setting(config, key, values.at(key));
    return config;
  }
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

void print_stats(const Corpus& corpus) {
  auto s = corpus_stats(corpus);
  std::cout << "users\titems\tinteractions\tavg_length\n"
            << s.users << '\t' << s.items << '\t' << s.interactions << '\t' << std::fixed << std::setprecision(3)
            << s.mean_length << '\n';
}

int cmd_prepare(const std::string& input, const std::string& output, int min_feedback, std::uint64_t seed) {
  auto interactions = load_interactions(input);
  auto corpus = build_corpus(interactions, min_feedback);
  auto split = split_users(corpus.catalog, seed);
  write_prepared_corpus(output, corpus, split);
  print_stats(corpus);
  return 0;
}

int cmd_synth(const SyntheticConfig& config, const std::string& output, std::uint64_t split_seed) {
  auto synth = generate_synthetic(config);
  auto split = split_users(synth.corpus.catalog, split_seed);
  write_prepared_corpus(output, synth.corpus, split);
  std::ofstream raw(std::filesystem::path(output) / "interactions.tsv");
  for (const auto& r : synth.interactions)
    raw << r.user_id << '\t' << r.item_id << '\t' << r.timestamp << '\t' << r.category_id << '\n';
  print_stats(synth.corpus);
  return 0;
}

int cmd_train(const RunConfig& run) {
  if (run.corpus_dir.empty() || run.checkpoint_path.empty())
    throw std::invalid_argument("train needs a corpus directory and a checkpoint path");
  auto prepared = read_prepared_corpus(run.corpus_dir);
  auto config = ablation_variant(run.train, run.train.variant);
  std::ofstream log_file;
  if (!run.log_path.empty()) {
    log_file.open(run.log_path);
    if (!log_file) throw std::ios_base::failure("cannot write " + run.log_path);
  }
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& row) {
    write_log_row(std::cerr, row);
    if (log_file) {
      write_log_row(log_file, row);
      log_file.flush();
    }
  };
  auto result = train(prepared.corpus, prepared.split, config, hooks);
  const auto hash = catalog_hash(prepared.corpus.catalog);
  save_checkpoint(run.checkpoint_path, {config, hash, result.best});
  save_checkpoint(run.checkpoint_path + ".final", {config, hash, result.last});
  std::cout << "best_epoch\t" << result.best_epoch << "\tvalid_recall@" << config.eval_topn << '\t'
            << result.best_valid_recall << '\n';
  return 0;
}

int cmd_eval(const std::string& corpus_dir, const std::string& checkpoint_path, bool baseline,
             const std::string& split_name, const std::string& mode, std::size_t topn, const std::string& report) {
  auto prepared = read_prepared_corpus(corpus_dir);
  EvalReport result;
  if (baseline) {
    auto popular = most_popular_baseline(prepared.corpus, prepared.split);
    EvalOptions opt;
    opt.n = topn;
    opt.mode = parse_eval_mode(mode);
    result = evaluate_split(popular, prepared.corpus, split_users_named(prepared.split, split_name), split_name, opt);
  } else {
    auto checkpoint = load_checkpoint(checkpoint_path);
    result = evaluate_checkpoint(checkpoint, prepared, split_name, topn, parse_eval_mode(mode));
  }
  std::cout << kReportHeader << '\n';
  write_report_row(std::cout, result);
  if (!report.empty()) write_report(report, {result});
  return 0;
}

int cmd_retrieve(const std::string& corpus_dir, const std::string& checkpoint_path, const std::string& items,
                 std::size_t topn) {
  auto prepared = read_prepared_corpus(corpus_dir);
  auto checkpoint = load_checkpoint(checkpoint_path);
  const auto& catalog = prepared.corpus.catalog;
  if (checkpoint.catalog_hash != catalog_hash(catalog))
    throw DataError("checkpoint was trained on a different catalog");
  std::vector<ItemIndex> history;
  for (const auto& id : split_csv(items)) history.push_back(catalog.item_index(id));
  if (history.empty()) throw DataError("no history items given");
  std::vector<std::uint8_t> excluded(catalog.item_count(), 0);
  for (auto item : history) excluded[static_cast<std::size_t>(item)] = 1;
  auto retrieval = recommend(history, checkpoint.params, checkpoint.config, topn, excluded);
  std::cout << std::setprecision(6);
  for (std::size_t r = 0; r < retrieval.items.size(); ++r)
    std::cout << r + 1 << ' ' << catalog.item_ids[static_cast<std::size_t>(retrieval.items[r].item)] << ' '
              << retrieval.items[r].score << '\n';
  if (retrieval.short_list) std::cerr << "note: fewer than " << topn << " candidates after exclusion\n";
  return 0;
}

int cmd_sweep(const RunConfig& run, const std::string& param, const std::string& values, const std::string& split_name,
              const std::string& mode, std::size_t topn) {
  if (run.corpus_dir.empty()) throw std::invalid_argument("sweep needs a corpus directory");
  auto prepared = read_prepared_corpus(run.corpus_dir);
  std::vector<double> grid;
  for (const auto& v : split_csv(values)) grid.push_back(std::stod(v));
  if (grid.empty()) throw std::invalid_argument("no sweep values given");
  auto base = ablation_variant(run.train, run.train.variant);
  auto rows = run_sweep(prepared, base, param, grid, split_name, topn, parse_eval_mode(mode),
                        [](const SweepRow& row) {
                          std::cerr << row.param << '=' << row.value << " recall=" << row.report.recall << '\n';
                        });
  write_sweep(std::cout, rows);
  if (!run.report_path.empty()) {
    std::ofstream out(run.report_path);
    if (!out) throw std::ios_base::failure("cannot write " + run.report_path);
    write_sweep(out, rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-scale interest extraction recommender"};
  app.require_subcommand(1);

  auto* prepare = app.add_subcommand("prepare", "filter, index and split a raw interactions file");
  std::string input, output;
  int min_feedback = 3;
  std::uint64_t split_seed = 0;
  prepare->add_option("--input", input, "user<TAB>item<TAB>timestamp<TAB>category file")->required();
  prepare->add_option("--output", output, "prepared corpus directory")->required();
  prepare->add_option("--min-feedback", min_feedback, "minimum interactions per user and item")
      ->check(CLI::PositiveNumber);
  prepare->add_option("--seed", split_seed, "user split seed");

  auto* synth = app.add_subcommand("synth", "generate a synthetic multi-interest corpus");
  SyntheticConfig synth_config;
  std::string synth_output;
  std::uint64_t synth_split_seed = 0;
  synth->add_option("--output", synth_output, "prepared corpus directory")->required();
  synth->add_option("--users", synth_config.n_users);
  synth->add_option("--items", synth_config.n_items);
  synth->add_option("--clusters", synth_config.n_clusters);
  synth->add_option("--min-len", synth_config.min_length);
  synth->add_option("--max-len", synth_config.max_length);
  synth->add_option("--concentration", synth_config.concentration, "Dirichlet parameter of user mixtures");
  synth->add_option("--seed", synth_config.seed);
  synth->add_option("--split-seed", synth_split_seed);

  auto* train_cmd = app.add_subcommand("train", "train a model and write the best checkpoint");
  Overrides train_over;
  train_over.add_training(train_cmd);
  train_over.add(train_cmd, "--corpus", "corpus", "prepared corpus directory");
  train_over.add(train_cmd, "--checkpoint", "checkpoint", "output checkpoint (final one gets .final)");
  train_over.add(train_cmd, "--log", "log", "per-epoch training log");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint or the MostPopular baseline");
  std::string eval_corpus, eval_checkpoint, eval_split = "test", eval_mode = "standard", eval_report;
  std::size_t eval_topn = 50;
  bool eval_baseline = false;
  eval->add_option("--corpus", eval_corpus)->required();
  auto* ckpt_opt = eval->add_option("--checkpoint", eval_checkpoint);
  auto* base_opt = eval->add_flag("--most-popular", eval_baseline, "evaluate the popularity baseline");
  ckpt_opt->excludes(base_opt);
  eval->add_option("--split", eval_split)->check(CLI::IsMember({"train", "valid", "test"}));
  eval->add_option("--mode", eval_mode)->check(CLI::IsMember({"standard", "novelty"}));
  eval->add_option("--topn", eval_topn)->check(CLI::PositiveNumber);
  eval->add_option("--report", eval_report, "write the report table here");

  auto* retrieve = app.add_subcommand("retrieve", "top-N items for a history of item ids");
  std::string ret_corpus, ret_checkpoint, ret_items;
  std::size_t ret_topn = 50;
  retrieve->add_option("--corpus", ret_corpus)->required();
  retrieve->add_option("--checkpoint", ret_checkpoint)->required();
  retrieve->add_option("--items", ret_items, "comma-separated item ids, oldest first")->required();
  retrieve->add_option("--topn", ret_topn)->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "train and evaluate over a list of values of tau, S or K");
  Overrides sweep_over;
  sweep_over.add_training(sweep);
  sweep_over.add(sweep, "--corpus", "corpus", "prepared corpus directory");
  sweep_over.add(sweep, "--report", "report", "write the sweep table here");
  std::string sweep_param, sweep_values, sweep_split = "valid", sweep_mode = "standard";
  std::size_t sweep_topn = 50;
  sweep->add_option("--param", sweep_param)->required()->check(CLI::IsMember({"tau", "S", "K"}));
  sweep->add_option("--values", sweep_values, "comma-separated values")->required();
  sweep->add_option("--split", sweep_split)->check(CLI::IsMember({"train", "valid", "test"}));
  sweep->add_option("--mode", sweep_mode)->check(CLI::IsMember({"standard", "novelty"}));
  sweep->add_option("--topn", sweep_topn)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (*eval && !eval_baseline && eval_checkpoint.empty()) {
    std::cerr << "eval: one of --checkpoint or --most-popular is required\n";
    return 2;
  }

  try {
    if (*prepare) return cmd_prepare(input, output, min_feedback, split_seed);
    if (*synth) return cmd_synth(synth_config, synth_output, synth_split_seed);
    if (*train_cmd) return cmd_train(train_over.resolve());
    if (*eval) return cmd_eval(eval_corpus, eval_checkpoint, eval_baseline, eval_split, eval_mode, eval_topn, eval_report);
    if (*retrieve) return cmd_retrieve(ret_corpus, ret_checkpoint, ret_items, ret_topn);
    if (*sweep) return cmd_sweep(sweep_over.resolve(), sweep_param, sweep_values, sweep_split, sweep_mode, sweep_topn);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
