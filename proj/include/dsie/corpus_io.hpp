#pragma once

#include <cstdint>
#include <filesystem>

#include "dsie/dataset.hpp"

namespace dsie {

// A prepared corpus directory:
//   catalog.tsv    item_index, item_id, categories joined with '|'
//   sequences.tsv  user_index, comma-separated item indices
//   split.tsv      user_index, train|valid|test
//   users.tsv      user_index, user_id
struct PreparedCorpus {
  Corpus corpus;
  DatasetSplit split;
};

void write_prepared_corpus(const std::filesystem::path& dir, const Corpus& corpus, const DatasetSplit& split);
PreparedCorpus read_prepared_corpus(const std::filesystem::path& dir);

// FNV-1a over item ids and their categories in index order.
std::uint64_t catalog_hash(const Catalog& catalog);

struct CorpusStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  double mean_length = 0.0;
};

CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace dsie
