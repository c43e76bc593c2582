#include "dsie/corpus_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace dsie {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  return in;
}

std::int64_t to_int(std::string_view s, const std::filesystem::path& file, std::size_t line_no) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError(file.filename().string() + " line " + std::to_string(line_no) + ": bad integer '" +
                    std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <typename Fn>
void for_each_row(const std::filesystem::path& path, std::size_t expected_fields, Fn&& fn) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_on(line, '\t');
    if (fields.size() != expected_fields)
      throw DataError(path.filename().string() + " line " + std::to_string(line_no) + ": expected " +
                      std::to_string(expected_fields) + " fields");
    fn(fields, line_no);
  }
}

}  // namespace

void write_prepared_corpus(const std::filesystem::path& dir, const Corpus& corpus, const DatasetSplit& split) {
  std::filesystem::create_directories(dir);
  const auto& catalog = corpus.catalog;
  {
    auto out = open_out(dir / "catalog.tsv");
    for (std::size_t i = 0; i < catalog.item_count(); ++i) {
      out << i << '\t' << catalog.item_ids[i] << '\t';
      const auto& cats = catalog.item_categories[i];
      for (std::size_t c = 0; c < cats.size(); ++c) {
        if (c) out << '|';
        out << catalog.category_names[static_cast<std::size_t>(cats[c])];
      }
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "sequences.tsv");
    for (const auto& seq : corpus.sequences) {
      out << seq.user_index << '\t';
      for (std::size_t i = 0; i < seq.items.size(); ++i) {
        if (i) out << ',';
        out << seq.items[i];
      }
      out << '\n';
    }
  }
  {
    std::vector<const char*> role(corpus.sequences.size(), nullptr);
    for (auto u : split.train) role.at(static_cast<std::size_t>(u)) = "train";
    for (auto u : split.valid) role.at(static_cast<std::size_t>(u)) = "valid";
    for (auto u : split.test) role.at(static_cast<std::size_t>(u)) = "test";
    auto out = open_out(dir / "split.tsv");
    for (std::size_t u = 0; u < role.size(); ++u)
      if (role[u]) out << u << '\t' << role[u] << '\n';
  }
  {
    auto out = open_out(dir / "users.tsv");
    for (std::size_t u = 0; u < catalog.user_ids.size(); ++u) out << u << '\t' << catalog.user_ids[u] << '\n';
  }
}

PreparedCorpus read_prepared_corpus(const std::filesystem::path& dir) {
  PreparedCorpus prepared;
  auto& catalog = prepared.corpus.catalog;
  const auto catalog_path = dir / "catalog.tsv";
  for_each_row(catalog_path, 3, [&](const auto& f, std::size_t line_no) {
    if (to_int(f[0], catalog_path, line_no) != static_cast<std::int64_t>(catalog.item_count()))
      throw DataError("catalog.tsv line " + std::to_string(line_no) + ": item indices must be dense and ordered");
    ItemIndex item = catalog.add_item(std::string(f[1]));
    if (!f[2].empty())
      for (auto name : split_on(f[2], '|'))
        if (!name.empty()) catalog.add_item_category(item, catalog.intern_category(std::string(name)));
  });

  auto& sequences = prepared.corpus.sequences;
  const auto seq_path = dir / "sequences.tsv";
  for_each_row(seq_path, 2, [&](const auto& f, std::size_t line_no) {
    UserSequence seq;
    seq.user_index = static_cast<UserIndex>(to_int(f[0], seq_path, line_no));
    if (seq.user_index != static_cast<UserIndex>(sequences.size()))
      throw DataError("sequences.tsv line " + std::to_string(line_no) + ": user indices must be dense and ordered");
    if (!f[1].empty())
      for (auto tok : split_on(f[1], ',')) {
        auto item = to_int(tok, seq_path, line_no);
        if (item < 0 || item >= static_cast<std::int64_t>(catalog.item_count()))
          throw DataError("sequences.tsv line " + std::to_string(line_no) + ": item index out of range");
        seq.items.push_back(static_cast<ItemIndex>(item));
      }
    sequences.push_back(std::move(seq));
  });

  const auto users_path = dir / "users.tsv";
  if (std::filesystem::exists(users_path)) {
    for_each_row(users_path, 2, [&](const auto& f, std::size_t) { catalog.user_ids.emplace_back(f[1]); });
  }
  if (catalog.user_ids.size() != sequences.size()) {
    catalog.user_ids.clear();
    for (std::size_t u = 0; u < sequences.size(); ++u) catalog.user_ids.push_back("user" + std::to_string(u));
  }

  const auto split_path = dir / "split.tsv";
  for_each_row(split_path, 2, [&](const auto& f, std::size_t line_no) {
    auto u = static_cast<UserIndex>(to_int(f[0], split_path, line_no));
    if (u < 0 || static_cast<std::size_t>(u) >= sequences.size())
      throw DataError("split.tsv line " + std::to_string(line_no) + ": user index out of range");
    if (f[1] == "train") prepared.split.train.push_back(u);
    else if (f[1] == "valid") prepared.split.valid.push_back(u);
    else if (f[1] == "test") prepared.split.test.push_back(u);
    else throw DataError("split.tsv line " + std::to_string(line_no) + ": unknown role '" + std::string(f[1]) + "'");
  });
  return prepared;
}

std::uint64_t catalog_hash(const Catalog& catalog) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (std::size_t i = 0; i < catalog.item_count(); ++i) {
    mix(catalog.item_ids[i]);
    mix("\t");
    for (auto c : catalog.item_categories[i]) {
      mix(catalog.category_names[static_cast<std::size_t>(c)]);
      mix("|");
    }
    mix("\n");
  }
  return h;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  stats.users = corpus.sequences.size();
  stats.items = corpus.catalog.item_count();
  for (const auto& s : corpus.sequences) stats.interactions += s.items.size();
  if (stats.users) stats.mean_length = static_cast<double>(stats.interactions) / static_cast<double>(stats.users);
  return stats;
}

}  // namespace dsie
