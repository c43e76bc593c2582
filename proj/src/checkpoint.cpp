#include "dsie/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "dsie/run_config.hpp"

namespace dsie {

namespace {

constexpr char kMagic[8] = {'D', 'S', 'I', 'E', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), sizeof(T));
  } else {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes{};
  in.read(bytes.data(), sizeof(T));
  if (!in) throw DataError("truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto len = get<std::uint32_t>(in);
  if (len > (1u << 24)) throw DataError("corrupt checkpoint string length");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw DataError("truncated checkpoint");
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put_string(out, format_train_config(ckpt.config));
  put<std::uint64_t>(out, ckpt.catalog_hash);
  auto refs = tensors(const_cast<ModelParams&>(ckpt.params));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(refs.size()));
  for (const auto& t : refs) {
    put_string(out, t.name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols));
    for (double v : t.values()) put<float>(out, static_cast<float>(v));
  }
  if (!out) throw std::ios_base::failure("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw DataError("not a checkpoint: " + path.string());
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.config = parse_train_config(get_string(in));
  ckpt.catalog_hash = get<std::uint64_t>(in);
  const auto count = get<std::uint32_t>(in);

  // The item count is recovered from the embedding table.
  std::vector<std::tuple<std::string, std::uint32_t, std::uint32_t, std::vector<float>>> raw;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = get_string(in);
    const auto rows = get<std::uint32_t>(in);
    const auto cols = get<std::uint32_t>(in);
    std::vector<float> values(static_cast<std::size_t>(rows) * cols);
    for (auto& v : values) v = get<float>(in);
    raw.emplace_back(std::move(name), rows, cols, std::move(values));
  }
  if (raw.empty() || std::get<0>(raw.front()) != "item_embeddings") throw DataError("checkpoint lacks item_embeddings");
  const auto item_count = static_cast<int>(std::get<1>(raw.front())) - 1;
  ckpt.params = zeros_like(ckpt.config.dims(item_count));
  auto refs = tensors(ckpt.params);
  if (refs.size() != raw.size()) throw DataError("checkpoint tensor count does not match its config");
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& [name, rows, cols, values] = raw[i];
    if (name != refs[i].name || rows != refs[i].rows || cols != refs[i].cols)
      throw DataError("checkpoint tensor '" + name + "' does not match its config");
    auto dst = refs[i].values();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = values[j];
  }
  return ckpt;
}

}  // namespace dsie
