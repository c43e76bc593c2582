#include "dsie/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace dsie {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw std::invalid_argument("bad value '" + value + "' for " + key);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  auto& t = config.train;
  if (key == "dim") t.dim = parse_number<int>(key, value);
  else if (key == "max_len") t.max_len = parse_number<int>(key, value);
  else if (key == "layers") t.layers = parse_number<int>(key, value);
  else if (key == "interests") t.interests = parse_number<int>(key, value);
  else if (key == "tau") t.tau = parse_number<double>(key, value);
  else if (key == "alpha_reg") t.alpha_reg = parse_number<double>(key, value);
  else if (key == "beta_cl") t.beta_cl = parse_number<double>(key, value);
  else if (key == "negatives") t.negatives = parse_number<int>(key, value);
  else if (key == "batch_size") t.batch_size = parse_number<int>(key, value);
  else if (key == "learning_rate") t.learning_rate = parse_number<double>(key, value);
  else if (key == "patience") t.patience = parse_number<int>(key, value);
  else if (key == "max_epochs") t.max_epochs = parse_number<int>(key, value);
  else if (key == "max_samples_per_user") t.max_samples_per_user = parse_number<int>(key, value);
  else if (key == "eval_topn") t.eval_topn = parse_number<int>(key, value);
  else if (key == "seed") t.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "variant") t.variant = parse_variant(value);
  else if (key == "corpus") config.corpus_dir = value;
  else if (key == "checkpoint") config.checkpoint_path = value;
  else if (key == "report") config.report_path = value;
  else if (key == "log") config.log_path = value;
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

RunConfig parse_run_config(std::istream& in) {
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    apply_setting(config, trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  return parse_run_config(in);
}

std::string format_train_config(const TrainConfig& t) {
  std::ostringstream out;
  out << "dim = " << t.dim << '\n'
      << "max_len = " << t.max_len << '\n'
      << "layers = " << t.layers << '\n'
      << "interests = " << t.interests << '\n'
      << "tau = " << format_double(t.tau) << '\n'
      << "alpha_reg = " << format_double(t.alpha_reg) << '\n'
      << "beta_cl = " << format_double(t.beta_cl) << '\n'
      << "negatives = " << t.negatives << '\n'
      << "batch_size = " << t.batch_size << '\n'
      << "learning_rate = " << format_double(t.learning_rate) << '\n'
      << "patience = " << t.patience << '\n'
      << "max_epochs = " << t.max_epochs << '\n'
      << "max_samples_per_user = " << t.max_samples_per_user << '\n'
      << "eval_topn = " << t.eval_topn << '\n'
      << "seed = " << t.seed << '\n'
      << "variant = " << to_string(t.variant) << '\n';
  return out.str();
}

TrainConfig parse_train_config(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in).train;
}

}  // namespace dsie
