#include "kgforge/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace kgforge {

std::string_view tie_name(TiePolicy tie) {
  switch (tie) {
    case TiePolicy::optimistic: return "opt";
    case TiePolicy::pessimistic: return "pess";
    case TiePolicy::mean: return "mean";
  }
  return "?";
}

std::string_view loss_name(LossMode loss) {
  return loss == LossMode::full_softmax ? "full" : "sampled";
}

void TrainConfig::validate() const {
  require(dim > 0, "d must be positive");
  require(batch_size > 0, "batch must be positive");
  require(n_neg >= 1, "n_neg must be >= 1");
  require(alpha >= 0.0, "alpha must be >= 0");
  require(p_bias >= 0.0 && p_bias <= 1.0, "p_bias must lie in [0, 1]");
  require(adam.lr > 0.0, "lr must be positive");
  require(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0,
          "adam betas must lie in [0, 1)");
  require(adam.eps > 0.0, "eps must be positive");
  require(max_epochs >= 0, "max_epochs must be >= 0");
  require(eval_every >= 1, "eval_every must be >= 1");
  require(patience >= 1, "patience must be >= 1");
  require(l2 >= 0.0, "l2 must be >= 0");
  require(threads >= 1, "threads must be >= 1");
}

NegSpec TrainConfig::neg_spec() const {
  return NegSpec{n_neg, p_bias, seed, exclude_gold, side_policy};
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ContractViolation("invalid value for " + key + ": '" + value + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ContractViolation("invalid value for " + key + ": '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw ContractViolation("invalid value for " + key + ": '" + value + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_config_value(TrainConfig& c, const std::string& key, const std::string& value) {
  if (key == "model") {
    auto m = parse_model(value);
    if (!m) throw ContractViolation("unknown model '" + value + "'");
    c.model.type = *m;
  } else if (key == "joint") {
    c.model.joint = parse_bool(key, value);
  } else if (key == "d") {
    c.dim = parse_number<std::size_t>(key, value);
  } else if (key == "batch") {
    c.batch_size = parse_number<std::size_t>(key, value);
  } else if (key == "n_neg") {
    c.n_neg = parse_number<int>(key, value);
  } else if (key == "alpha") {
    c.alpha = parse_real(key, value);
  } else if (key == "p_bias") {
    c.p_bias = parse_real(key, value);
  } else if (key == "lr") {
    c.adam.lr = parse_real(key, value);
  } else if (key == "beta1") {
    c.adam.beta1 = parse_real(key, value);
  } else if (key == "beta2") {
    c.adam.beta2 = parse_real(key, value);
  } else if (key == "eps") {
    c.adam.eps = parse_real(key, value);
  } else if (key == "max_epochs") {
    c.max_epochs = parse_number<int>(key, value);
  } else if (key == "eval_every") {
    c.eval_every = parse_number<int>(key, value);
  } else if (key == "patience") {
    c.patience = parse_number<int>(key, value);
  } else if (key == "loss") {
    if (value == "sampled") c.loss = LossMode::sampled_softmax;
    else if (value == "full") c.loss = LossMode::full_softmax;
    else throw ContractViolation("unknown loss '" + value + "'");
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "exclude_gold") {
    c.exclude_gold = parse_bool(key, value);
  } else if (key == "side_policy") {
    if (value == "per-negative") c.side_policy = SidePolicy::per_negative;
    else if (value == "per-positive") c.side_policy = SidePolicy::per_positive;
    else throw ContractViolation("unknown side_policy '" + value + "'");
  } else if (key == "l2") {
    c.l2 = parse_real(key, value);
  } else if (key == "threads") {
    c.threads = parse_number<int>(key, value);
  } else if (key == "full_softmax_budget") {
    c.full_softmax_budget = parse_number<std::size_t>(key, value);
  } else if (key == "tie") {
    if (value == "opt") c.tie = TiePolicy::optimistic;
    else if (value == "pess") c.tie = TiePolicy::pessimistic;
    else if (value == "mean") c.tie = TiePolicy::mean;
    else throw ContractViolation("unknown tie policy '" + value + "'");
  } else {
    throw ContractViolation("unknown config key '" + key + "'");
  }
}

TrainConfig parse_config(const std::string& text, std::set<std::string>* explicit_keys) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> keys;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ContractViolation("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(line.substr(0, eq));
    apply_config_value(c, key, trim(line.substr(eq + 1)));
    keys.insert(key);
  }
  if (c.loss == LossMode::full_softmax && keys.count("n_neg") != 0) {
    throw ContractViolation("n_neg cannot be combined with loss=full");
  }
  if (explicit_keys != nullptr) explicit_keys->insert(keys.begin(), keys.end());
  return c;
}

TrainConfig load_config(const std::filesystem::path& path, std::set<std::string>* explicit_keys) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), explicit_keys);
}

std::string format_config(const TrainConfig& c) {
  // Shortest text that parses back to the same double.
  auto num = [](double v) {
    std::array<char, 32> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
  };
  std::ostringstream out;
  out << "model=" << model_name(c.model.type) << '\n'
      << "joint=" << (c.model.joint ? "true" : "false") << '\n'
      << "d=" << c.dim << '\n'
      << "batch=" << c.batch_size << '\n';
  if (c.loss == LossMode::sampled_softmax) out << "n_neg=" << c.n_neg << '\n';
  out << "alpha=" << num(c.alpha) << '\n'
      << "p_bias=" << num(c.p_bias) << '\n'
      << "lr=" << num(c.adam.lr) << '\n'
      << "beta1=" << num(c.adam.beta1) << '\n'
      << "beta2=" << num(c.adam.beta2) << '\n'
      << "eps=" << num(c.adam.eps) << '\n'
      << "max_epochs=" << c.max_epochs << '\n'
      << "eval_every=" << c.eval_every << '\n'
      << "patience=" << c.patience << '\n'
      << "loss=" << loss_name(c.loss) << '\n'
      << "seed=" << c.seed << '\n'
      << "exclude_gold=" << (c.exclude_gold ? "true" : "false") << '\n'
      << "side_policy="
      << (c.side_policy == SidePolicy::per_negative ? "per-negative" : "per-positive") << '\n'
      << "l2=" << num(c.l2) << '\n'
      << "threads=" << c.threads << '\n'
      << "full_softmax_budget=" << c.full_softmax_budget << '\n'
      << "tie=" << tie_name(c.tie) << '\n';
  return out.str();
}

}  // namespace kgforge
