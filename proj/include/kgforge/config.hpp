#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "kgforge/model.hpp"
#include "kgforge/optim.hpp"
#include "kgforge/sampler.hpp"

namespace kgforge {

enum class LossMode : std::uint8_t { sampled_softmax, full_softmax };
enum class TiePolicy : std::uint8_t { optimistic, pessimistic, mean };
enum class RankMode : std::uint8_t { both_sides, tail_only };

struct TrainConfig {
  ModelKind model{ModelType::complex, false};
  std::size_t dim = 200;
  std::size_t batch_size = 1000;
  int n_neg = 100;
  double alpha = 0.5;   ///< pair-loss weight, used only when model.joint
  double p_bias = 0.3;
  AdamParams adam{};
  int max_epochs = 100;
  int eval_every = 5;
  int patience = 4;
  LossMode loss = LossMode::sampled_softmax;
  std::uint64_t seed = 42;
  bool exclude_gold = false;
  SidePolicy side_policy = SidePolicy::per_negative;
  double l2 = 0.0;
  int threads = 1;
  /// Upper bound on batch_size * n_entities scores in full-softmax mode.
  std::size_t full_softmax_budget = 50'000'000;
  TiePolicy tie = TiePolicy::mean;

  /// Throws ContractViolation on an invalid combination.
  void validate() const;

  NegSpec neg_spec() const;
};

/// Flat key=value form; keys match the long CLI flag names with '-'
/// replaced by '_'. `explicit_keys` (if given) receives every key present.
TrainConfig parse_config(const std::string& text, std::set<std::string>* explicit_keys = nullptr);
TrainConfig load_config(const std::filesystem::path& path,
                        std::set<std::string>* explicit_keys = nullptr);
std::string format_config(const TrainConfig& config);

/// Applies one key=value assignment. Throws ContractViolation on unknown
/// keys or unparsable values.
void apply_config_value(TrainConfig& config, const std::string& key, const std::string& value);

std::string_view tie_name(TiePolicy tie);
std::string_view loss_name(LossMode loss);

}  // namespace kgforge
