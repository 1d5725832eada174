#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgforge/config.hpp"
#include "kgforge/kgdata.hpp"
#include "kgforge/model.hpp"
#include "kgforge/optim.hpp"
#include "kgforge/sampler.hpp"

namespace kgforge {

/// Loss of one batch (or a chunk's share of it). `bi` is the mean BCE of
/// the pair module and is reported even when alpha is 0.
struct BatchLoss {
  double tri = 0.0;
  double bi = 0.0;
  double reg = 0.0;
  double total = 0.0;

  BatchLoss& operator+=(const BatchLoss& o) {
    tri += o.tri;
    bi += o.bi;
    reg += o.reg;
    total += o.total;
    return *this;
  }
};

/// Sampled-softmax objective: for positive i the scored row is
/// [positives[i], negatives[i*n_neg .. (i+1)*n_neg)]. Losses are means over
/// `batch_positives` positives (so chunks of a batch add up), and the
/// gradient of the total loss is added into `out`.
BatchLoss accumulate_sampled_gradients(const EmbeddingTable& table, const PairIndex& pairs,
                                       const TrainConfig& config,
                                       std::span<const Triple> positives,
                                       std::span<const Triple> negatives,
                                       std::size_t batch_positives, Gradients& out);

/// Full-softmax objective: both directions against all entities, averaged.
/// Under the joint model the pair module scores the same candidates with BCE.
BatchLoss accumulate_full_softmax_gradients(const EmbeddingTable& table, const PairIndex& pairs,
                                            const TrainConfig& config,
                                            std::span<const Triple> positives,
                                            std::size_t batch_positives, Gradients& out);

/// Throws ContractViolation when batch_size * n_entities exceeds the
/// configured full-softmax budget.
void check_full_softmax_budget(const TrainConfig& config, std::size_t n_entities);

struct EpochStats {
  int epoch = 0;
  std::size_t steps = 0;
  double loss_tri = 0.0;
  double loss_bi = 0.0;
  double loss_total = 0.0;
  double seconds = 0.0;
};

/// Owns the parameters, optimizer state and per-worker samplers for one run.
/// Each batch is split into `config.threads` contiguous chunks; chunk k uses
/// sampler k and its own gradient buffer, and buffers are reduced in chunk
/// order before one Adam step.
class Trainer {
 public:
  Trainer(const Dataset& data, TrainConfig config);
  Trainer(const Dataset& data, TrainConfig config, EmbeddingTable initial);

  EpochStats run_epoch();
  BatchLoss step(std::span<const Triple> positives);

  const EmbeddingTable& table() const { return table_; }
  EmbeddingTable& table() { return table_; }
  const TrainConfig& config() const { return config_; }
  int epochs_done() const { return epoch_; }
  std::uint64_t steps_done() const { return adam_.steps(); }

 private:
  const Dataset* data_;
  TrainConfig config_;
  EmbeddingTable table_;
  AdamState adam_;
  std::vector<NegativeSampler> samplers_;
  std::vector<Gradients> grads_;
  std::vector<CorruptedBatch> negatives_;
  Rng shuffle_rng_;
  std::vector<Triple> order_;
  int epoch_ = 0;
};

/// Stops after `patience` consecutive evaluations without a strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Returns true if `value` is a new best.
  bool observe(double value);
  bool should_stop() const { return bad_evals_ >= patience_; }
  double best() const { return best_; }

 private:
  int patience_;
  int bad_evals_ = 0;
  double best_ = -1.0;
  bool seen_ = false;
};

struct EpochRecord {
  EpochStats stats;
  std::optional<double> val_hits10;
  bool best = false;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

std::string train_log_header();
std::string train_log_line(const EpochRecord& record);

struct FitResult {
  EmbeddingTable best;
  TrainLog log;
  int best_epoch = 0;
  double best_hits10 = -1.0;
  bool stopped_early = false;
};

using Validator = std::function<double(const EmbeddingTable&)>;
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Filtered validation hits@10 (both sides) with the triple module.
double validation_hits10(const EmbeddingTable& table, const Dataset& data, TiePolicy tie);

/// Trains up to max_epochs, validating every eval_every epochs (and after the
/// final epoch), keeping the best table by validation hits@10.
FitResult fit(const Dataset& data, const TrainConfig& config, Validator validator = {},
              EpochCallback on_epoch = {});

namespace reference {
/// Single-chunk gradient of one sampled batch.
BatchLoss batch_gradients(const EmbeddingTable& table, const PairIndex& pairs,
                          const TrainConfig& config, std::span<const Triple> positives,
                          std::span<const Triple> negatives, Gradients& out);
}  // namespace reference

}  // namespace kgforge
