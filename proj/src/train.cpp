#include "kgforge/train.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <sstream>

#include "kgforge/eval.hpp"
#include "kgforge/losses.hpp"

namespace kgforge {

namespace {

void add_l2(const EmbeddingTable& table, const Triple& t, double lambda, double inv_batch,
            Gradients& out, BatchLoss& loss) {
  auto h = table.entity(t.head);
  auto r = table.relation(RelationModule::tri, t.relation);
  auto tl = table.entity(t.tail);
  double sq = 0.0;
  for (double x : h) sq += x * x;
  for (double x : r) sq += x * x;
  for (double x : tl) sq += x * x;
  loss.reg += lambda * sq * inv_batch;
  const double c = 2.0 * lambda * inv_batch;
  auto dh = out.entity.row(static_cast<std::size_t>(t.head));
  for (std::size_t i = 0; i < h.size(); ++i) dh[i] += c * h[i];
  auto dr = out.relation_tri.row(static_cast<std::size_t>(t.relation));
  for (std::size_t i = 0; i < r.size(); ++i) dr[i] += c * r[i];
  auto dt = out.entity.row(static_cast<std::size_t>(t.tail));
  for (std::size_t i = 0; i < tl.size(); ++i) dt[i] += c * tl[i];
}

void finish_total(BatchLoss& loss, const TrainConfig& config) {
  loss.total = loss.tri;
  if (config.model.joint && config.alpha != 0.0) loss.total = loss_joint(loss.tri, loss.bi, config.alpha);
  if (config.l2 != 0.0) loss.total += loss.reg;
}

}  // namespace

BatchLoss accumulate_sampled_gradients(const EmbeddingTable& table, const PairIndex& pairs,
                                       const TrainConfig& config,
                                       std::span<const Triple> positives,
                                       std::span<const Triple> negatives,
                                       std::size_t batch_positives, Gradients& out) {
  const std::size_t n_pos = positives.size();
  require(n_pos == 0 || negatives.size() % n_pos == 0, "negatives not a multiple of positives");
  const std::size_t n_neg = n_pos == 0 ? 0 : negatives.size() / n_pos;
  const std::size_t cols = 1 + n_neg;
  const ModelType type = table.type();
  const bool joint = table.kind().joint;
  const bool bi_backprop = joint && config.alpha != 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch_positives);
  const double inv_bi = inv_b / static_cast<double>(cols);

  std::vector<Triple> row(cols);
  std::vector<double> scores(cols);
  std::vector<double> grads(cols);
  BatchLoss loss;

  for (std::size_t i = 0; i < n_pos; ++i) {
    row[0] = positives[i];
    for (std::size_t j = 0; j < n_neg; ++j) row[1 + j] = negatives[i * n_neg + j];

    for (std::size_t j = 0; j < cols; ++j) scores[j] = score_triple(table, row[j], RelationModule::tri);
    loss.tri += loss_tri_sampled_softmax(scores, grads, i) * inv_b;

    const auto r_tri = table.relation(RelationModule::tri, positives[i].relation);
    auto dr_tri = out.relation_tri.row(static_cast<std::size_t>(positives[i].relation));
    for (std::size_t j = 0; j < cols; ++j) {
      const Triple& t = row[j];
      accumulate_score_grad(type, table.entity(t.head), r_tri, table.entity(t.tail),
                            grads[j] * inv_b, out.entity.row(static_cast<std::size_t>(t.head)),
                            dr_tri, out.entity.row(static_cast<std::size_t>(t.tail)));
    }

    if (joint) {
      const auto r_bi = table.relation(RelationModule::bi, positives[i].relation);
      std::span<double> dr_bi;
      if (bi_backprop) dr_bi = out.relation_bi.row(static_cast<std::size_t>(positives[i].relation));
      for (std::size_t j = 0; j < cols; ++j) {
        const Triple& t = row[j];
        const double s = score_rows(type, table.entity(t.head), r_bi, table.entity(t.tail));
        const auto bce = loss_bi_bce(s, pair_label(t, pairs));
        loss.bi += bce.loss * inv_bi;
        if (bi_backprop) {
          accumulate_score_grad(type, table.entity(t.head), r_bi, table.entity(t.tail),
                                config.alpha * bce.grad * inv_bi,
                                out.entity.row(static_cast<std::size_t>(t.head)), dr_bi,
                                out.entity.row(static_cast<std::size_t>(t.tail)));
        }
      }
    }

    if (config.l2 != 0.0) add_l2(table, positives[i], config.l2, inv_b, out, loss);
  }
  finish_total(loss, config);
  return loss;
}

namespace {

// One direction of the full-softmax objective for a single positive.
// Loss terms are weighted by `loss_scale`, dL/dscore by `grad_scale`.
void full_direction(const EmbeddingTable& table, const PairIndex& pairs, const Triple& pos,
                    Side side, RelationModule module, double loss_scale, double grad_scale,
                    bool bce,
                    bool backprop, std::vector<double>& scores, std::vector<double>& q,
                    std::vector<double>& gq, std::vector<double>& scratch, double& loss_out,
                    Gradients& out) {
  const ModelType type = table.type();
  const std::size_t n = table.n_entities();
  const std::size_t w = table.entity_width();
  const auto r = table.relation(module, pos.relation);
  if (side == Side::tail) tail_query(type, table.entity(pos.head), r, q);
  else head_query(type, r, table.entity(pos.tail), q);

  for (std::size_t e = 0; e < n; ++e) scores[e] = dot(q, table.entity(static_cast<EntityId>(e)));

  const EntityId gold = entity_at(pos, side);
  if (!bce) {
    for (std::size_t e = 0; e < n; ++e) {
      if (!std::isfinite(scores[e])) {
        throw TrainingError("non-finite score in full softmax at entity " + std::to_string(e));
      }
    }
    const double lse = logsumexp(scores);
    loss_out += (lse - scores[static_cast<std::size_t>(gold)]) * loss_scale;
    for (std::size_t e = 0; e < n; ++e) scores[e] = std::exp(scores[e] - lse);
    scores[static_cast<std::size_t>(gold)] -= 1.0;
  } else {
    for (std::size_t e = 0; e < n; ++e) {
      const bool label = pair_label(with_entity(pos, side, static_cast<EntityId>(e)), pairs);
      const auto res = loss_bi_bce(scores[e], label);
      loss_out += res.loss * loss_scale;
      scores[e] = res.grad;
    }
  }
  if (!backprop) return;

  // scores now holds dL/ds_e (unscaled). Candidate rows get coef * q; the
  // query side gets the chain rule through q via sum_e coef_e * row_e.
  std::fill(gq.begin(), gq.end(), 0.0);
  for (std::size_t e = 0; e < n; ++e) {
    const double c = scores[e] * grad_scale;
    if (c == 0.0) continue;
    const auto row = table.entity(static_cast<EntityId>(e));
    auto drow = out.entity.row(e);
    for (std::size_t i = 0; i < w; ++i) {
      drow[i] += c * q[i];
      gq[i] += c * row[i];
    }
  }
  auto dr = out.relation(module).row(static_cast<std::size_t>(pos.relation));
  std::fill(scratch.begin(), scratch.end(), 0.0);
  if (side == Side::tail) {
    accumulate_score_grad(type, table.entity(pos.head), r, gq, 1.0,
                          out.entity.row(static_cast<std::size_t>(pos.head)), dr, scratch);
  } else {
    accumulate_score_grad(type, gq, r, table.entity(pos.tail), 1.0, scratch, dr,
                          out.entity.row(static_cast<std::size_t>(pos.tail)));
  }
}

}  // namespace

BatchLoss accumulate_full_softmax_gradients(const EmbeddingTable& table, const PairIndex& pairs,
                                            const TrainConfig& config,
                                            std::span<const Triple> positives,
                                            std::size_t batch_positives, Gradients& out) {
  const std::size_t n = table.n_entities();
  const std::size_t w = table.entity_width();
  const bool joint = table.kind().joint;
  const bool bi_backprop = joint && config.alpha != 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch_positives);
  const double tri_scale = 0.5 * inv_b;
  const double bi_scale = inv_b / (2.0 * static_cast<double>(n));

  std::vector<double> scores(n), q(w), gq(w), scratch(w);
  BatchLoss loss;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    for (Side side : {Side::tail, Side::head}) {
      full_direction(table, pairs, positives[i], side, RelationModule::tri, tri_scale,
                     tri_scale, false, true, scores, q, gq, scratch, loss.tri, out);
      if (joint) {
        full_direction(table, pairs, positives[i], side, RelationModule::bi, bi_scale,
                       config.alpha * bi_scale, true, bi_backprop, scores, q, gq, scratch,
                       loss.bi, out);
      }
    }
    if (config.l2 != 0.0) add_l2(table, positives[i], config.l2, inv_b, out, loss);
  }
  finish_total(loss, config);
  return loss;
}

void check_full_softmax_budget(const TrainConfig& config, std::size_t n_entities) {
  const std::size_t need = config.batch_size * n_entities;
  if (need > config.full_softmax_budget) {
    throw ContractViolation("full softmax needs batch * n_entities = " + std::to_string(need) +
                            " scores per step, over the budget of " +
                            std::to_string(config.full_softmax_budget) +
                            "; use --loss sampled for this dataset");
  }
}

namespace reference {
BatchLoss batch_gradients(const EmbeddingTable& table, const PairIndex& pairs,
                          const TrainConfig& config, std::span<const Triple> positives,
                          std::span<const Triple> negatives, Gradients& out) {
  return accumulate_sampled_gradients(table, pairs, config, positives, negatives,
                                      positives.size(), out);
}
}  // namespace reference

namespace {
Rng shuffle_rng(std::uint64_t seed) {
  std::seed_seq seq{seed, std::uint64_t{0x5bff1e}};
  return Rng(seq);
}
}  // namespace

Trainer::Trainer(const Dataset& data, TrainConfig config)
    : Trainer(data, config,
              init_table(config.model, data.n_entities(), data.n_relations(), config.dim,
                         config.seed)) {}

Trainer::Trainer(const Dataset& data, TrainConfig config, EmbeddingTable initial)
    : data_(&data),
      config_(config),
      table_(std::move(initial)),
      adam_(table_),
      shuffle_rng_(shuffle_rng(config.seed)),
      order_(data.train.triples) {
  config_.validate();
  require(table_.kind() == config_.model && table_.dim() == config_.dim &&
              table_.n_entities() == data.n_entities() &&
              table_.n_relations() == data.n_relations(),
          "trainer: initial table does not match config/dataset");
  if (config_.loss == LossMode::full_softmax) {
    check_full_softmax_budget(config_, data.n_entities());
  }
  const auto workers = static_cast<std::size_t>(config_.threads);
  for (std::size_t k = 0; k < workers; ++k) {
    samplers_.emplace_back(data.n_entities(), data.pairs, config_.neg_spec(), k);
    grads_.emplace_back(table_);
  }
  negatives_.resize(workers);
}

BatchLoss Trainer::step(std::span<const Triple> positives) {
  require(!positives.empty(), "step: empty batch");
  const std::size_t b = positives.size();
  const auto workers = static_cast<std::int64_t>(grads_.size());
  std::vector<BatchLoss> partial(grads_.size());
  std::vector<std::exception_ptr> errors(grads_.size());

#pragma omp parallel for num_threads(workers) schedule(static, 1)
  for (std::int64_t k = 0; k < workers; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const std::size_t lo = b * ku / grads_.size();
    const std::size_t hi = b * (ku + 1) / grads_.size();
    if (lo == hi) continue;
    try {
      auto chunk = positives.subspan(lo, hi - lo);
      if (config_.loss == LossMode::sampled_softmax) {
        samplers_[ku].make_batch(chunk, negatives_[ku], lo);
        partial[ku] = accumulate_sampled_gradients(table_, data_->pairs, config_, chunk,
                                                   negatives_[ku].negatives, b, grads_[ku]);
      } else {
        partial[ku] = accumulate_full_softmax_gradients(table_, data_->pairs, config_, chunk, b,
                                                        grads_[ku]);
      }
    } catch (...) {
      errors[ku] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) {
      for (auto& g : grads_) g.clear();
      std::rethrow_exception(e);
    }
  }

  BatchLoss loss;
  for (std::size_t k = 0; k < grads_.size(); ++k) {
    loss += partial[k];
    if (k > 0) grads_[0].add(grads_[k]);
  }
  adam_.step(table_, grads_[0], config_.adam);
  for (auto& g : grads_) g.clear();
  return loss;
}

EpochStats Trainer::run_epoch() {
  const auto start = std::chrono::steady_clock::now();
  std::shuffle(order_.begin(), order_.end(), shuffle_rng_);
  EpochStats stats;
  stats.epoch = ++epoch_;
  const std::size_t n = order_.size();
  for (std::size_t lo = 0; lo < n; lo += config_.batch_size) {
    const std::size_t hi = std::min(n, lo + config_.batch_size);
    const auto loss = step(std::span<const Triple>(order_).subspan(lo, hi - lo));
    stats.loss_tri += loss.tri;
    stats.loss_bi += loss.bi;
    stats.loss_total += loss.total;
    ++stats.steps;
  }
  if (stats.steps > 0) {
    const double s = static_cast<double>(stats.steps);
    stats.loss_tri /= s;
    stats.loss_bi /= s;
    stats.loss_total /= s;
  }
  stats.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

bool EarlyStopping::observe(double value) {
  if (!seen_ || value > best_) {
    seen_ = true;
    best_ = value;
    bad_evals_ = 0;
    return true;
  }
  ++bad_evals_;
  return false;
}

std::string train_log_header() { return "epoch\tL_tri\tL_bi\tL_total\tseconds\tval_hits@10\n"; }

std::string train_log_line(const EpochRecord& r) {
  std::ostringstream out;
  out << std::setprecision(10) << r.stats.epoch << '\t' << r.stats.loss_tri << '\t'
      << r.stats.loss_bi << '\t' << r.stats.loss_total << '\t' << std::setprecision(4)
      << r.stats.seconds << '\t';
  if (r.val_hits10) out << std::setprecision(6) << *r.val_hits10;
  out << '\n';
  return out.str();
}

double validation_hits10(const EmbeddingTable& table, const Dataset& data, TiePolicy tie) {
  return evaluate(table, data.valid.triples, data.filter, RankMode::both_sides, tie)
      .overall.hits10;
}

FitResult fit(const Dataset& data, const TrainConfig& config, Validator validator,
              EpochCallback on_epoch) {
  config.validate();
  FitResult result;
  Trainer trainer(data, config);
  result.best = trainer.table();
  if (config.max_epochs == 0) return result;

  if (!validator) {
    if (data.valid.empty()) throw DataError("empty validation split");
    validator = [&data, tie = config.tie](const EmbeddingTable& t) {
      return validation_hits10(t, data, tie);
    };
  }

  EarlyStopping stopper(config.patience);
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    EpochRecord record;
    record.stats = trainer.run_epoch();
    if (epoch % config.eval_every == 0 || epoch == config.max_epochs) {
      const double hits10 = validator(trainer.table());
      record.val_hits10 = hits10;
      record.best = stopper.observe(hits10);
      if (record.best) {
        result.best = trainer.table();
        result.best_epoch = epoch;
        result.best_hits10 = hits10;
      }
    }
    result.log.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
    if (stopper.should_stop()) {
      result.stopped_early = epoch < config.max_epochs;
      break;
    }
  }
  return result;
}

}  // namespace kgforge
