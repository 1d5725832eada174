#include <doctest.h>

#include <cmath>
#include <numeric>

#include "kgforge/eval.hpp"
#include "kgforge/losses.hpp"
#include "kgforge/train.hpp"
#include "support.hpp"
#include "train_oracle.hpp"

using namespace kgforge;
using kgtest::rel_err;
using namespace kgtest::oracle;

namespace {

constexpr ModelType kTypes[] = {ModelType::distmult, ModelType::complex, ModelType::simple};

Dataset toy(std::uint64_t seed, std::size_t n_e = 8, std::size_t n_r = 2) {
  std::mt19937_64 rng(seed);
  return kgtest::random_kg(rng, n_e, n_r, 14, 4, 4);
}

TrainConfig small_config(ModelType type, bool joint) {
  TrainConfig c;
  c.model = {type, joint};
  c.dim = 3;
  c.batch_size = 4;
  c.n_neg = 3;
  c.alpha = 0.7;
  c.p_bias = 0.3;
  c.max_epochs = 5;
  c.eval_every = 1;
  return c;
}

}  // namespace

TEST_CASE("sampled objective: analytic gradient matches finite differences") {
  int instances = 0;
  for (auto type : kTypes) {
    for (bool joint : {false, true}) {
      for (double l2 : {0.0, 0.01}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
          CAPTURE(model_name(type));
          CAPTURE(joint);
          const auto data = toy(seed);
          auto config = small_config(type, joint);
          config.l2 = l2;
          auto table = init_table(config.model, data.n_entities(), data.n_relations(), 3, seed);
          for (auto& x : table.entity_data()) x *= 3.0;  // livelier scores
          std::vector<Triple> pos(data.train.triples.begin(), data.train.triples.begin() + 4);
          NegativeSampler sampler(data.n_entities(), data.pairs, config.neg_spec());
          const auto neg = sampler.make_batch(pos).negatives;

          Gradients g(table);
          const auto loss = reference::batch_gradients(table, data.pairs, config, pos, neg, g);
          const double want = oracle_sampled(table, data.pairs, config, pos, neg);
          CHECK(loss.total == doctest::Approx(want).epsilon(1e-12));
          const auto num = numeric(table, [&] {
            return oracle_sampled(table, data.pairs, config, pos, neg);
          });
          CHECK(rel_err(flatten(g, table), num) < 1e-5);
          ++instances;
        }
      }
    }
  }
  CHECK(instances >= 30);
}

TEST_CASE("full-softmax objective: analytic gradient matches finite differences") {
  for (auto type : kTypes) {
    for (bool joint : {false, true}) {
      for (std::uint64_t seed = 0; seed < 4; ++seed) {
        CAPTURE(model_name(type));
        CAPTURE(joint);
        const auto data = toy(seed + 10);
        auto config = small_config(type, joint);
        config.loss = LossMode::full_softmax;
        config.l2 = seed % 2 ? 0.02 : 0.0;
        auto table = init_table(config.model, data.n_entities(), data.n_relations(), 3, seed);
        for (auto& x : table.entity_data()) x *= 3.0;
        std::vector<Triple> pos(data.train.triples.begin(), data.train.triples.begin() + 3);
        Gradients g(table);
        const auto loss =
            accumulate_full_softmax_gradients(table, data.pairs, config, pos, pos.size(), g);
        CHECK(loss.total == doctest::Approx(oracle_full(table, data.pairs, config, pos)).epsilon(1e-12));
        const auto num = numeric(table, [&] { return oracle_full(table, data.pairs, config, pos); });
        CHECK(rel_err(flatten(g, table), num) < 1e-5);
      }
    }
  }
}

TEST_CASE("full softmax on two entities with equal scores") {
  Vocab v;
  v.intern_entity("a");
  v.intern_entity("b");
  v.intern_relation("r");
  const auto data = make_dataset(std::move(v), {{0, 0, 1}}, {}, {});
  TrainConfig c;
  c.model = {ModelType::distmult, false};
  c.dim = 2;
  c.loss = LossMode::full_softmax;
  EmbeddingTable table(c.model, 2, 1, 2);  // all zeros
  Gradients g(table);
  std::vector<Triple> pos = {{0, 0, 1}};
  const auto loss = accumulate_full_softmax_gradients(table, data.pairs, c, pos, 1, g);
  // Mean of the two directions, each ln 2.
  CHECK(loss.tri == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("full softmax equals sampled softmax over every non-gold entity") {
  const auto data = toy(3, 9, 2);
  for (auto type : kTypes) {
    TrainConfig c = small_config(type, false);
    auto table = init_table(c.model, data.n_entities(), data.n_relations(), 3, 4);
    const Triple p = data.train.triples[0];
    std::vector<Triple> pos = {p};
    double sampled = 0.0;
    for (Side side : {Side::tail, Side::head}) {
      std::vector<Triple> neg;
      for (EntityId e = 0; e < static_cast<EntityId>(data.n_entities()); ++e) {
        if (e != entity_at(p, side)) neg.push_back(with_entity(p, side, e));
      }
      Gradients g(table);
      sampled += 0.5 * reference::batch_gradients(table, data.pairs, c, pos, neg, g).tri;
    }
    c.loss = LossMode::full_softmax;
    Gradients g(table);
    const auto full = accumulate_full_softmax_gradients(table, data.pairs, c, pos, 1, g);
    CHECK(full.tri == doctest::Approx(sampled).epsilon(1e-12));
  }
}

TEST_CASE("sampled gradients touch only rows in the batch") {
  const auto data = toy(5, 30, 3);
  const auto c = small_config(ModelType::complex, true);
  const auto table = init_table(c.model, data.n_entities(), data.n_relations(), 3, 1);
  std::vector<Triple> pos = {data.train.triples[0]};
  NegativeSampler s(data.n_entities(), data.pairs, c.neg_spec());
  const auto neg = s.make_batch(pos).negatives;
  Gradients g(table);
  reference::batch_gradients(table, data.pairs, c, pos, neg, g);
  std::set<std::size_t> used;
  for (const auto& t : pos) used.insert({static_cast<std::size_t>(t.head), static_cast<std::size_t>(t.tail)});
  for (const auto& t : neg) used.insert({static_cast<std::size_t>(t.head), static_cast<std::size_t>(t.tail)});
  for (std::size_t e = 0; e < data.n_entities(); ++e) {
    if (used.count(e) == 0) {
      CHECK_FALSE(g.entity.touched(e));
      for (double x : g.entity.row_view(e)) CHECK(x == 0.0);
    }
  }
  for (std::size_t r = 0; r < data.n_relations(); ++r) {
    if (static_cast<RelationId>(r) != pos[0].relation) CHECK_FALSE(g.relation_tri.touched(r));
  }
}

TEST_CASE("alpha = 0 gives total == triple loss exactly") {
  const auto data = toy(7);
  for (auto type : kTypes) {
    auto c = small_config(type, true);
    c.alpha = 0.0;
    const auto table = init_table(c.model, data.n_entities(), data.n_relations(), 3, 2);
    std::vector<Triple> pos(data.train.triples.begin(), data.train.triples.begin() + 4);
    NegativeSampler s(data.n_entities(), data.pairs, c.neg_spec());
    const auto neg = s.make_batch(pos).negatives;
    Gradients g(table);
    const auto loss = reference::batch_gradients(table, data.pairs, c, pos, neg, g);
    CHECK(loss.bi > 0.0);
    CHECK(loss.total == loss.tri);
    // The pair relations receive no gradient.
    CHECK(g.relation_bi.touched_rows().empty());
  }
}

TEST_CASE("JoBi with alpha = 0 and p = 0 is bit-identical to the baseline") {
  const auto data = toy(8, 20, 3);
  for (auto type : kTypes) {
    auto base = small_config(type, false);
    base.p_bias = 0.0;
    base.alpha = 0.0;
    auto jobi = base;
    jobi.model.joint = true;
    Trainer a(data, base), b(data, jobi);
    std::size_t steps = 0;
    while (steps < 100) {
      a.run_epoch();
      b.run_epoch();
      steps = a.steps_done();
    }
    CHECK(b.steps_done() == a.steps_done());
    CHECK(std::ranges::equal(a.table().entity_data(), b.table().entity_data()));
    CHECK(std::ranges::equal(a.table().relation_data(RelationModule::tri),
                             b.table().relation_data(RelationModule::tri)));
  }
}

TEST_CASE("an epoch takes ceil(n / batch) Adam steps") {
  const auto data = toy(9);
  auto c = small_config(ModelType::distmult, false);
  c.batch_size = 4;
  Trainer t(data, c);
  const auto stats = t.run_epoch();
  const std::size_t n = data.train.size();
  CHECK(stats.steps == (n + 3) / 4);
  CHECK(t.steps_done() == (n + 3) / 4);
  c.batch_size = n;
  Trainer whole(data, c);
  CHECK(whole.run_epoch().steps == 1);
}

TEST_CASE("training is reproducible for a fixed worker count") {
  const auto data = toy(10, 15, 2);
  for (int threads : {1, 3}) {
    auto c = small_config(ModelType::complex, true);
    c.threads = threads;
    Trainer a(data, c), b(data, c);
    for (int e = 0; e < 5; ++e) {
      a.run_epoch();
      b.run_epoch();
    }
    CHECK(a.table() == b.table());
  }
}

TEST_CASE("one worker and the reference gradient agree") {
  const auto data = toy(11, 12, 2);
  const auto c = small_config(ModelType::simple, true);
  Trainer t(data, c);
  const auto before = t.table();
  std::vector<Triple> pos(data.train.triples.begin(), data.train.triples.begin() + 4);
  // Same sampler stream as the trainer's worker 0.
  NegativeSampler s(data.n_entities(), data.pairs, c.neg_spec(), 0);
  CorruptedBatch neg;
  s.make_batch(pos, neg, 0);
  Gradients g(before);
  const auto want = reference::batch_gradients(before, data.pairs, c, pos, neg.negatives, g);
  const auto got = t.step(pos);
  CHECK(got.total == want.total);
  auto manual = before;
  AdamState adam(manual);
  adam.step(manual, g, c.adam);
  CHECK(manual == t.table());
}

TEST_CASE("loss decreases on a five-triple KG") {
  std::vector<StringTriple> train = {
      {"a", "likes", "b"}, {"b", "likes", "c"}, {"c", "likes", "a"},
      {"a", "knows", "d"}, {"d", "knows", "e"}};
  std::vector<StringTriple> valid = {{"b", "knows", "e"}};
  const auto data = make_dataset(train, valid, {});
  for (auto type : kTypes) {
    for (bool joint : {false, true}) {
      auto c = small_config(type, joint);
      c.dim = 8;
      c.batch_size = 2;
      c.n_neg = 4;
      c.adam.lr = 0.02;
      Trainer t(data, c);
      std::vector<double> losses;
      for (int e = 0; e < 50; ++e) losses.push_back(t.run_epoch().loss_tri);
      const double first = std::accumulate(losses.begin(), losses.begin() + 10, 0.0);
      const double last = std::accumulate(losses.end() - 10, losses.end(), 0.0);
      CHECK(last < first);
    }
  }
}

TEST_CASE("early stopping policy") {
  EarlyStopping s(1);
  CHECK(s.observe(0.3));
  CHECK_FALSE(s.should_stop());
  CHECK_FALSE(s.observe(0.2));
  CHECK(s.should_stop());

  EarlyStopping ties(2);
  ties.observe(0.5);
  CHECK_FALSE(ties.observe(0.5));  // equal is not an improvement
  CHECK_FALSE(ties.should_stop());
  CHECK(ties.observe(0.6));
  CHECK(ties.best() == 0.6);
}

TEST_CASE("fit keeps the best checkpoint and stops on patience") {
  const auto data = toy(12, 10, 2);
  auto c = small_config(ModelType::distmult, false);
  c.patience = 1;
  c.eval_every = 1;
  c.max_epochs = 10;
  std::vector<double> seq = {0.3, 0.2, 0.9};
  std::size_t calls = 0;
  auto result = fit(data, c, [&](const EmbeddingTable&) { return seq.at(calls++); });
  CHECK(calls == 2);
  CHECK(result.log.epochs.size() == 2);
  CHECK(result.best_epoch == 1);
  CHECK(result.stopped_early);
  CHECK(result.log.epochs[0].best);
  CHECK_FALSE(result.log.epochs[1].best);

  Trainer manual(data, c);
  manual.run_epoch();
  CHECK(result.best == manual.table());
}

TEST_CASE("fit validates every eval_every epochs and after the last") {
  const auto data = toy(13, 10, 2);
  auto c = small_config(ModelType::distmult, false);
  c.eval_every = 3;
  c.max_epochs = 7;
  c.patience = 100;
  std::vector<int> evaluated;
  double v = 0.0;
  auto result = fit(
      data, c, [&](const EmbeddingTable&) { return v += 0.1; },
      [&](const EpochRecord& r) {
        if (r.val_hits10) evaluated.push_back(r.stats.epoch);
      });
  CHECK(evaluated == std::vector<int>{3, 6, 7});
  CHECK(result.best_epoch == 7);
  for (std::size_t i = 0; i < result.log.epochs.size(); ++i) {
    CHECK(result.log.epochs[i].stats.epoch == static_cast<int>(i) + 1);
  }
}

TEST_CASE("max_epochs = 0 returns the initial table") {
  const auto data = toy(14);
  auto c = small_config(ModelType::complex, true);
  c.max_epochs = 0;
  const auto result = fit(data, c);
  CHECK(result.log.epochs.empty());
  CHECK(result.best == init_table(c.model, data.n_entities(), data.n_relations(), c.dim, c.seed));
}

TEST_CASE("validation never reads the pair relations") {
  const auto data = toy(15, 12, 2);
  auto c = small_config(ModelType::complex, true);
  c.max_epochs = 3;
  std::uint64_t reads_in_eval = 0;
  auto result = fit(data, c, [&](const EmbeddingTable& t) {
    reset_bi_relation_reads();
    const double h = validation_hits10(t, data, c.tie);
    reads_in_eval += bi_relation_reads();
    return h;
  });
  CHECK(result.log.epochs.size() == 3);
  CHECK(reads_in_eval == 0);

  // Training itself does use them, so the counter is live.
  reset_bi_relation_reads();
  Trainer t(data, c);
  t.run_epoch();
  CHECK(bi_relation_reads() > 0);
}

TEST_CASE("full-softmax budget guard") {
  TrainConfig c;
  c.loss = LossMode::full_softmax;
  c.batch_size = 1000;
  c.full_softmax_budget = 1'000'000;
  CHECK_NOTHROW(check_full_softmax_budget(c, 1000));
  CHECK_THROWS_AS(check_full_softmax_budget(c, 1001), ContractViolation);
  try {
    check_full_softmax_budget(c, 5000);
  } catch (const ContractViolation& e) {
    CHECK(std::string(e.what()).find("--loss sampled") != std::string::npos);
  }
}

TEST_CASE("training log lines") {
  CHECK(train_log_header() == "epoch\tL_tri\tL_bi\tL_total\tseconds\tval_hits@10\n");
  EpochRecord r;
  r.stats.epoch = 3;
  r.stats.loss_tri = 1.5;
  r.stats.loss_total = 1.5;
  CHECK(train_log_line(r) == "3\t1.5\t0\t1.5\t0\t\n");
  r.val_hits10 = 0.25;
  CHECK(train_log_line(r) == "3\t1.5\t0\t1.5\t0\t0.25\n");
}
