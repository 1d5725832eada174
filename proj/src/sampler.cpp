#include "kgforge/sampler.hpp"

#include <string>

namespace kgforge {

void NegSpec::validate() const {
  require(n_neg >= 1, "n_neg must be >= 1");
  require(p_bias >= 0.0 && p_bias <= 1.0, "p_bias must lie in [0, 1]");
}

namespace {

EntityId uniform_entity(std::size_t n_entities, Rng& rng) {
  std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(n_entities) - 1);
  return pick(rng);
}

std::span<const EntityId> candidates(const PairIndex& idx, RelationId r, Side side) {
  return side == Side::tail ? idx.tails_of(r) : idx.heads_of(r);
}

Rng seeded(std::uint64_t seed) {
  std::seed_seq seq{seed, std::uint64_t{0x5a3b}};
  return Rng(seq);
}

}  // namespace

Triple corrupt_uniform(const Triple& t, Side side, std::size_t n_entities, Rng& rng) {
  require(n_entities > 0, "corrupt_uniform: empty vocabulary");
  return with_entity(t, side, uniform_entity(n_entities, rng));
}

Triple corrupt_biased(const Triple& t, Side side, const PairIndex& idx, std::size_t n_entities,
                      double p_bias, Rng& rng) {
  if (p_bias <= 0.0) return corrupt_uniform(t, side, n_entities, rng);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < p_bias) {
    auto pool = candidates(idx, t.relation, side);
    if (!pool.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      return with_entity(t, side, pool[pick(rng)]);
    }
  }
  return corrupt_uniform(t, side, n_entities, rng);
}

NegativeSampler::NegativeSampler(std::size_t n_entities, const PairIndex& idx, NegSpec spec,
                                 std::size_t worker_id)
    : n_entities_(n_entities), idx_(&idx), spec_(spec), rng_(seeded(spec.seed + worker_id)) {
  spec_.validate();
  require(n_entities_ > 0, "sampler: empty vocabulary");
}

Triple NegativeSampler::draw(const Triple& t, Side side) {
  if (spec_.p_bias > 0.0 && candidates(*idx_, t.relation, side).empty() &&
      warned_empty_.insert(t.relation).second) {
    log_info("relation " + std::to_string(t.relation) +
             " has no training candidates for biased sampling; using uniform");
  }
  return corrupt_biased(t, side, *idx_, n_entities_, spec_.p_bias, rng_);
}

Triple NegativeSampler::corrupt(const Triple& t, Side side) {
  if (!spec_.exclude_gold || n_entities_ <= 1) return draw(t, side);
  const EntityId gold = entity_at(t, side);
  for (int attempt = 0; attempt < 32; ++attempt) {
    Triple c = draw(t, side);
    if (entity_at(c, side) != gold) return c;
  }
  // Candidate pool is (almost) only the gold entity: uniform over the rest.
  std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(n_entities_) - 2);
  EntityId e = pick(rng_);
  if (e >= gold) ++e;
  return with_entity(t, side, e);
}

Side NegativeSampler::draw_side(std::size_t positive_index) {
  if (spec_.side_policy == SidePolicy::per_positive) {
    return positive_index % 2 == 0 ? Side::head : Side::tail;
  }
  std::uniform_int_distribution<int> coin(0, 1);
  return coin(rng_) == 0 ? Side::head : Side::tail;
}

void NegativeSampler::make_batch(std::span<const Triple> positives, CorruptedBatch& out,
                                 std::size_t first_index) {
  const auto n_neg = static_cast<std::size_t>(spec_.n_neg);
  out.n_pos = positives.size();
  out.n_neg = n_neg;
  out.negatives.resize(positives.size() * n_neg);
  out.sides.resize(positives.size() * n_neg);
  for (std::size_t i = 0; i < positives.size(); ++i) {
    for (std::size_t j = 0; j < n_neg; ++j) {
      const Side side = draw_side(first_index + i);
      out.sides[i * n_neg + j] = side;
      out.negatives[i * n_neg + j] = corrupt(positives[i], side);
    }
  }
}

CorruptedBatch NegativeSampler::make_batch(std::span<const Triple> positives) {
  require(!positives.empty(), "make_batch: no positives");
  CorruptedBatch out;
  make_batch(positives, out, 0);
  return out;
}

CorruptedBatch make_batch_negatives(std::span<const Triple> positives, const NegSpec& spec,
                                    const PairIndex& idx, std::size_t n_entities) {
  NegativeSampler sampler(n_entities, idx, spec, 0);
  return sampler.make_batch(positives);
}

}  // namespace kgforge
