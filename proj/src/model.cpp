#include "kgforge/model.hpp"

#include <atomic>
#include <cmath>
#include <random>

namespace kgforge {

namespace {
std::atomic<std::uint64_t> g_bi_reads{0};
}

std::uint64_t bi_relation_reads() { return g_bi_reads.load(std::memory_order_relaxed); }
void reset_bi_relation_reads() { g_bi_reads.store(0, std::memory_order_relaxed); }

std::string_view model_name(ModelType type) {
  switch (type) {
    case ModelType::distmult: return "distmult";
    case ModelType::complex: return "complex";
    case ModelType::simple: return "simple";
  }
  return "?";
}

std::optional<ModelType> parse_model(std::string_view name) {
  if (name == "distmult") return ModelType::distmult;
  if (name == "complex") return ModelType::complex;
  if (name == "simple") return ModelType::simple;
  return std::nullopt;
}

std::size_t entity_width(ModelType type, std::size_t dim) {
  return type == ModelType::distmult ? dim : 2 * dim;
}

std::size_t relation_width(ModelType type, std::size_t dim) {
  return type == ModelType::distmult ? dim : 2 * dim;
}

EmbeddingTable::EmbeddingTable(ModelKind kind, std::size_t n_entities, std::size_t n_relations,
                               std::size_t dim)
    : kind_(kind),
      n_entities_(n_entities),
      n_relations_(n_relations),
      dim_(dim),
      entity_width_(kgforge::entity_width(kind.type, dim)),
      relation_width_(kgforge::relation_width(kind.type, dim)) {
  require(n_entities > 0 && n_relations > 0 && dim > 0, "embedding table dims must be positive");
  entities_.assign(n_entities_ * entity_width_, 0.0);
  relations_tri_.assign(n_relations_ * relation_width_, 0.0);
  if (kind.joint) relations_bi_.assign(n_relations_ * relation_width_, 0.0);
}

std::span<const double> EmbeddingTable::relation(RelationModule m, RelationId r) const {
  const auto offset = static_cast<std::size_t>(r) * relation_width_;
  if (m == RelationModule::tri) return {relations_tri_.data() + offset, relation_width_};
  require(kind_.joint, "pair module requested on a non-joint model");
  g_bi_reads.fetch_add(1, std::memory_order_relaxed);
  return {relations_bi_.data() + offset, relation_width_};
}

std::span<double> EmbeddingTable::relation(RelationModule m, RelationId r) {
  const auto offset = static_cast<std::size_t>(r) * relation_width_;
  if (m == RelationModule::tri) return {relations_tri_.data() + offset, relation_width_};
  require(kind_.joint, "pair module requested on a non-joint model");
  return {relations_bi_.data() + offset, relation_width_};
}

std::span<const double> EmbeddingTable::relation_data(RelationModule m) const {
  if (m == RelationModule::tri) return relations_tri_;
  require(kind_.joint, "pair module requested on a non-joint model");
  return relations_bi_;
}

std::span<double> EmbeddingTable::relation_data(RelationModule m) {
  if (m == RelationModule::tri) return relations_tri_;
  require(kind_.joint, "pair module requested on a non-joint model");
  return relations_bi_;
}

bool EmbeddingTable::all_finite() const {
  for (const auto* v : {&entities_, &relations_tri_, &relations_bi_}) {
    for (double x : *v) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

EmbeddingTable init_table(ModelKind kind, std::size_t n_entities, std::size_t n_relations,
                          std::size_t dim, std::uint64_t seed) {
  EmbeddingTable table(kind, n_entities, n_relations, dim);
  const double bound = std::sqrt(6.0 / static_cast<double>(dim));
  std::seed_seq seq{seed, std::uint64_t{0x1e17}};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unif(-bound, bound);
  for (double& x : table.entity_data()) x = unif(rng);
  for (double& x : table.relation_data(RelationModule::tri)) x = unif(rng);
  if (kind.joint) {
    for (double& x : table.relation_data(RelationModule::bi)) x = unif(rng);
  }
  return table;
}

double score_distmult(std::span<const double> h, std::span<const double> r,
                      std::span<const double> t) {
  require(h.size() == r.size() && r.size() == t.size(), "distmult: dimension mismatch");
  double s = 0.0;
  // r * (h * t) keeps s(h, r, t) == s(t, r, h) exact in floating point.
  for (std::size_t i = 0; i < h.size(); ++i) s += r[i] * (h[i] * t[i]);
  return s;
}

double score_complex(std::span<const std::complex<double>> h,
                     std::span<const std::complex<double>> r,
                     std::span<const std::complex<double>> t) {
  require(h.size() == r.size() && r.size() == t.size(), "complex: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) s += (h[i] * r[i] * std::conj(t[i])).real();
  return s;
}

double score_complex_split(std::span<const double> h, std::span<const double> r,
                           std::span<const double> t) {
  require(h.size() == r.size() && r.size() == t.size() && h.size() % 2 == 0,
          "complex: dimension mismatch");
  const std::size_t d = h.size() / 2;
  const double* hr = h.data();
  const double* hi = h.data() + d;
  const double* rr = r.data();
  const double* ri = r.data() + d;
  const double* tr = t.data();
  const double* ti = t.data() + d;
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    s += hr[i] * rr[i] * tr[i] + hi[i] * rr[i] * ti[i] + hr[i] * ri[i] * ti[i] -
         hi[i] * ri[i] * tr[i];
  }
  return s;
}

double score_simple(std::span<const double> h1, std::span<const double> h2,
                    std::span<const double> t1, std::span<const double> t2,
                    std::span<const double> r, std::span<const double> r_inv) {
  const std::size_t d = r.size();
  require(h1.size() == d && h2.size() == d && t1.size() == d && t2.size() == d &&
              r_inv.size() == d,
          "simple: dimension mismatch");
  double forward = 0.0;
  double backward = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    forward += h1[i] * r[i] * t1[i];
    backward += t2[i] * r_inv[i] * h2[i];
  }
  return 0.5 * forward + 0.5 * backward;
}

double score_rows(ModelType type, std::span<const double> h, std::span<const double> r,
                  std::span<const double> t) {
  switch (type) {
    case ModelType::distmult: return score_distmult(h, r, t);
    case ModelType::complex: return score_complex_split(h, r, t);
    case ModelType::simple: {
      require(h.size() == r.size() && t.size() == r.size() && r.size() % 2 == 0,
              "simple: dimension mismatch");
      const std::size_t d = r.size() / 2;
      return score_simple(h.first(d), h.subspan(d), t.first(d), t.subspan(d), r.first(d),
                          r.subspan(d));
    }
  }
  return 0.0;
}

double score_triple(const EmbeddingTable& table, const Triple& t, RelationModule m) {
  return score_rows(table.type(), table.entity(t.head), table.relation(m, t.relation),
                    table.entity(t.tail));
}

void accumulate_score_grad(ModelType type, std::span<const double> h, std::span<const double> r,
                           std::span<const double> t, double coef, std::span<double> dh,
                           std::span<double> dr, std::span<double> dt) {
  const std::size_t w = r.size();
  require(h.size() == w && t.size() == w && dh.size() == w && dr.size() == w && dt.size() == w,
          "score gradient: dimension mismatch");
  switch (type) {
    case ModelType::distmult:
      for (std::size_t i = 0; i < w; ++i) {
        const double hi = h[i], ri = r[i], ti = t[i];
        dh[i] += coef * ri * ti;
        dr[i] += coef * hi * ti;
        dt[i] += coef * hi * ri;
      }
      break;
    case ModelType::complex: {
      const std::size_t d = w / 2;
      for (std::size_t i = 0; i < d; ++i) {
        const double hr = h[i], hi = h[d + i];
        const double rr = r[i], ri = r[d + i];
        const double tr = t[i], ti = t[d + i];
        dh[i] += coef * (rr * tr + ri * ti);
        dh[d + i] += coef * (rr * ti - ri * tr);
        dr[i] += coef * (hr * tr + hi * ti);
        dr[d + i] += coef * (hr * ti - hi * tr);
        dt[i] += coef * (hr * rr - hi * ri);
        dt[d + i] += coef * (hi * rr + hr * ri);
      }
      break;
    }
    case ModelType::simple: {
      const std::size_t d = w / 2;
      const double c = 0.5 * coef;
      for (std::size_t i = 0; i < d; ++i) {
        const double h1 = h[i], h2 = h[d + i];
        const double t1 = t[i], t2 = t[d + i];
        const double rf = r[i], rb = r[d + i];
        dh[i] += c * rf * t1;
        dh[d + i] += c * t2 * rb;
        dt[i] += c * h1 * rf;
        dt[d + i] += c * rb * h2;
        dr[i] += c * h1 * t1;
        dr[d + i] += c * t2 * h2;
      }
      break;
    }
  }
}

ScoreGrad grad_score(ModelType type, std::span<const double> h, std::span<const double> r,
                     std::span<const double> t) {
  ScoreGrad g{std::vector<double>(h.size()), std::vector<double>(r.size()),
              std::vector<double>(t.size())};
  accumulate_score_grad(type, h, r, t, 1.0, g.head, g.relation, g.tail);
  return g;
}

void tail_query(ModelType type, std::span<const double> h, std::span<const double> r,
                std::span<double> q) {
  const std::size_t w = r.size();
  require(h.size() == w && q.size() == w, "tail query: dimension mismatch");
  switch (type) {
    case ModelType::distmult:
      for (std::size_t i = 0; i < w; ++i) q[i] = h[i] * r[i];
      break;
    case ModelType::complex: {
      const std::size_t d = w / 2;
      for (std::size_t i = 0; i < d; ++i) {
        q[i] = h[i] * r[i] - h[d + i] * r[d + i];
        q[d + i] = h[d + i] * r[i] + h[i] * r[d + i];
      }
      break;
    }
    case ModelType::simple: {
      const std::size_t d = w / 2;
      for (std::size_t i = 0; i < d; ++i) {
        q[i] = 0.5 * h[i] * r[i];
        q[d + i] = 0.5 * r[d + i] * h[d + i];
      }
      break;
    }
  }
}

void head_query(ModelType type, std::span<const double> r, std::span<const double> t,
                std::span<double> q) {
  const std::size_t w = r.size();
  require(t.size() == w && q.size() == w, "head query: dimension mismatch");
  switch (type) {
    case ModelType::distmult:
      for (std::size_t i = 0; i < w; ++i) q[i] = r[i] * t[i];
      break;
    case ModelType::complex: {
      const std::size_t d = w / 2;
      for (std::size_t i = 0; i < d; ++i) {
        q[i] = r[i] * t[i] + r[d + i] * t[d + i];
        q[d + i] = r[i] * t[d + i] - r[d + i] * t[i];
      }
      break;
    }
    case ModelType::simple: {
      const std::size_t d = w / 2;
      for (std::size_t i = 0; i < d; ++i) {
        q[i] = 0.5 * r[i] * t[i];
        q[d + i] = 0.5 * t[d + i] * r[d + i];
      }
      break;
    }
  }
}

ScoreBatch score_batch(const EmbeddingTable& table, std::span<const Triple> triples,
                       std::size_t cols, RelationModule m) {
  require(cols > 0 && triples.size() % cols == 0, "score batch: triples not a multiple of cols");
  require(m == RelationModule::tri || table.kind().joint,
          "pair module requested on a non-joint model");
  ScoreBatch out{triples.size() / cols, cols, std::vector<double>(triples.size())};
  const auto n = static_cast<std::int64_t>(triples.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out.scores[static_cast<std::size_t>(i)] =
        score_triple(table, triples[static_cast<std::size_t>(i)], m);
  }
  return out;
}

}  // namespace kgforge
