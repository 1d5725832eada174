#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kgforge/common.hpp"

namespace kgforge {

enum class ModelType : std::uint8_t { distmult = 0, complex = 1, simple = 2 };

std::string_view model_name(ModelType type);
std::optional<ModelType> parse_model(std::string_view name);

struct ModelKind {
  ModelType type = ModelType::complex;
  bool joint = false;

  friend bool operator==(const ModelKind&, const ModelKind&) = default;
};

/// Triple module (s_tri, used for ranking) or pair module (s_bi, training only).
enum class RelationModule : std::uint8_t { tri, bi };

// Row layouts, all of width `dim` per block:
//   DistMult  entity [e]        relation [r]
//   ComplEx   entity [re | im]  relation [re | im]
//   SimplE    entity [e1 | e2]  relation [r | r_inv]
std::size_t entity_width(ModelType type, std::size_t dim);
std::size_t relation_width(ModelType type, std::size_t dim);

/// Parameter storage. The entity matrix is shared by both relation modules.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(ModelKind kind, std::size_t n_entities, std::size_t n_relations,
                 std::size_t dim);

  ModelKind kind() const { return kind_; }
  ModelType type() const { return kind_.type; }
  std::size_t n_entities() const { return n_entities_; }
  std::size_t n_relations() const { return n_relations_; }
  std::size_t dim() const { return dim_; }
  std::size_t entity_width() const { return entity_width_; }
  std::size_t relation_width() const { return relation_width_; }

  std::span<const double> entity(EntityId e) const {
    return {entities_.data() + static_cast<std::size_t>(e) * entity_width_, entity_width_};
  }
  std::span<double> entity(EntityId e) {
    return {entities_.data() + static_cast<std::size_t>(e) * entity_width_, entity_width_};
  }

  std::span<const double> relation(RelationModule m, RelationId r) const;
  std::span<double> relation(RelationModule m, RelationId r);

  std::span<const double> entity_data() const { return entities_; }
  std::span<double> entity_data() { return entities_; }
  std::span<const double> relation_data(RelationModule m) const;
  std::span<double> relation_data(RelationModule m);

  bool all_finite() const;

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  ModelKind kind_{};
  std::size_t n_entities_ = 0;
  std::size_t n_relations_ = 0;
  std::size_t dim_ = 0;
  std::size_t entity_width_ = 0;
  std::size_t relation_width_ = 0;
  std::vector<double> entities_;
  std::vector<double> relations_tri_;
  std::vector<double> relations_bi_;
};

/// Reads of pair-module relation rows since the last reset.
std::uint64_t bi_relation_reads();
void reset_bi_relation_reads();

/// Uniform on [-sqrt(6/d), sqrt(6/d)], deterministic in `seed`.
EmbeddingTable init_table(ModelKind kind, std::size_t n_entities, std::size_t n_relations,
                          std::size_t dim, std::uint64_t seed);

// Scalar scorers.
double score_distmult(std::span<const double> h, std::span<const double> r,
                      std::span<const double> t);
/// Re(sum h_i r_i conj(t_i)).
double score_complex(std::span<const std::complex<double>> h,
                     std::span<const std::complex<double>> r,
                     std::span<const std::complex<double>> t);
/// Same score on split [re | im] rows of width 2d.
double score_complex_split(std::span<const double> h, std::span<const double> r,
                           std::span<const double> t);
double score_simple(std::span<const double> h1, std::span<const double> h2,
                    std::span<const double> t1, std::span<const double> t2,
                    std::span<const double> r, std::span<const double> r_inv);

/// Dispatch on raw table rows.
double score_rows(ModelType type, std::span<const double> h, std::span<const double> r,
                  std::span<const double> t);

double score_triple(const EmbeddingTable& table, const Triple& t, RelationModule m);

/// Adds coef * (ds/dh, ds/dr, ds/dt) into the output rows. Outputs may alias
/// each other (h == t) but must not alias the inputs.
void accumulate_score_grad(ModelType type, std::span<const double> h, std::span<const double> r,
                           std::span<const double> t, double coef, std::span<double> dh,
                           std::span<double> dr, std::span<double> dt);

struct ScoreGrad {
  std::vector<double> head;
  std::vector<double> relation;
  std::vector<double> tail;
};

ScoreGrad grad_score(ModelType type, std::span<const double> h, std::span<const double> r,
                     std::span<const double> t);

/// q with score(h, r, x) == dot(q, x) for every tail row x.
void tail_query(ModelType type, std::span<const double> h, std::span<const double> r,
                std::span<double> q);
/// q with score(x, r, t) == dot(q, x) for every head row x.
void head_query(ModelType type, std::span<const double> r, std::span<const double> t,
                std::span<double> q);

/// Plain sequential dot product; every ranking kernel goes through it so
/// gold and candidate scores are computed identically.
inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// rows x cols scores; column 0 is the positive, columns 1.. its corruptions.
struct ScoreBatch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> scores;

  double at(std::size_t i, std::size_t j) const { return scores[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {scores.data() + i * cols, cols}; }
};

/// `triples` holds rows * cols triples in row-major order.
ScoreBatch score_batch(const EmbeddingTable& table, std::span<const Triple> triples,
                       std::size_t cols, RelationModule m);

namespace reference {
ScoreBatch score_batch(const EmbeddingTable& table, std::span<const Triple> triples,
                       std::size_t cols, RelationModule m);
}  // namespace reference

}  // namespace kgforge
