#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kgforge/model.hpp"

namespace kgforge {

/// Row-sparse gradient accumulator for one parameter matrix. Only rows
/// written through `row()` are tracked and later cleared.
class GradBuffer {
 public:
  GradBuffer() = default;
  GradBuffer(std::size_t rows, std::size_t width);

  std::span<double> row(std::size_t r);
  std::span<const double> row_view(std::size_t r) const {
    return {values_.data() + r * width_, width_};
  }

  bool touched(std::size_t r) const { return marks_[r] != 0; }
  std::span<const std::int32_t> touched_rows() const { return touched_; }

  /// this += other, in other's touched order.
  void add(const GradBuffer& other);
  void clear();

  std::size_t rows() const { return rows_; }
  std::size_t width() const { return width_; }

 private:
  std::size_t rows_ = 0;
  std::size_t width_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> marks_;
  std::vector<std::int32_t> touched_;
};

/// Gradient buffers shaped like an EmbeddingTable.
struct Gradients {
  GradBuffer entity;
  GradBuffer relation_tri;
  GradBuffer relation_bi;

  explicit Gradients(const EmbeddingTable& table);
  Gradients() = default;

  GradBuffer& relation(RelationModule m) { return m == RelationModule::tri ? relation_tri : relation_bi; }
  void add(const Gradients& other);
  void clear();
};

struct AdamParams {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Lazy (row-sparse) Adam: moments and parameters change only on rows
/// present in the gradient; bias correction uses the global step count.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const EmbeddingTable& table);

  void step(EmbeddingTable& table, const Gradients& grads, const AdamParams& params);

  std::uint64_t steps() const { return t_; }
  std::span<const double> m_entity() const { return m_entity_; }
  std::span<const double> v_entity() const { return v_entity_; }

 private:
  void update(std::span<double> params, std::span<double> m, std::span<double> v,
              const GradBuffer& grad, const AdamParams& p, double bias1, double bias2,
              const char* name);

  std::uint64_t t_ = 0;
  std::vector<double> m_entity_, v_entity_;
  std::vector<double> m_tri_, v_tri_;
  std::vector<double> m_bi_, v_bi_;
};

}  // namespace kgforge
