#include "kgforge/optim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kgforge {

GradBuffer::GradBuffer(std::size_t rows, std::size_t width)
    : rows_(rows), width_(width), values_(rows * width, 0.0), marks_(rows, 0) {}

std::span<double> GradBuffer::row(std::size_t r) {
  if (marks_[r] == 0) {
    marks_[r] = 1;
    touched_.push_back(static_cast<std::int32_t>(r));
  }
  return {values_.data() + r * width_, width_};
}

void GradBuffer::add(const GradBuffer& other) {
  require(other.rows_ == rows_ && other.width_ == width_, "grad buffer shape mismatch");
  for (auto r : other.touched_) {
    auto dst = row(static_cast<std::size_t>(r));
    auto src = other.row_view(static_cast<std::size_t>(r));
    for (std::size_t i = 0; i < width_; ++i) dst[i] += src[i];
  }
}

void GradBuffer::clear() {
  for (auto r : touched_) {
    std::fill_n(values_.begin() + static_cast<std::ptrdiff_t>(r * width_), width_, 0.0);
    marks_[static_cast<std::size_t>(r)] = 0;
  }
  touched_.clear();
}

Gradients::Gradients(const EmbeddingTable& table)
    : entity(table.n_entities(), table.entity_width()),
      relation_tri(table.n_relations(), table.relation_width()),
      relation_bi(table.kind().joint ? table.n_relations() : 0, table.relation_width()) {}

void Gradients::add(const Gradients& other) {
  entity.add(other.entity);
  relation_tri.add(other.relation_tri);
  relation_bi.add(other.relation_bi);
}

void Gradients::clear() {
  entity.clear();
  relation_tri.clear();
  relation_bi.clear();
}

AdamState::AdamState(const EmbeddingTable& table)
    : m_entity_(table.entity_data().size(), 0.0),
      v_entity_(table.entity_data().size(), 0.0),
      m_tri_(table.relation_data(RelationModule::tri).size(), 0.0),
      v_tri_(table.relation_data(RelationModule::tri).size(), 0.0) {
  if (table.kind().joint) {
    m_bi_.assign(table.relation_data(RelationModule::bi).size(), 0.0);
    v_bi_.assign(m_bi_.size(), 0.0);
  }
}

void AdamState::update(std::span<double> params, std::span<double> m, std::span<double> v,
                       const GradBuffer& grad, const AdamParams& p, double bias1, double bias2,
                       const char* name) {
  const std::size_t w = grad.width();
  const auto rows = grad.touched_rows();
  const auto n = static_cast<std::int64_t>(rows.size());
  bool finite = true;
#pragma omp parallel for schedule(static) reduction(&& : finite)
  for (std::int64_t k = 0; k < n; ++k) {
    const auto r = static_cast<std::size_t>(rows[static_cast<std::size_t>(k)]);
    const auto g = grad.row_view(r);
    const std::size_t base = r * w;
    for (std::size_t i = 0; i < w; ++i) {
      double& mi = m[base + i];
      double& vi = v[base + i];
      mi = p.beta1 * mi + (1.0 - p.beta1) * g[i];
      vi = p.beta2 * vi + (1.0 - p.beta2) * g[i] * g[i];
      const double m_hat = mi / bias1;
      const double v_hat = vi / bias2;
      params[base + i] -= p.lr * m_hat / (std::sqrt(v_hat) + p.eps);
      finite = finite && std::isfinite(params[base + i]);
    }
  }
  if (!finite) {
    for (auto r : rows) {
      for (std::size_t i = 0; i < w; ++i) {
        const std::size_t at = static_cast<std::size_t>(r) * w + i;
        if (!std::isfinite(params[at])) {
          std::ostringstream msg;
          msg << "non-finite Adam update in " << name << " row " << r << " col " << i
              << " (grad " << grad.row_view(static_cast<std::size_t>(r))[i] << ", m " << m[at]
              << ", v " << v[at] << ", step " << t_ << ")";
          throw TrainingError(msg.str());
        }
      }
    }
  }
}

void AdamState::step(EmbeddingTable& table, const Gradients& grads, const AdamParams& params) {
  ++t_;
  const double bias1 = 1.0 - std::pow(params.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(params.beta2, static_cast<double>(t_));
  update(table.entity_data(), m_entity_, v_entity_, grads.entity, params, bias1, bias2,
         "entity");
  update(table.relation_data(RelationModule::tri), m_tri_, v_tri_, grads.relation_tri, params,
         bias1, bias2, "relation_tri");
  if (table.kind().joint) {
    update(table.relation_data(RelationModule::bi), m_bi_, v_bi_, grads.relation_bi, params,
           bias1, bias2, "relation_bi");
  }
}

}  // namespace kgforge
