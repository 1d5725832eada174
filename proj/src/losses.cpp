#include "kgforge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kgforge/common.hpp"

namespace kgforge {

double logsumexp(std::span<const double> x) {
  require(!x.empty(), "logsumexp of empty input");
  const double m = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double loss_tri_sampled_softmax(std::span<const double> scores, std::span<double> grads,
                                std::size_t example_index) {
  require(!scores.empty() && grads.size() == scores.size(), "softmax: size mismatch");
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw TrainingError("non-finite score in softmax loss at triple index " +
                          std::to_string(example_index));
    }
  }
  const auto top = static_cast<std::size_t>(
      std::max_element(scores.begin(), scores.end()) - scores.begin());
  const double m = scores[top];
  // sum of exp(s - m) excluding the max term, so log1p keeps precision
  // when one score dominates.
  double rest = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    grads[j] = j == top ? 1.0 : std::exp(scores[j] - m);
    if (j != top) rest += grads[j];
  }
  const double total = 1.0 + rest;
  for (double& g : grads) g /= total;
  grads[0] -= 1.0;
  return (m - scores[0]) + std::log1p(rest);
}

BceResult loss_bi_bce(double score, bool label) {
  // softplus(s) - s == softplus(-s) and sigmoid(s) - 1 == -sigmoid(-s), both exact forms.
  if (label) return {softplus(-score), -sigmoid(-score)};
  return {softplus(score), sigmoid(score)};
}

}  // namespace kgforge
