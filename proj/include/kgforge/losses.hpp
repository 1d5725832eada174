#pragma once

#include <cstddef>
#include <span>

namespace kgforge {

/// log(sum exp(x)) with max subtraction.
double logsumexp(std::span<const double> x);

/// log(1 + exp(x)) without overflow.
double softplus(double x);

double sigmoid(double x);

/// NLL of a softmax whose class 0 is the positive. Writes
/// softmax(scores) - onehot(0) into `grads` and returns the loss.
/// Throws TrainingError naming `example_index` on a non-finite score.
double loss_tri_sampled_softmax(std::span<const double> scores, std::span<double> grads,
                                std::size_t example_index = 0);

struct BceResult {
  double loss = 0.0;
  double grad = 0.0;
};

/// Binary cross-entropy on a logit: softplus(s) - label * s.
BceResult loss_bi_bce(double score, bool label);

inline double loss_joint(double loss_tri, double loss_bi, double alpha) {
  return loss_tri + alpha * loss_bi;
}

}  // namespace kgforge
