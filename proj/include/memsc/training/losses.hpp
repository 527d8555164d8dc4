#pragma once

#include <cstddef>
#include <vector>

#include "memsc/codec/codec.hpp"
#include "memsc/numerics/tensor.hpp"

namespace memsc::training {

using numerics::Tensor;

// Scalar loss with per-example diagnostics (the predicted probability of the
// true label, where that applies).
struct LossValue {
    double value = 0.0;
    double true_label_prob = 0.0;
};

// -log p_hat(label); the log argument is clamped at 1e-12
LossValue ce_loss(const codec::AnswerDistribution& dist, std::size_t label);
// ||z - z_hat||^2 for one example (batch averaging is the caller's mean)
LossValue mse_loss(const Tensor& z, const Tensor& z_hat);
// -p_hat(label), the softmax relaxation of answer accuracy
LossValue acc_loss(const codec::AnswerDistribution& dist, std::size_t label);

// Verifies grad(acc loss) = p_hat(label) * grad(CE loss) with both gradients
// obtained by reverse mode through independent compositions, and reports the
// two gradient norms (the CE route stays bounded away from zero as
// p_hat -> 0 while the accuracy route vanishes).
struct Prop1Report {
    double max_deviation = 0.0;  // max_j |gAcc_j - p_true * gCE_j|
    double p_true = 0.0;
    double acc_grad_norm = 0.0;
    double ce_grad_norm = 0.0;
};

Prop1Report prop1_gradient_check(const Tensor& logits, std::size_t label);

// Classification mutual-information lower bound on an enumerable toy joint:
//   bound = H(a) - E[CE(a, a_hat | x)] <= I(x; a),
// with equality when the predictor equals the true posterior.
// `joint` is the [X x A] distribution p(x, a); `predictor` rows are q(a | x).
struct MiBound {
    double exact_mi = 0.0;
    double bound = 0.0;
    double label_entropy = 0.0;
};

MiBound mi_bound_classification(const Tensor& joint, const Tensor& predictor);
// true posterior rows p(a | x), the predictor that makes the bound tight
Tensor posterior_of(const Tensor& joint);

// Regression surrogate E|a - a_hat| of the log-error bound; its gradient
// magnitude never exceeds 1 per element.
LossValue mi_bound_regression_surrogate(const Tensor& a, const Tensor& a_hat);

}  // namespace memsc::training
