#pragma once

#include <cstddef>
#include <span>

#include "pda/autodiff.hpp"
#include "pda/tensor.hpp"

namespace pda {

/// Which terms of the unified objective are active.
///   kEdann: weighted classification + conditional entropy + entropy-aware adversarial
///   kBaa:   kEdann plus source samples borrowed into the target side of the adversary
///   kFull:  kBaa plus the confidence-weighted complement entropy
enum class ObjectiveMode { kEdann, kBaa, kFull };

struct LossBreakdown {
  double cls_w = 0.0;  // class-weighted cross-entropy
  double ent = 0.0;    // mean target prediction entropy
  double wce = 0.0;    // normalized complement entropy, in [-1, 0]
  double adv = 0.0;    // adversarial value, maximized by D
  double total_min_player = 0.0;
};

// ---- Value-level API -------------------------------------------------------
// Each function validates its inputs and throws std::invalid_argument on
// violations. They evaluate the same graph expressions the trainer uses.

/// H(h) = -sum h log h (natural log, 0 log 0 = 0). h must sum to 1 within 1e-9.
double entropy(std::span<const double> h);
/// w = 1 + exp(-H(h)), in (1, 2].
double sample_weight(std::span<const double> h);
/// mean_i m[y_i] * (-log p_i[y_i]).
double weighted_cls_loss(const Tensor2& preds, std::span<const std::size_t> labels,
                         std::span<const double> class_weights);
/// Mean row entropy.
double conditional_entropy_loss(const Tensor2& preds);
/// (1 / (n log(C-1))) sum_i m[y_i] (1 - p_a)^xi sum_{j != a} q_j log q_j,
/// q_j = p_j / (1 - p_a). Requires C >= 3. Rows with 1 - p_a <= 1e-12
/// contribute 0. The (1 - p_a)^xi factor is treated as a constant weight
/// when differentiating.
double complement_entropy_loss(const Tensor2& preds, std::span<const std::size_t> labels,
                               std::span<const double> class_weights, double xi);
/// Adversarial value:
///   mean(w_s log D_s) + mean(w_t log(1 - D_t)) + rho * mean(w_a log(1 - D_a)).
/// Scores and weights are batch x 1. The augmented batch may be empty only
/// when rho == 0 or floor(rho * |source|) == 0.
double balanced_adversarial_loss(const Tensor2& src_scores, const Tensor2& tgt_scores,
                                 const Tensor2& aug_scores, const Tensor2& src_weights,
                                 const Tensor2& tgt_weights, const Tensor2& aug_weights, double rho);
/// cls_w + alpha ent + beta wce + lambda adv, with wce dropped unless mode is kFull.
double total_objective(const LossBreakdown& parts, double alpha, double beta, double lambda,
                       ObjectiveMode mode);

// ---- Graph builders ---------------------------------------------------------

namespace graph_loss {

/// batch x 1 row entropies of a probability node.
NodeId row_entropy(Graph& g, NodeId probs);
/// batch x 1 entropy-aware weights 1 + exp(-H); carries no gradient.
NodeId sample_weight(Graph& g, NodeId probs);
NodeId weighted_cls(Graph& g, NodeId probs, std::span<const std::size_t> labels,
                    std::span<const double> class_weights);
NodeId conditional_entropy(Graph& g, NodeId probs);
/// The (1 - p_a)^xi factor is a sample weight without gradient; pass
/// `fixed_confidence` (batch x 1) to supply it instead of computing it.
NodeId complement_entropy(Graph& g, NodeId probs, std::span<const std::size_t> labels,
                          std::span<const double> class_weights, double xi,
                          const Tensor2* fixed_confidence = nullptr);

struct AdversarialSide {
  NodeId scores;   // D outputs, batch x 1
  NodeId weights;  // per-sample factors, batch x 1
};
/// The adversarial value; `aug` may be null (term omitted).
NodeId balanced_adversarial(Graph& g, const AdversarialSide& src, const AdversarialSide& tgt,
                            const AdversarialSide* aug, double rho);

}  // namespace graph_loss

/// m[y_i] per row, batch x 1.
Tensor2 gather_class_weights(std::span<const std::size_t> labels, std::span<const double> class_weights);

}  // namespace pda
