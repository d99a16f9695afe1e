#include "pda/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pda/networks.hpp"

namespace pda {
namespace {

constexpr double kNormTolerance = 1e-9;

void check_distribution(std::span<const double> h) {
  if (h.empty()) throw std::invalid_argument("probability vector is empty");
  double s = 0.0;
  for (double v : h) {
    if (!(v >= 0.0)) throw std::invalid_argument("probability vector has a negative or NaN entry");
    s += v;
  }
  if (std::abs(s - 1.0) > kNormTolerance) {
    throw std::invalid_argument("probability vector sums to " + std::to_string(s));
  }
}

void check_rows(const Tensor2& preds) {
  if (preds.rows() == 0) throw std::invalid_argument("empty prediction batch");
  for (std::size_t r = 0; r < preds.rows(); ++r) check_distribution(preds.row(r));
}

void check_labels(std::span<const std::size_t> labels, std::size_t rows, std::span<const double> m,
                  std::size_t classes) {
  if (labels.size() != rows) throw std::invalid_argument("label count differs from batch size");
  if (m.size() != classes) throw std::invalid_argument("class weight length differs from C");
  for (std::size_t y : labels) {
    if (y >= classes) {
      throw std::invalid_argument("label " + std::to_string(y) + " out of range for C=" +
                                  std::to_string(classes));
    }
  }
}

Tensor2 one_hot(std::span<const std::size_t> labels, std::size_t classes, double on, double off) {
  Tensor2 t(labels.size(), classes, off);
  for (std::size_t i = 0; i < labels.size(); ++i) t(i, labels[i]) = on;
  return t;
}

double eval_scalar(Graph& g) { return g.forward().item(); }

void check_scores(const Tensor2& s, const char* what) {
  if (s.cols() != 1 && !s.empty()) throw std::invalid_argument(std::string(what) + " must be batch x 1");
  for (double v : s.flat()) {
    if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument(std::string(what) + " outside (0,1)");
  }
}

}  // namespace

Tensor2 gather_class_weights(std::span<const std::size_t> labels, std::span<const double> class_weights) {
  Tensor2 t(labels.size(), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) t(i, 0) = class_weights[labels[i]];
  return t;
}

namespace graph_loss {

NodeId row_entropy(Graph& g, NodeId probs) {
  const NodeId logp = g.log(g.clamp(probs, kProbEps, 1.0));
  return g.scale(g.row_sum(g.mul(probs, logp)), -1.0);
}

NodeId sample_weight(Graph& g, NodeId probs) {
  const NodeId h = row_entropy(g, g.stop_gradient(probs));
  return g.scale(g.exp(g.scale(h, -1.0)), 1.0, 1.0);
}

NodeId weighted_cls(Graph& g, NodeId probs, std::span<const std::size_t> labels,
                    std::span<const double> class_weights) {
  for (std::size_t y : labels) {
    if (y >= class_weights.size()) throw std::invalid_argument("label out of range");
  }
  Tensor2 picks(labels.size(), class_weights.size());
  for (std::size_t i = 0; i < labels.size(); ++i) picks(i, labels[i]) = class_weights[labels[i]];
  const NodeId w = g.constant(std::move(picks), "class-weighted one-hot");
  const NodeId logp = g.log(g.clamp(probs, kProbEps, 1.0));
  return g.scale(g.mean(g.row_sum(g.mul(logp, w))), -1.0);
}

NodeId conditional_entropy(Graph& g, NodeId probs) { return g.mean(row_entropy(g, probs)); }

NodeId complement_entropy(Graph& g, NodeId probs, std::span<const std::size_t> labels,
                          std::span<const double> class_weights, double xi, const Tensor2* fixed_confidence) {
  const std::size_t classes = class_weights.size();
  if (classes < 3) throw std::invalid_argument("complement entropy needs C >= 3");
  if (xi < 0.0) throw std::invalid_argument("complement entropy needs xi >= 0");
  for (std::size_t y : labels) {
    if (y >= classes) throw std::invalid_argument("label out of range");
  }
  const NodeId truth = g.constant(one_hot(labels, classes, 1.0, 0.0), "one-hot");
  const NodeId others = g.constant(one_hot(labels, classes, 0.0, 1.0), "complement mask");
  const NodeId mass = g.constant(gather_class_weights(labels, class_weights), "m[y]");

  const NodeId p_true = g.row_sum(g.mul(probs, truth));
  const NodeId rest = g.scale(p_true, -1.0, 1.0);
  const NodeId valid = g.step(rest, kProbEps);
  const NodeId denom = g.clamp(rest, kProbEps, 1.0);
  const NodeId q = g.mul(probs, g.reciprocal(denom));
  const NodeId qlogq = g.mul(q, g.log(g.clamp(q, kProbEps, 1.0)));
  const NodeId inner = g.row_sum(g.mul(qlogq, others));
  // (1 - p_a)^xi weights samples by uncertainty; it carries no gradient.
  const NodeId confidence = fixed_confidence != nullptr ? g.constant(*fixed_confidence, "fixed (1-p_a)^xi")
                                                        : g.pow(g.stop_gradient(denom), xi);
  const NodeId per_sample = g.mul(g.mul(inner, confidence), g.mul(valid, mass));
  return g.scale(g.mean(per_sample), 1.0 / std::log(static_cast<double>(classes - 1)));
}

NodeId balanced_adversarial(Graph& g, const AdversarialSide& src, const AdversarialSide& tgt,
                            const AdversarialSide* aug, double rho) {
  const NodeId src_term = g.mean(g.mul(g.log(src.scores), src.weights));
  const NodeId tgt_term = g.mean(g.mul(g.log(g.scale(tgt.scores, -1.0, 1.0)), tgt.weights));
  NodeId total = g.add(src_term, tgt_term);
  if (aug != nullptr) {
    const NodeId aug_term = g.mean(g.mul(g.log(g.scale(aug->scores, -1.0, 1.0)), aug->weights));
    total = g.add(total, g.scale(aug_term, rho));
  }
  return total;
}

}  // namespace graph_loss

double entropy(std::span<const double> h) {
  check_distribution(h);
  Graph g;
  graph_loss::row_entropy(g, g.constant(Tensor2(1, h.size(), std::vector<double>(h.begin(), h.end()))));
  return eval_scalar(g);
}

double sample_weight(std::span<const double> h) {
  check_distribution(h);
  Graph g;
  graph_loss::sample_weight(g, g.constant(Tensor2(1, h.size(), std::vector<double>(h.begin(), h.end()))));
  return eval_scalar(g);
}

double weighted_cls_loss(const Tensor2& preds, std::span<const std::size_t> labels,
                         std::span<const double> class_weights) {
  check_rows(preds);
  check_labels(labels, preds.rows(), class_weights, preds.cols());
  Graph g;
  graph_loss::weighted_cls(g, g.constant(preds), labels, class_weights);
  return eval_scalar(g);
}

double conditional_entropy_loss(const Tensor2& preds) {
  check_rows(preds);
  Graph g;
  graph_loss::conditional_entropy(g, g.constant(preds));
  return eval_scalar(g);
}

double complement_entropy_loss(const Tensor2& preds, std::span<const std::size_t> labels,
                               std::span<const double> class_weights, double xi) {
  check_rows(preds);
  check_labels(labels, preds.rows(), class_weights, preds.cols());
  Graph g;
  graph_loss::complement_entropy(g, g.constant(preds), labels, class_weights, xi);
  return eval_scalar(g);
}

double balanced_adversarial_loss(const Tensor2& src_scores, const Tensor2& tgt_scores,
                                 const Tensor2& aug_scores, const Tensor2& src_weights,
                                 const Tensor2& tgt_weights, const Tensor2& aug_weights, double rho) {
  if (src_scores.rows() == 0) throw std::invalid_argument("empty source batch");
  if (tgt_scores.rows() == 0) throw std::invalid_argument("empty target batch");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
  check_scores(src_scores, "source scores");
  check_scores(tgt_scores, "target scores");
  check_scores(aug_scores, "augmented scores");
  if (!src_weights.same_shape(src_scores) || !tgt_weights.same_shape(tgt_scores) ||
      aug_weights.rows() != aug_scores.rows()) {
    throw std::invalid_argument("weights must match their score batches");
  }
  const bool aug_expected =
      rho > 0.0 && std::floor(rho * static_cast<double>(src_scores.rows())) > 0.0;
  if (aug_scores.rows() == 0 && aug_expected) {
    throw std::invalid_argument("empty augmentation batch with rho * B_s >= 1");
  }
  Graph g;
  const graph_loss::AdversarialSide src{g.constant(src_scores), g.constant(src_weights)};
  const graph_loss::AdversarialSide tgt{g.constant(tgt_scores), g.constant(tgt_weights)};
  if (aug_scores.rows() == 0) {
    graph_loss::balanced_adversarial(g, src, tgt, nullptr, rho);
  } else {
    const graph_loss::AdversarialSide aug{g.constant(aug_scores), g.constant(aug_weights)};
    graph_loss::balanced_adversarial(g, src, tgt, &aug, rho);
  }
  return eval_scalar(g);
}

double total_objective(const LossBreakdown& parts, double alpha, double beta, double lambda,
                       ObjectiveMode mode) {
  if (alpha < 0.0 || beta < 0.0 || lambda < 0.0) {
    throw std::invalid_argument("alpha, beta and lambda must be nonnegative");
  }
  double total = parts.cls_w + alpha * parts.ent;
  if (mode == ObjectiveMode::kFull) total += beta * parts.wce;
  return total + lambda * parts.adv;
}

}  // namespace pda
