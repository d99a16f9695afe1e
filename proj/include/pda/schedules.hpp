#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pda/tensor.hpp"

namespace pda {

/// Class-level weights over the C source classes, normalized so the
/// largest entry is exactly 1.
struct ClassWeights {
  std::vector<double> weights;
  std::uint64_t updated_at = 0;

  /// All-ones vector: uniform 1/C after max-normalization.
  static ClassWeights uniform(std::size_t classes);
  friend bool operator==(const ClassWeights&, const ClassWeights&) = default;
};

/// m_c = sum_j p_jc / max_c' sum_j p_jc over the full target prediction set.
ClassWeights estimate_class_weights(const Tensor2& target_preds, std::uint64_t iteration = 0);

/// mean(m over `shared`) / mean(m over the remaining classes). Infinite when
/// the remaining classes all have weight 0.
double shared_weight_ratio(const std::vector<double>& m, const std::vector<std::size_t>& shared);

struct ScheduleConstants {
  double lr0 = 0.01;        // eta_0
  double lr_alpha = 10.0;   // alpha-hat
  double lr_beta = 0.75;    // beta-hat
  double lambda_gamma = 10.0;
};

/// eta_p = lr0 * (1 + lr_alpha * p)^(-lr_beta), p in [0, 1].
double lr_schedule(double p, const ScheduleConstants& k = {});
/// lambda_p = 2 / (1 + exp(-gamma p)) - 1, p in [0, 1].
double lambda_schedule(double p, double gamma = 10.0);

enum class RhoRule {
  kStaircase,  // rho0 * (1 - iteration / N), refreshed at interval boundaries
  kLiteral,    // rho0 * (1 - N_u / N) after the first boundary
};

/// Augmentation ratio in effect after `iteration` steps of N. For
/// kStaircase the value only changes at multiples of `interval`.
double rho_schedule(std::uint64_t iteration, std::uint64_t total, double rho0,
                    std::uint64_t interval = 1, RhoRule rule = RhoRule::kStaircase);

/// floor(rho * batch).
std::size_t augmentation_count(double rho, std::size_t batch);

}  // namespace pda
