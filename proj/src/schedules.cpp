#include "pda/schedules.hpp"

#include <cmath>
#include <stdexcept>

namespace pda {
namespace {

void check_progress(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("progress must lie in [0, 1]");
}

}  // namespace

ClassWeights ClassWeights::uniform(std::size_t classes) {
  return {std::vector<double>(classes, 1.0), 0};
}

ClassWeights estimate_class_weights(const Tensor2& target_preds, std::uint64_t iteration) {
  if (target_preds.rows() == 0 || target_preds.cols() == 0) {
    throw std::invalid_argument("estimate_class_weights: empty target set");
  }
  std::vector<double> mass(target_preds.cols(), 0.0);
  for (std::size_t r = 0; r < target_preds.rows(); ++r) {
    auto row = target_preds.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) mass[c] += row[c];
  }
  double peak = 0.0;
  for (double v : mass) peak = std::max(peak, v);
  if (!(peak > 0.0)) throw std::invalid_argument("estimate_class_weights: no predicted mass");
  for (double& v : mass) v /= peak;
  return {std::move(mass), iteration};
}

double lr_schedule(double p, const ScheduleConstants& k) {
  check_progress(p);
  return k.lr0 * std::pow(1.0 + k.lr_alpha * p, -k.lr_beta);
}

double lambda_schedule(double p, double gamma) {
  check_progress(p);
  return 2.0 / (1.0 + std::exp(-gamma * p)) - 1.0;
}

double rho_schedule(std::uint64_t iteration, std::uint64_t total, double rho0,
                    std::uint64_t interval, RhoRule rule) {
  if (total == 0) throw std::invalid_argument("rho_schedule: N must be positive");
  if (interval == 0) throw std::invalid_argument("rho_schedule: interval must be positive");
  if (iteration > total) throw std::invalid_argument("rho_schedule: iteration beyond N");
  const std::uint64_t boundary = iteration / interval * interval;
  if (rule == RhoRule::kLiteral) {
    if (boundary == 0) return rho0;
    return rho0 * (1.0 - static_cast<double>(interval) / static_cast<double>(total));
  }
  return rho0 * (1.0 - static_cast<double>(boundary) / static_cast<double>(total));
}

std::size_t augmentation_count(double rho, std::size_t batch) {
  if (rho < 0.0) throw std::invalid_argument("augmentation_count: negative rho");
  return static_cast<std::size_t>(std::floor(rho * static_cast<double>(batch)));
}

double shared_weight_ratio(const std::vector<double>& m, const std::vector<std::size_t>& shared) {
  std::vector<bool> is_shared(m.size(), false);
  for (std::size_t c : shared) {
    if (c >= m.size()) throw std::invalid_argument("shared class out of range");
    is_shared[c] = true;
  }
  double in = 0.0, out = 0.0;
  std::size_t n_in = 0, n_out = 0;
  for (std::size_t c = 0; c < m.size(); ++c) {
    (is_shared[c] ? in : out) += m[c];
    ++(is_shared[c] ? n_in : n_out);
  }
  if (n_in == 0 || n_out == 0) throw std::invalid_argument("ratio needs shared and source-only classes");
  return (in / static_cast<double>(n_in)) / (out / static_cast<double>(n_out));
}

}  // namespace pda
