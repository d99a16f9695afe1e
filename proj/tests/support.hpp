#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include "pda/tensor.hpp"

namespace pda::test {

inline Tensor2 random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                             double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor2 t(rows, cols);
  for (double& v : t.flat()) v = u(rng);
  return t;
}

/// Rows drawn uniformly from the probability simplex.
inline Tensor2 random_simplex(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Tensor2 t(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (double& v : t.row(r)) s += (v = e(rng));
    for (double& v : t.row(r)) v /= s;
  }
  return t;
}

/// Central differences of a scalar function of one tensor.
inline Tensor2 central_difference(const std::function<double(const Tensor2&)>& f, const Tensor2& x,
                                  double h = 1e-5) {
  Tensor2 g(x.rows(), x.cols());
  Tensor2 probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Largest elementwise |a - b| / max(|a| + |b|, floor).
inline double max_rel_diff(const Tensor2& a, const Tensor2& b, double floor = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]) / std::max(std::abs(a[i]) + std::abs(b[i]), floor);
    worst = std::max(worst, d);
  }
  return worst;
}

/// |a - b|_2 / max(|a|_2 + |b|_2, 1e-7).
inline double norm_rel_error(const Tensor2& a, const Tensor2& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nb), 1e-7);
}

}  // namespace pda::test
