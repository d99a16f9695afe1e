#include "pda/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pda::kernels {
namespace {

struct GemmShape {
  std::size_t m, n, k;
};

GemmShape check_gemm(Transpose ta, Transpose tb, const Tensor2& a, const Tensor2& b,
                     const Tensor2& c, bool accumulate) {
  const std::size_t m = ta == Transpose::No ? a.rows() : a.cols();
  const std::size_t ka = ta == Transpose::No ? a.cols() : a.rows();
  const std::size_t kb = tb == Transpose::No ? b.rows() : b.cols();
  const std::size_t n = tb == Transpose::No ? b.cols() : b.rows();
  if (ka != kb) {
    throw std::invalid_argument("gemm: inner dimensions differ (" + a.shape_string() + " vs " +
                                b.shape_string() + ")");
  }
  if (accumulate && (c.rows() != m || c.cols() != n)) {
    throw std::invalid_argument("gemm: accumulator shape " + c.shape_string());
  }
  return {m, n, ka};
}

// op(x) as a row-major rows x cols copy.
Tensor2 materialize(Transpose t, const Tensor2& x) {
  if (t == Transpose::No) return x;
  Tensor2 out(x.cols(), x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(c, r) = x(r, c);
  return out;
}

void softmax_row(std::span<const double> in, std::span<double> out) {
  double mx = in.empty() ? 0.0 : in[0];
  for (double v : in) mx = std::max(mx, v);
  double total = 0.0;
  for (std::size_t j = 0; j < in.size(); ++j) {
    out[j] = std::exp(in[j] - mx);
    total += out[j];
  }
  for (double& v : out) v /= total;
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

void gemm(Transpose ta, Transpose tb, const Tensor2& a, const Tensor2& b, Tensor2& c,
          bool accumulate) {
  const auto [m, n, k] = check_gemm(ta, tb, a, b, c, accumulate);
  if (!accumulate) c = Tensor2(m, n);
  // Pack op(a) row-major and op(b) transposed so both dot operands are contiguous.
  const Tensor2 lhs = materialize(ta, a);
  const Tensor2 rhs_t = materialize(tb == Transpose::No ? Transpose::Yes : Transpose::No, b);
  const double* pa = lhs.flat().data();
  const double* pb = rhs_t.flat().data();
  double* pc = c.flat().data();
  const auto rows = static_cast<long long>(m);
  const bool go_parallel = m > 1 && m * n * k >= kParallelGrain;
#pragma omp parallel for schedule(static) if (go_parallel)
  for (long long i = 0; i < rows; ++i) {
    const double* ai = pa + static_cast<std::size_t>(i) * k;
    double* ci = pc + static_cast<std::size_t>(i) * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = pb + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
}

void softmax_rows(const Tensor2& x, Tensor2& y) {
  if (!y.same_shape(x)) y = Tensor2(x.rows(), x.cols());
  const auto rows = static_cast<long long>(x.rows());
  const bool go_parallel = x.size() * 8 >= kParallelGrain;
#pragma omp parallel for schedule(static) if (go_parallel)
  for (long long r = 0; r < rows; ++r) {
    softmax_row(x.row(static_cast<std::size_t>(r)), y.row(static_cast<std::size_t>(r)));
  }
}

namespace serial {

void gemm(Transpose ta, Transpose tb, const Tensor2& a, const Tensor2& b, Tensor2& c,
          bool accumulate) {
  const auto [m, n, k] = check_gemm(ta, tb, a, b, c, accumulate);
  if (!accumulate) c = Tensor2(m, n);
  auto at = [&](std::size_t i, std::size_t p) { return ta == Transpose::No ? a(i, p) : a(p, i); };
  auto bt = [&](std::size_t p, std::size_t j) { return tb == Transpose::No ? b(p, j) : b(j, p); };
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += at(i, p) * bt(p, j);
      c(i, j) = accumulate ? c(i, j) + s : s;
    }
  }
}

void softmax_rows(const Tensor2& x, Tensor2& y) {
  if (!y.same_shape(x)) y = Tensor2(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) softmax_row(x.row(r), y.row(r));
}

}  // namespace serial
}  // namespace pda::kernels
