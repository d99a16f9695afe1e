#pragma once

#include "pda/tensor.hpp"

// Dense kernels used by the autodiff engine. The default entry points are
// OpenMP-parallel over output rows; `serial::` holds the plain reference
// loops they are tested against. Both accumulate every output element over
// the inner dimension in ascending order, so results are bit-identical
// regardless of thread count.

namespace pda::kernels {

enum class Transpose { No, Yes };

/// c = op(a) * op(b), or c += op(a) * op(b) when `accumulate` is set.
/// `c` is resized when not accumulating.
void gemm(Transpose ta, Transpose tb, const Tensor2& a, const Tensor2& b, Tensor2& c,
          bool accumulate = false);

/// Row-wise softmax with max subtraction.
void softmax_rows(const Tensor2& x, Tensor2& y);

/// Work (multiply-adds) below which the parallel kernels stay on one thread.
inline constexpr std::size_t kParallelGrain = std::size_t{1} << 15;

/// Number of threads the parallel kernels may use (1 without OpenMP).
int max_threads();
void set_threads(int n);

namespace serial {
void gemm(Transpose ta, Transpose tb, const Tensor2& a, const Tensor2& b, Tensor2& c,
          bool accumulate = false);
void softmax_rows(const Tensor2& x, Tensor2& y);
}  // namespace serial

}  // namespace pda::kernels
