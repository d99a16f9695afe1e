#include "pda/tensor.hpp"

#include <cmath>

namespace pda {

Tensor2 Tensor2::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(n * m);
  for (const auto& r : rows) {
    if (r.size() != m) throw std::invalid_argument("Tensor2::from_rows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor2(n, m, std::move(data));
}

double Tensor2::item() const {
  if (rows_ != 1 || cols_ != 1) throw std::logic_error("Tensor2::item on " + shape_string());
  return data_[0];
}

bool Tensor2::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor2::fill(double v) {
  for (double& x : data_) x = v;
}

Tensor2 Tensor2::gather_rows(std::span<const std::size_t> indices) const {
  Tensor2 out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw std::out_of_range("Tensor2::gather_rows: index out of range");
    auto src = row(indices[i]);
    auto dst = out.row(i);
    for (std::size_t c = 0; c < cols_; ++c) dst[c] = src[c];
  }
  return out;
}

}  // namespace pda
