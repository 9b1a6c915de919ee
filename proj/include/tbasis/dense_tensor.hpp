#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tbasis/errors.hpp"

namespace tbasis {

using Shape = std::vector<std::size_t>;

//! Tally of multiply-add operations executed by instrumented kernels.
//! A scalar multiply that feeds an accumulator counts as one; a diagonal
//! scaling counts as one per scaled entry; pure additions (ring traces)
//! count as zero.
struct OpCounter {
  std::uint64_t multiply_adds = 0;
};

/// Dense N-dimensional array of doubles, row-major (last index fastest).
/// The shape is fixed at construction; all operations return new values.
/// Mode indices are 0-based everywhere in the code (printed formulas in
/// the docs use the conventional 1-based form).
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t order() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  double operator[](std::size_t flat) const { return data_[flat]; }
  double& operator[](std::size_t flat) { return data_[flat]; }

  double at(std::span<const std::size_t> index) const;
  double& at(std::span<const std::size_t> index);

  template <class... I>
  double operator()(I... is) const {
    const std::size_t idx[] = {static_cast<std::size_t>(is)...};
    return at(idx);
  }
  template <class... I>
  double& operator()(I... is) {
    const std::size_t idx[] = {static_cast<std::size_t>(is)...};
    return at(idx);
  }

  // Row-major flat offset of a (bounds-checked) multi-index.
  std::size_t flat_index(std::span<const std::size_t> index) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t shape_volume(std::span<const std::size_t> shape);

// Row-major strides (stride of the last mode is 1).
std::vector<std::size_t> row_major_strides(std::span<const std::size_t> shape);

// Advances `index` to the next row-major multi-index; returns false once the
// range is exhausted. An all-zero index starts the sweep.
bool next_index(std::span<const std::size_t> shape, std::span<std::size_t> index);

// Same flat data under a new shape; products must agree.
DenseTensor reshape(const DenseTensor& t, Shape new_shape);

// out.shape[k] == t.shape[perm[k]], out(j_0..j_{d-1}) == t at the permuted
// multi-index. `perm` must be a bijection on {0..d-1}.
DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm);

using AxisPairs = std::vector<std::pair<std::size_t, std::size_t>>;

// Pairwise tensor contraction. Each axis pair (mode-of-a, mode-of-b) is
// summed over; paired modes must have equal sizes and pairs must be disjoint
// per tensor. Output modes are a's free modes followed by b's free modes, in
// their original order. An empty `axes` yields the outer product.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     const AxisPairs& axes, OpCounter* counter = nullptr);

double frobenius(const DenseTensor& t);

// ||a - b||_F / ||b||_F, falling back to the absolute error when ||b|| == 0.
double relative_error(const DenseTensor& a, const DenseTensor& b);

}  // namespace tbasis
