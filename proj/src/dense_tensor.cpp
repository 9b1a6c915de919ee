#include "tbasis/dense_tensor.hpp"

#include <cmath>
#include <string>

namespace tbasis {

namespace {

void check_shape(const Shape& shape) {
  for (std::size_t s : shape) {
    if (s == 0) throw BadConfig("mode sizes must be positive");
  }
}

}  // namespace

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_volume(shape_), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (shape_volume(shape_) != data_.size()) {
    throw SizeMismatch("data length " + std::to_string(data_.size()) +
                       " does not match shape volume " +
                       std::to_string(shape_volume(shape_)));
  }
}

std::size_t DenseTensor::flat_index(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw IndexOutOfRange("index has " + std::to_string(index.size()) +
                          " entries for an order-" +
                          std::to_string(shape_.size()) + " tensor");
  }
  std::size_t flat = 0;
  for (std::size_t k = 0; k < shape_.size(); ++k) {
    if (index[k] >= shape_[k]) {
      throw IndexOutOfRange("index " + std::to_string(index[k]) +
                            " out of range for mode " + std::to_string(k) +
                            " of size " + std::to_string(shape_[k]));
    }
    flat = flat * shape_[k] + index[k];
  }
  return flat;
}

double DenseTensor::at(std::span<const std::size_t> index) const {
  return data_[flat_index(index)];
}

double& DenseTensor::at(std::span<const std::size_t> index) {
  return data_[flat_index(index)];
}

std::size_t shape_volume(std::span<const std::size_t> shape) {
  std::size_t v = 1;
  for (std::size_t s : shape) v *= s;
  return v;
}

std::vector<std::size_t> row_major_strides(std::span<const std::size_t> shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t k = shape.size(); k-- > 1;) {
    strides[k - 1] = strides[k] * shape[k];
  }
  return strides;
}

bool next_index(std::span<const std::size_t> shape, std::span<std::size_t> index) {
  for (std::size_t k = shape.size(); k-- > 0;) {
    if (++index[k] < shape[k]) return true;
    index[k] = 0;
  }
  return false;
}

DenseTensor reshape(const DenseTensor& t, Shape new_shape) {
  check_shape(new_shape);
  if (shape_volume(new_shape) != t.size()) {
    throw SizeMismatch("reshape volume " +
                       std::to_string(shape_volume(new_shape)) +
                       " does not match tensor size " +
                       std::to_string(t.size()));
  }
  return DenseTensor(std::move(new_shape), t.data());
}

DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm) {
  const std::size_t d = t.order();
  if (perm.size() != d) throw BadPermutation("permutation length mismatch");
  std::vector<bool> seen(d, false);
  for (std::size_t p : perm) {
    if (p >= d || seen[p]) throw BadPermutation("not a bijection on modes");
    seen[p] = true;
  }

  Shape out_shape(d);
  for (std::size_t k = 0; k < d; ++k) out_shape[k] = t.shape()[perm[k]];

  const auto in_strides = row_major_strides(t.shape());
  // stride of output mode k in the input's flat layout
  std::vector<std::size_t> strides(d);
  for (std::size_t k = 0; k < d; ++k) strides[k] = in_strides[perm[k]];

  DenseTensor out(out_shape);
  if (out.size() == 0) return out;
  std::vector<std::size_t> idx(d, 0);
  std::size_t src = 0;
  const auto& in = t.data();
  auto& dst = out.data();
  for (std::size_t flat = 0;; ++flat) {
    dst[flat] = in[src];
    // odometer advance, keeping the source offset in sync
    std::size_t k = d;
    bool done = true;
    while (k-- > 0) {
      src += strides[k];
      if (++idx[k] < out_shape[k]) {
        done = false;
        break;
      }
      src -= strides[k] * out_shape[k];
      idx[k] = 0;
    }
    if (done) break;
  }
  return out;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     const AxisPairs& axes, OpCounter* counter) {
  const std::size_t da = a.order(), db = b.order();
  std::vector<bool> used_a(da, false), used_b(db, false);
  for (const auto& [ma, mb] : axes) {
    if (ma >= da || mb >= db) throw IndexOutOfRange("contraction mode out of range");
    if (used_a[ma] || used_b[mb]) throw BadConfig("contraction pairs must be disjoint per tensor");
    used_a[ma] = true;
    used_b[mb] = true;
    if (a.shape()[ma] != b.shape()[mb]) {
      throw SizeMismatch("paired modes have sizes " +
                         std::to_string(a.shape()[ma]) + " and " +
                         std::to_string(b.shape()[mb]));
    }
  }

  // Bring a to (free..., paired...) and b to (paired..., free...); the
  // contraction is then a plain (M x K) * (K x N) accumulation.
  std::vector<std::size_t> perm_a, perm_b;
  Shape out_shape;
  for (std::size_t k = 0; k < da; ++k) {
    if (!used_a[k]) {
      perm_a.push_back(k);
      out_shape.push_back(a.shape()[k]);
    }
  }
  for (const auto& [ma, mb] : axes) {
    perm_a.push_back(ma);
    perm_b.push_back(mb);
  }
  for (std::size_t k = 0; k < db; ++k) {
    if (!used_b[k]) {
      perm_b.push_back(k);
      out_shape.push_back(b.shape()[k]);
    }
  }

  const DenseTensor ap = permute(a, perm_a);
  const DenseTensor bp = permute(b, perm_b);

  std::size_t kvol = 1;
  for (const auto& [ma, mb] : axes) kvol *= a.shape()[ma];
  const std::size_t m = ap.size() / kvol;
  const std::size_t n = bp.size() / kvol;

  DenseTensor out(out_shape);
  const double* pa = ap.data().data();
  const double* pb = bp.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = pa + i * kvol;
    for (std::size_t k = 0; k < kvol; ++k) {
      const double av = row[k];
      const double* bro = pb + k * n;
      double* ors = po + i * n;
      for (std::size_t j = 0; j < n; ++j) ors[j] += av * bro[j];
    }
  }
  if (counter) counter->multiply_adds += static_cast<std::uint64_t>(m) * kvol * n;
  return out;
}

double frobenius(const DenseTensor& t) {
  double acc = 0.0;
  for (double v : t.data()) acc += v * v;
  return std::sqrt(acc);
}

double relative_error(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw ShapeMismatch("relative_error: shape mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    num += d * d;
    den += b[i] * b[i];
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

}  // namespace tbasis
