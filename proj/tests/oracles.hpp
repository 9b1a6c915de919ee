#pragma once

// Test-side brute-force evaluators, kept independent of the library's
// permute/matmul and assembly code paths.

#include <cstdint>
#include <vector>

#include "tbasis/dense_tensor.hpp"
#include "tbasis/rng.hpp"
#include "tbasis/tensor_ring.hpp"

namespace oracles {

using tbasis::AxisPairs;
using tbasis::DenseTensor;
using tbasis::Shape;

inline DenseTensor random_tensor(const Shape& shape, std::uint64_t seed,
                                 double scale = 1.0) {
  DenseTensor t(shape);
  tbasis::rng::CounterRng gen(seed);
  for (double& v : t.data()) v = scale * gen.next_normal();
  return t;
}

// Nested-loop contraction: iterate output and summed multi-indices directly.
inline DenseTensor naive_contract(const DenseTensor& a, const DenseTensor& b,
                                  const AxisPairs& axes) {
  std::vector<bool> used_a(a.order(), false), used_b(b.order(), false);
  Shape sum_shape;
  for (const auto& [ma, mb] : axes) {
    used_a[ma] = true;
    used_b[mb] = true;
    sum_shape.push_back(a.shape()[ma]);
  }
  std::vector<std::size_t> free_a, free_b;
  Shape out_shape;
  for (std::size_t k = 0; k < a.order(); ++k) {
    if (!used_a[k]) {
      free_a.push_back(k);
      out_shape.push_back(a.shape()[k]);
    }
  }
  for (std::size_t k = 0; k < b.order(); ++k) {
    if (!used_b[k]) {
      free_b.push_back(k);
      out_shape.push_back(b.shape()[k]);
    }
  }

  DenseTensor out(out_shape);
  std::vector<std::size_t> oidx(out_shape.size(), 0);
  std::vector<std::size_t> ia(a.order(), 0), ib(b.order(), 0);
  std::size_t flat = 0;
  do {
    for (std::size_t k = 0; k < free_a.size(); ++k) ia[free_a[k]] = oidx[k];
    for (std::size_t k = 0; k < free_b.size(); ++k) {
      ib[free_b[k]] = oidx[free_a.size() + k];
    }
    double acc = 0.0;
    std::vector<std::size_t> sidx(sum_shape.size(), 0);
    if (sum_shape.empty()) {
      acc = a.at(ia) * b.at(ib);
    } else {
      do {
        for (std::size_t k = 0; k < axes.size(); ++k) {
          ia[axes[k].first] = sidx[k];
          ib[axes[k].second] = sidx[k];
        }
        acc += a.at(ia) * b.at(ib);
      } while (tbasis::next_index(sum_shape, sidx));
    }
    out[flat++] = acc;
  } while (!out_shape.empty() && tbasis::next_index(out_shape, oidx));
  return out;
}

// Index-loop permutation oracle.
inline DenseTensor naive_permute(const DenseTensor& t,
                                 const std::vector<std::size_t>& perm) {
  Shape out_shape(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) out_shape[k] = t.shape()[perm[k]];
  DenseTensor out(out_shape);
  std::vector<std::size_t> oidx(perm.size(), 0), iidx(perm.size(), 0);
  std::size_t flat = 0;
  do {
    for (std::size_t k = 0; k < perm.size(); ++k) iidx[perm[k]] = oidx[k];
    out[flat++] = t.at(iidx);
  } while (tbasis::next_index(out_shape, oidx));
  return out;
}

// Full reconstruction through tr_entry loops.
inline DenseTensor entries_oracle(const tbasis::TRCores& tr) {
  const Shape shape = tr.mode_sizes();
  DenseTensor out(shape);
  std::vector<std::size_t> idx(shape.size(), 0);
  std::size_t flat = 0;
  do {
    out[flat++] = tbasis::tr_entry(tr, idx);
  } while (tbasis::next_index(shape, idx));
  return out;
}

// Plain seven-loop valid convolution.
inline DenseTensor naive_conv(const DenseTensor& x, const DenseTensor& w) {
  const std::size_t iw = x.shape()[0], ih = x.shape()[1];
  const std::size_t co = w.shape()[0], ci = w.shape()[1], k = w.shape()[2];
  DenseTensor y(Shape{iw - k + 1, ih - k + 1, co});
  for (std::size_t a = 0; a + k <= iw; ++a) {
    for (std::size_t b = 0; b + k <= ih; ++b) {
      for (std::size_t i = 0; i < co; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < ci; ++j) {
          for (std::size_t p = 0; p < k; ++p) {
            for (std::size_t q = 0; q < k; ++q) {
              acc += w(i, j, p, q) * x(a + p, b + q, j);
            }
          }
        }
        y(a, b, i) = acc;
      }
    }
  }
  return y;
}

inline tbasis::TRCores random_ring(const Shape& mode_sizes, std::size_t rank,
                                   std::uint64_t seed, bool with_adapters) {
  tbasis::TRCores tr;
  tbasis::rng::CounterRng gen(seed);
  for (std::size_t nk : mode_sizes) {
    DenseTensor core(Shape{rank, nk, rank});
    for (double& v : core.data()) v = gen.next_normal();
    tr.cores.push_back(std::move(core));
  }
  if (with_adapters) {
    for (std::size_t k = 0; k < mode_sizes.size(); ++k) {
      std::vector<double> rho(rank);
      for (double& v : rho) v = std::exp(0.5 * gen.next_normal());
      tr.adapters.push_back(std::move(rho));
    }
  }
  return tr;
}

}  // namespace oracles
