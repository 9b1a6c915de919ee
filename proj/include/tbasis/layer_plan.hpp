#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tbasis/dense_tensor.hpp"

namespace tbasis {

enum class LayerKind { conv, linear };

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::conv;
  std::size_t c_out = 1;
  std::size_t c_in = 1;
  std::size_t kernel = 1;  // 1 for linear layers
  double gain = 2.0;       // init gain: 2 ahead of rectifiers, 1 for linear outputs
};

/// Tensorization recipe for one layer with base n:
///   - channel dims are padded to n^d with d = max(ceil(log_n C_out),
///     ceil(log_n C_in)), floored at 1;
///   - conv layers pad the spatial dims to n x n, so the envelope is
///     n^d x n^d x n x n and the merged spatial mode has size n^2 = N;
///   - linear layers have envelope n^d x n^d and no spatial mode.
/// Tensorized form: core_count modes of size n^2, channel pairs merged as
/// (i_k-1)*n + j_k (i major) and the spatial pair as (p-1)*n + q (p major).
struct LayerPlan {
  LayerSpec spec;
  std::size_t base = 2;        // n
  std::size_t depth = 1;       // d, channel factors per side
  std::size_t core_count = 1;  // d+1 for conv (spatial mode), d for linear
  std::size_t mode_size = 4;   // N = n^2
  Shape natural_shape;         // {C_out, C_in, K, K} or {C_out, C_in}
  Shape envelope_shape;        // {n^d, n^d, n, n} or {n^d, n^d}
  Shape tensorized_shape;      // core_count modes of N

  bool has_spatial_core() const { return spec.kind == LayerKind::conv; }
  std::size_t padded_channels() const { return envelope_shape[0]; }
};

// Derives the plan. Requires base >= 2, and base >= K for conv layers
// (smaller bases would need kernel-dimension grouping, which is rejected
// with UnsupportedBase).
LayerPlan plan_layer(const LayerSpec& spec, std::size_t base);

// Big-endian base-n digit codec for channel indices (0-based):
//   i = sum_k digits[k] * n^(d-1-k).
std::size_t mixed_radix_encode(std::size_t base, std::span<const std::size_t> digits);
std::vector<std::size_t> mixed_radix_decode(std::size_t base, std::size_t depth, std::size_t value);

// Envelope -> tensorized relabeling (reshape, digit interleave, pair merge)
// and its exact inverse. Both are bijections on entries.
DenseTensor tensorize(const DenseTensor& envelope, const LayerPlan& plan);
DenseTensor untensorize(const DenseTensor& tensorized, const LayerPlan& plan);

// Natural <-> envelope; pad zero-fills outside the valid region, crop
// extracts it. crop(pad(w)) == w bitwise.
DenseTensor pad_to_envelope(const DenseTensor& natural, const LayerPlan& plan);
DenseTensor crop_from_envelope(const DenseTensor& envelope, const LayerPlan& plan);

// Smallest d with base^d >= value (0 for value == 1).
std::size_t ceil_log(std::size_t base, std::size_t value);
std::size_t ipow(std::size_t base, std::size_t exp);

}  // namespace tbasis
