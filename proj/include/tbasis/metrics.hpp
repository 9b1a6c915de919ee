#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tbasis/layer_plan.hpp"

namespace tbasis {

struct PlannedLayer {
  LayerPlan plan;
  bool compress = true;
  std::uint64_t buffer_params = 0;
};

struct LayerCounts {
  std::string name;
  bool compressed = true;
  std::size_t core_count = 0;
  std::uint64_t uncompressed = 0;  // natural weight entries
  std::uint64_t plain_tr = 0;      // core_count * N * R^2
  std::uint64_t coeffs = 0;        // core_count * B
  std::uint64_t adapters = 0;      // core_count * R
  std::uint64_t buffers = 0;
};

/// Exact storage accounting. The r-components compare the shared-basis
/// parameterization against per-layer plain Tensor Rings over the compressed
/// layers:
///   r_alpha = sum(coeffs) / plain_tr,  r_rho = sum(adapters) / plain_tr,
///   r_basis = B*N*R^2 / plain_tr,      r_total = r_alpha + r_rho + r_basis.
/// Compression ratios compare against the uncompressed network, counting
/// incompressible layers on both sides; the buffers variant adds declared
/// buffer counts to both sides as well.
struct CompressionStats {
  std::vector<LayerCounts> layers;
  std::uint64_t uncompressed_total = 0;
  std::uint64_t plain_tr_total = 0;
  std::uint64_t coeff_total = 0;
  std::uint64_t adapter_total = 0;
  std::uint64_t basis_params = 0;
  std::uint64_t tbasis_with_basis_total = 0;     // coeffs + adapters + basis
  std::uint64_t tbasis_without_basis_total = 0;  // coeffs + adapters
  std::uint64_t incompressible_total = 0;
  std::uint64_t buffer_total = 0;
  double r_alpha = 0.0;
  double r_rho = 0.0;
  double r_basis = 0.0;
  double r_total = 0.0;
  double compression_ratio = 0.0;
  double compression_ratio_without_basis = 0.0;
  double compression_ratio_with_buffers = 0.0;
};

CompressionStats stats(std::span<const PlannedLayer> layers, std::size_t basis_size,
                       std::size_t rank, std::size_t mode_size);

// Closed form for L layers of equal core count d:
//   B/(N R^2) + 1/(N R) + B/(d L).
double storage_ratio_closed_form(std::size_t layer_count, std::size_t core_count,
                                 std::size_t basis_size, std::size_t rank,
                                 std::size_t mode_size);

/// Coefficient-plus-adapter storage against the logarithmic bound
/// c * L * log_n(S), with S the largest layer's weight count and the
/// implementation-chosen constant c = 3 * (B + R).
struct RemarkBound {
  double actual = 0.0;
  double bound = 0.0;
  std::uint64_t largest_layer_weights = 0;
  double constant = 0.0;
};

RemarkBound remark_bound(std::span<const PlannedLayer> layers, std::size_t base,
                         std::size_t basis_size, std::size_t rank);

std::string stats_table(const CompressionStats& s);

}  // namespace tbasis
