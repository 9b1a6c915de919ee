#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tbasis/dense_tensor.hpp"
#include "tbasis/layer_plan.hpp"
#include "tbasis/tensor_ring.hpp"

namespace tbasis {

enum class BasisMode { learned, prng };

/// A shared basis of B 3-mode tensors of identical shape R x N x R. Every
/// layer's ring cores are linear combinations of these tensors. In prng mode
/// the tensors are a pure function of (B, R, N, seed) and are never updated
/// by fitting.
struct TBasis {
  std::vector<DenseTensor> tensors;
  std::size_t basis_size = 0;  // B
  std::size_t rank = 0;        // R
  std::size_t mode_size = 0;   // N
  BasisMode mode = BasisMode::learned;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-layer parameters: a core_count x B coefficient matrix and
/// core_count x R rank-adapter pre-activations. Adapters are exp(theta)
/// elementwise, so they stay strictly positive for any theta.
struct LayerParams {
  LayerPlan plan;
  DenseTensor alpha;  // {core_count, B}
  DenseTensor theta;  // {core_count, R}
};

/// A complete parameterization: the shared basis plus one LayerParams per
/// represented layer.
struct Model {
  TBasis basis;
  std::vector<LayerParams> layers;
};

/// Initialization variances: basis entries get 1/(B*R), coefficient entries
/// get sigma_layer^(2/d) with d the layer's core count, so the synthesized
/// entries come out at sigma_layer^2 (the He fan-in target gain/fan_in).
struct InitSpec {
  double sigma_basis_sq = 0.0;
  double sigma_layer_sq = 0.0;
  double sigma_alpha_sq = 0.0;
};

InitSpec init_spec_for(const LayerPlan& plan, std::size_t basis_size, std::size_t rank);

// Entries i.i.d. Normal(0, 1/(B*R)) from the seeded counter generator;
// bit-reproducible for a fixed (B, R, N, seed). Requires 1 <= B <= N*R^2.
TBasis init_tbasis(std::size_t basis_size, std::size_t rank, std::size_t mode_size,
                   std::uint64_t seed, BasisMode mode);

// C = sum_beta coeff[beta] * basis_beta.
DenseTensor synth_core(const TBasis& basis, std::span<const double> coeff_row);

// Ring cores from the coefficient rows, adapters from exp(theta).
TRCores synth_layer(const TBasis& basis, const LayerParams& params);

// Synthesized weight in natural shape: assemble, untensorize, crop.
DenseTensor synth_natural_weight(const TBasis& basis, const LayerParams& params,
                                 OpCounter* counter = nullptr);

// Draws alpha at sigma_alpha^2, sets theta to zero (identity adapters), then
// rescales alpha so that the empirical variance of the cropped synthesized
// weight matches sigma_layer^2.
LayerParams init_layer_params(const LayerPlan& plan, const TBasis& basis,
                              std::uint64_t seed);

double empirical_variance(const DenseTensor& t);

}  // namespace tbasis
