#pragma once

#include <cstdint>

#include "tbasis/basis.hpp"
#include "tbasis/dense_tensor.hpp"

namespace tbasis {

enum class ConvPath { reference, decompress, direct };

const char* conv_path_name(ConvPath path);

//! Exact multiply-add tally for one convolution evaluation.
struct OpCount {
  std::uint64_t multiply_adds = 0;
  ConvPath path = ConvPath::reference;
};

/// Shape summary a path cost depends on. Counting starts from synthesized
/// ring cores: basis-to-core synthesis is shared by every path and is not
/// part of the tally.
struct ConvDims {
  std::size_t width = 0;    // input spatial W
  std::size_t height = 0;   // input spatial H
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t kernel = 1;   // K
  std::size_t base = 2;     // n
  std::size_t depth = 1;    // d
  std::size_t rank = 1;     // R
  std::size_t core_count = 1;
  bool spatial_core = false;
};

ConvDims conv_dims(const LayerPlan& plan, std::size_t width, std::size_t height,
                   std::size_t rank);

// Analytic multiply-add predictor, derived from the implemented loop bounds;
// equals the instrumented tally exactly for every path and shape.
OpCount flops(ConvPath path, const ConvDims& dims);

// Valid convolution, stride 1, no input padding: x is W x H x C_in, w is
// C_out x C_in x K x K, output (W-K+1) x (H-K+1) x C_out.
DenseTensor conv2d_reference(const DenseTensor& x, const DenseTensor& w,
                             OpCounter* counter = nullptr);

// Cropped natural weight from the parameterization (fold adapters, assemble
// pairwise, untensorize, crop). The tally covers everything after synthesis.
DenseTensor decompress_weight(const TBasis& basis, const LayerParams& params,
                              OpCounter* counter = nullptr);

// Assemble the weight, then convolve regularly.
DenseTensor conv2d_decompress(const DenseTensor& x, const TBasis& basis,
                              const LayerParams& params, OpCounter* counter = nullptr);

// Map the input through the ring cores one at a time without materializing
// the weight: reshape x to W x H x n x .. x n, contract core k summing over
// (j_k, r_k), finish with the spatial core over the valid K x K window, and
// close the ring trace. Agrees with conv2d_decompress to 1e-9 relative.
DenseTensor conv2d_direct(const DenseTensor& x, const TBasis& basis,
                          const LayerParams& params, OpCounter* counter = nullptr);

}  // namespace tbasis
