#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tbasis/dense_tensor.hpp"

namespace tbasis {

/// A tensor in Tensor Ring form: a circular sequence of 3-mode cores of
/// shape R x N_k x R sharing a uniform rank R, with optional length-R
/// positive diagonal rank adapters. Adapter k sits on core k's left rank
/// index, i.e. between cores k-1 and k on the ring.
struct TRCores {
  std::vector<DenseTensor> cores;
  std::vector<std::vector<double>> adapters;  // empty, or one diagonal per core

  std::size_t order() const { return cores.size(); }
  std::size_t rank() const { return cores.empty() ? 0 : cores.front().shape().front(); }
  bool has_adapters() const { return !adapters.empty(); }

  // Sizes of the middle modes, i.e. the shape of the represented tensor.
  Shape mode_sizes() const;

  void validate() const;
};

// Entry of the represented tensor at `index`, evaluated by the definitional
// sum over all closed rank paths (r_1..r_d). Serves as the brute-force
// oracle for the assembly routines.
double tr_entry(const TRCores& tr, std::span<const std::size_t> index);

// Full reconstruction by sequential left-to-right contraction followed by a
// trace over the two remaining rank modes.
DenseTensor tr_reconstruct(const TRCores& tr);

// Full reconstruction by multilevel pairwise contraction: adapters are
// folded into their cores, blocks are paired greedily left-to-right (an odd
// leftover joins the next level unchanged), and the final two blocks are
// merged with the ring trace fused in.
DenseTensor tr_assemble_pairwise(const TRCores& tr, OpCounter* counter = nullptr);

// Total entries of the cores of a rank-R ring over `shape`: sum_k R*N_k*R.
std::uint64_t tr_param_count(std::span<const std::size_t> shape, std::size_t rank);

// Cores with adapters multiplied in along the left rank index; returned as
// 3-mode blocks {R, N_k, R}. Tallies one multiply per scaled entry.
std::vector<DenseTensor> fold_adapters(const TRCores& tr, OpCounter* counter = nullptr);

}  // namespace tbasis
