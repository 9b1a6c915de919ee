#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tbasis/basis.hpp"
#include "tbasis/fit.hpp"
#include "tbasis/network.hpp"

namespace tbasis {

/// A parameterized network as stored on disk: the description, the shared
/// basis, and per-layer parameters for every compressed layer (dense-kept
/// layers carry no parameters here).
struct StoredModel {
  NetworkDescription desc;
  TBasis basis;
  std::vector<std::optional<LayerParams>> params;  // parallel to desc.layers

  std::size_t layer_index(const std::string& name) const;  // throws BadConfig
};

// Fresh model: basis from derive_seed(seed, "basis"), each layer's alpha from
// derive_seed(seed, "layer/<name>"), with the variance-correction pass.
StoredModel init_model(const NetworkDescription& desc, std::uint64_t seed);

// TBM1 binary layout (all integers little-endian):
//   magic "TBM1"; u32 generator version; u8 mode (0 learned, 1 prng);
//   u64 seed; u32 B; u32 R; u32 N; u32 base n; u32 layer count;
//   [learned mode only] B DTF1 blocks with the basis tensors;
//   per layer: u32 name length; name bytes; u8 kind (0 conv, 1 linear);
//     u8 compress; u64 c_out; u64 c_in; u64 kernel; f64 gain; u64 buffers;
//     [compressed only] DTF1 block alpha; DTF1 block theta.
// prng-mode bases are regenerated from (B, R, N, seed) on load; the
// generator version pins the algorithm.
std::string serialize_model(const StoredModel& model);
StoredModel deserialize_model(const std::string& bytes);

void save_model(const std::filesystem::path& path, const StoredModel& model);
StoredModel load_model(const std::filesystem::path& path);

// The fitting view: the basis plus the params of the compressed layers, in
// order. `indices` receives the desc positions of those layers.
Model fit_view(const StoredModel& model, std::vector<std::size_t>* indices = nullptr);

// Writes fitted params back into the stored model.
void apply_fit(StoredModel& model, const Model& fitted);

}  // namespace tbasis
