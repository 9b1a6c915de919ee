#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tbasis/basis.hpp"
#include "tbasis/layer_plan.hpp"
#include "tbasis/metrics.hpp"

#include <nlohmann/json_fwd.hpp>

namespace tbasis {

struct NetworkLayer {
  LayerSpec spec;
  bool compress = true;  // false keeps the layer dense (first-layer exception)
  std::uint64_t buffer_params = 0;
};

/// Global hyperparameters plus the ordered layer list. The shared basis has
/// mode size N = n^2, so the base fixes the basis shape for every layer.
///
/// JSON schema:
///   { "n": 3, "basis_size": 8, "rank": 4, "seed": 42,
///     "basis_mode": "learned" | "prng",
///     "layers": [ { "name": "conv1", "kind": "conv" | "linear",
///                   "c_out": 16, "c_in": 3, "kernel": 3, "gain": 2.0,
///                   "compress": true, "buffers": 0 }, ... ] }
/// `kernel` defaults to 1, `gain` to 2.0, `compress` to true, `buffers` to 0.
struct NetworkDescription {
  std::size_t base = 2;        // n
  std::size_t basis_size = 1;  // B
  std::size_t rank = 1;        // R
  std::uint64_t seed = 0;
  BasisMode basis_mode = BasisMode::learned;
  std::vector<NetworkLayer> layers;

  std::size_t mode_size() const { return base * base; }
};

void validate_network(const NetworkDescription& desc);

NetworkDescription network_from_json(const nlohmann::json& j);
nlohmann::json network_to_json(const NetworkDescription& desc);
NetworkDescription load_network(const std::filesystem::path& path);

// Plans every layer (validating bases and bounds along the way).
std::vector<PlannedLayer> plan_network(const NetworkDescription& desc);

}  // namespace tbasis
