#include "tbasis/network.hpp"

#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

namespace tbasis {

void validate_network(const NetworkDescription& desc) {
  if (desc.base < 2) throw UnsupportedBase("base n must be at least 2");
  if (desc.basis_size == 0) throw BadConfig("basis size must be positive");
  if (desc.rank == 0) throw BadConfig("rank must be positive");
  const std::size_t dim = desc.mode_size() * desc.rank * desc.rank;
  if (desc.basis_size > dim) {
    throw BadConfig("basis size " + std::to_string(desc.basis_size) +
                    " exceeds N*R^2 = " + std::to_string(dim));
  }
  if (desc.layers.empty()) throw BadConfig("network has no layers");
  std::set<std::string> names;
  for (const auto& layer : desc.layers) {
    if (layer.spec.name.empty()) throw BadConfig("layer names must be non-empty");
    if (!names.insert(layer.spec.name).second) {
      throw BadConfig("duplicate layer name: " + layer.spec.name);
    }
    if (layer.compress) plan_layer(layer.spec, desc.base);  // throws on bad configs
  }
}

NetworkDescription network_from_json(const nlohmann::json& j) {
  NetworkDescription desc;
  try {
    desc.base = j.at("n").get<std::size_t>();
    desc.basis_size = j.at("basis_size").get<std::size_t>();
    desc.rank = j.at("rank").get<std::size_t>();
    desc.seed = j.value("seed", std::uint64_t{0});
    const std::string mode = j.value("basis_mode", std::string("learned"));
    if (mode == "learned") {
      desc.basis_mode = BasisMode::learned;
    } else if (mode == "prng") {
      desc.basis_mode = BasisMode::prng;
    } else {
      throw BadConfig("basis_mode must be \"learned\" or \"prng\"");
    }
    for (const auto& jl : j.at("layers")) {
      NetworkLayer layer;
      layer.spec.name = jl.at("name").get<std::string>();
      const std::string kind = jl.at("kind").get<std::string>();
      if (kind == "conv") {
        layer.spec.kind = LayerKind::conv;
      } else if (kind == "linear") {
        layer.spec.kind = LayerKind::linear;
      } else {
        throw BadConfig("layer kind must be \"conv\" or \"linear\"");
      }
      layer.spec.c_out = jl.at("c_out").get<std::size_t>();
      layer.spec.c_in = jl.at("c_in").get<std::size_t>();
      layer.spec.kernel = jl.value("kernel", std::size_t{1});
      layer.spec.gain = jl.value("gain", 2.0);
      layer.compress = jl.value("compress", true);
      layer.buffer_params = jl.value("buffers", std::uint64_t{0});
      desc.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw BadConfig(std::string("bad network description: ") + e.what());
  }
  validate_network(desc);
  return desc;
}

nlohmann::json network_to_json(const NetworkDescription& desc) {
  nlohmann::json j;
  j["n"] = desc.base;
  j["basis_size"] = desc.basis_size;
  j["rank"] = desc.rank;
  j["seed"] = desc.seed;
  j["basis_mode"] = desc.basis_mode == BasisMode::learned ? "learned" : "prng";
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : desc.layers) {
    nlohmann::json jl;
    jl["name"] = layer.spec.name;
    jl["kind"] = layer.spec.kind == LayerKind::conv ? "conv" : "linear";
    jl["c_out"] = layer.spec.c_out;
    jl["c_in"] = layer.spec.c_in;
    jl["kernel"] = layer.spec.kernel;
    jl["gain"] = layer.spec.gain;
    jl["compress"] = layer.compress;
    jl["buffers"] = layer.buffer_params;
    j["layers"].push_back(std::move(jl));
  }
  return j;
}

NetworkDescription load_network(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw BadConfig("invalid JSON in " + path.string() + ": " + e.what());
  }
  return network_from_json(j);
}

std::vector<PlannedLayer> plan_network(const NetworkDescription& desc) {
  validate_network(desc);
  std::vector<PlannedLayer> planned;
  planned.reserve(desc.layers.size());
  for (const auto& layer : desc.layers) {
    PlannedLayer pl;
    pl.compress = layer.compress;
    pl.buffer_params = layer.buffer_params;
    try {
      pl.plan = plan_layer(layer.spec, desc.base);
    } catch (const UnsupportedBase&) {
      if (layer.compress) throw;
      // Dense-kept layer that the base cannot tensorize: record only the
      // natural shape so the accounting still sees it.
      pl.plan.spec = layer.spec;
      pl.plan.base = desc.base;
      pl.plan.depth = 0;
      pl.plan.core_count = 0;
      pl.plan.mode_size = desc.mode_size();
      pl.plan.natural_shape =
          layer.spec.kind == LayerKind::conv
              ? Shape{layer.spec.c_out, layer.spec.c_in, layer.spec.kernel, layer.spec.kernel}
              : Shape{layer.spec.c_out, layer.spec.c_in};
    }
    planned.push_back(std::move(pl));
  }
  return planned;
}

}  // namespace tbasis
