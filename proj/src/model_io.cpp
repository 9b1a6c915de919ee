#include "tbasis/model_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "tbasis/dtf.hpp"
#include "tbasis/rng.hpp"

namespace tbasis {

namespace {

void put_u8(std::ostream& os, std::uint8_t v) {
  os.put(static_cast<char>(v));
}

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  put_u64(os, u);
}

std::uint8_t get_u8(std::istream& is) {
  const int c = is.get();
  if (c == EOF) throw IoError("truncated model stream");
  return static_cast<std::uint8_t>(c);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated model stream");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated model stream");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& is) {
  const std::uint64_t u = get_u64(is);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

std::size_t StoredModel::layer_index(const std::string& name) const {
  for (std::size_t i = 0; i < desc.layers.size(); ++i) {
    if (desc.layers[i].spec.name == name) return i;
  }
  throw BadConfig("no layer named " + name);
}

StoredModel init_model(const NetworkDescription& desc, std::uint64_t seed) {
  validate_network(desc);
  StoredModel model;
  model.desc = desc;
  model.basis = init_tbasis(desc.basis_size, desc.rank, desc.mode_size(),
                            rng::derive_seed(seed, "basis"), desc.basis_mode);
  for (const auto& layer : desc.layers) {
    if (!layer.compress) {
      model.params.emplace_back(std::nullopt);
      continue;
    }
    const LayerPlan plan = plan_layer(layer.spec, desc.base);
    model.params.emplace_back(init_layer_params(
        plan, model.basis, rng::derive_seed(seed, "layer/" + layer.spec.name)));
  }
  return model;
}

std::string serialize_model(const StoredModel& model) {
  model.basis.validate();
  if (model.params.size() != model.desc.layers.size()) {
    throw SizeMismatch("one params slot per described layer expected");
  }
  std::ostringstream os(std::ios::binary);
  os.write("TBM1", 4);
  put_u32(os, rng::kGeneratorVersion);
  put_u8(os, model.desc.basis_mode == BasisMode::prng ? 1 : 0);
  put_u64(os, model.basis.seed);
  put_u32(os, static_cast<std::uint32_t>(model.basis.basis_size));
  put_u32(os, static_cast<std::uint32_t>(model.basis.rank));
  put_u32(os, static_cast<std::uint32_t>(model.basis.mode_size));
  put_u32(os, static_cast<std::uint32_t>(model.desc.base));
  put_u32(os, static_cast<std::uint32_t>(model.desc.layers.size()));
  if (model.desc.basis_mode == BasisMode::learned) {
    for (const auto& t : model.basis.tensors) write_dtf1(os, t);
  }
  for (std::size_t i = 0; i < model.desc.layers.size(); ++i) {
    const NetworkLayer& layer = model.desc.layers[i];
    put_u32(os, static_cast<std::uint32_t>(layer.spec.name.size()));
    os.write(layer.spec.name.data(),
             static_cast<std::streamsize>(layer.spec.name.size()));
    put_u8(os, layer.spec.kind == LayerKind::linear ? 1 : 0);
    put_u8(os, layer.compress ? 1 : 0);
    put_u64(os, layer.spec.c_out);
    put_u64(os, layer.spec.c_in);
    put_u64(os, layer.spec.kernel);
    put_f64(os, layer.spec.gain);
    put_u64(os, layer.buffer_params);
    if (layer.compress) {
      if (!model.params[i]) throw BadConfig("compressed layer lacks parameters");
      write_dtf1(os, model.params[i]->alpha);
      write_dtf1(os, model.params[i]->theta);
    }
  }
  return os.str();
}

StoredModel deserialize_model(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "TBM1", 4) != 0) {
    throw IoError("bad TBM1 magic");
  }
  const std::uint32_t gen_version = get_u32(is);
  if (gen_version != rng::kGeneratorVersion) {
    throw IoError("unsupported generator version " + std::to_string(gen_version));
  }
  StoredModel model;
  model.desc.basis_mode = get_u8(is) == 1 ? BasisMode::prng : BasisMode::learned;
  const std::uint64_t seed = get_u64(is);
  model.desc.basis_size = get_u32(is);
  model.desc.rank = get_u32(is);
  const std::size_t mode_size = get_u32(is);
  model.desc.base = get_u32(is);
  const std::uint32_t layer_count = get_u32(is);
  if (mode_size != model.desc.base * model.desc.base) {
    throw IoError("mode size does not match the base");
  }

  if (model.desc.basis_mode == BasisMode::learned) {
    model.basis.basis_size = model.desc.basis_size;
    model.basis.rank = model.desc.rank;
    model.basis.mode_size = mode_size;
    model.basis.mode = BasisMode::learned;
    model.basis.seed = seed;
    for (std::size_t b = 0; b < model.desc.basis_size; ++b) {
      model.basis.tensors.push_back(read_dtf1(is));
    }
    model.basis.validate();
  } else {
    model.basis = init_tbasis(model.desc.basis_size, model.desc.rank, mode_size,
                              seed, BasisMode::prng);
  }
  model.desc.seed = seed;

  for (std::uint32_t i = 0; i < layer_count; ++i) {
    NetworkLayer layer;
    const std::uint32_t name_len = get_u32(is);
    if (name_len > 4096) throw IoError("implausible layer name length");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw IoError("truncated model stream");
    layer.spec.name = std::move(name);
    layer.spec.kind = get_u8(is) == 1 ? LayerKind::linear : LayerKind::conv;
    layer.compress = get_u8(is) == 1;
    layer.spec.c_out = get_u64(is);
    layer.spec.c_in = get_u64(is);
    layer.spec.kernel = get_u64(is);
    layer.spec.gain = get_f64(is);
    layer.buffer_params = get_u64(is);
    if (layer.compress) {
      LayerParams params;
      params.plan = plan_layer(layer.spec, model.desc.base);
      params.alpha = read_dtf1(is);
      params.theta = read_dtf1(is);
      if (params.alpha.shape() != Shape{params.plan.core_count, model.desc.basis_size} ||
          params.theta.shape() != Shape{params.plan.core_count, model.desc.rank}) {
        throw IoError("layer parameter shapes do not match the plan");
      }
      model.params.emplace_back(std::move(params));
    } else {
      model.params.emplace_back(std::nullopt);
    }
    model.desc.layers.push_back(std::move(layer));
  }
  validate_network(model.desc);
  return model;
}

void save_model(const std::filesystem::path& path, const StoredModel& model) {
  atomic_write_file(path, serialize_model(model));
}

StoredModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream buf(std::ios::binary);
  buf << is.rdbuf();
  return deserialize_model(buf.str());
}

Model fit_view(const StoredModel& model, std::vector<std::size_t>* indices) {
  Model view;
  view.basis = model.basis;
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    if (!model.params[i]) continue;
    view.layers.push_back(*model.params[i]);
    if (indices) indices->push_back(i);
  }
  return view;
}

void apply_fit(StoredModel& model, const Model& fitted) {
  model.basis = fitted.basis;
  std::size_t next = 0;
  for (auto& slot : model.params) {
    if (!slot) continue;
    if (next >= fitted.layers.size()) throw SizeMismatch("fitted layer count mismatch");
    *slot = fitted.layers[next++];
  }
  if (next != fitted.layers.size()) throw SizeMismatch("fitted layer count mismatch");
}

}  // namespace tbasis
