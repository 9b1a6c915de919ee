#include "tbasis/cli.hpp"

#include <cmath>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tbasis/conv_ops.hpp"
#include "tbasis/dtf.hpp"
#include "tbasis/fit.hpp"
#include "tbasis/metrics.hpp"
#include "tbasis/model_io.hpp"
#include "tbasis/rng.hpp"

namespace tbasis {

namespace {

using nlohmann::json;

json plan_to_json(const PlannedLayer& pl) {
  const LayerPlan& p = pl.plan;
  json j;
  j["name"] = p.spec.name;
  j["kind"] = p.spec.kind == LayerKind::conv ? "conv" : "linear";
  j["compress"] = pl.compress;
  j["c_out"] = p.spec.c_out;
  j["c_in"] = p.spec.c_in;
  j["kernel"] = p.spec.kernel;
  if (pl.compress) {
    j["d"] = p.depth;
    j["core_count"] = p.core_count;
    j["N"] = p.mode_size;
    j["envelope"] = p.envelope_shape;
    const double env = static_cast<double>(shape_volume(p.envelope_shape));
    const double nat = static_cast<double>(shape_volume(p.natural_shape));
    j["padding_waste_pct"] = 100.0 * (1.0 - nat / env);
  }
  return j;
}

json stats_to_json(const CompressionStats& s) {
  json j;
  j["uncompressed_total"] = s.uncompressed_total;
  j["plain_tr_total"] = s.plain_tr_total;
  j["coeff_total"] = s.coeff_total;
  j["adapter_total"] = s.adapter_total;
  j["basis_params"] = s.basis_params;
  j["tbasis_with_basis_total"] = s.tbasis_with_basis_total;
  j["tbasis_without_basis_total"] = s.tbasis_without_basis_total;
  j["incompressible_total"] = s.incompressible_total;
  j["buffer_total"] = s.buffer_total;
  j["r_alpha"] = s.r_alpha;
  j["r_rho"] = s.r_rho;
  j["r_basis"] = s.r_basis;
  j["r_total"] = s.r_total;
  j["compression_ratio"] = s.compression_ratio;
  j["compression_ratio_without_basis"] = s.compression_ratio_without_basis;
  j["compression_ratio_with_buffers"] = s.compression_ratio_with_buffers;
  j["layers"] = json::array();
  for (const auto& c : s.layers) {
    j["layers"].push_back({{"name", c.name},
                           {"compressed", c.compressed},
                           {"core_count", c.core_count},
                           {"uncompressed", c.uncompressed},
                           {"plain_tr", c.plain_tr},
                           {"coeffs", c.coeffs},
                           {"adapters", c.adapters},
                           {"buffers", c.buffers}});
  }
  return j;
}

void emit(const json& j) { std::cout << j.dump(2) << std::endl; }

DenseTensor seeded_input(std::size_t w, std::size_t h, std::size_t c, std::uint64_t seed) {
  DenseTensor x(Shape{w, h, c});
  rng::CounterRng gen(seed);
  for (double& v : x.data()) v = gen.next_normal();
  return x;
}

struct CheckList {
  json checks = json::array();
  bool all_pass = true;

  void add(const std::string& name, const std::string& layer, bool pass,
           double metric, double threshold) {
    checks.push_back({{"check", name},
                      {"layer", layer},
                      {"pass", pass},
                      {"metric", metric},
                      {"threshold", threshold}});
    all_pass = all_pass && pass;
  }
};

int cmd_plan(const std::string& network_path, const std::string& format) {
  const NetworkDescription desc = load_network(network_path);
  const std::vector<PlannedLayer> planned = plan_network(desc);
  json j;
  j["command"] = "plan";
  j["n"] = desc.base;
  j["basis_size"] = desc.basis_size;
  j["rank"] = desc.rank;
  j["layers"] = json::array();
  for (const auto& pl : planned) j["layers"].push_back(plan_to_json(pl));
  if (format == "table") {
    for (const auto& pl : planned) {
      const json lj = plan_to_json(pl);
      std::cout << lj["name"].get<std::string>() << ": ";
      if (pl.compress) {
        std::cout << "d=" << pl.plan.depth << " cores=" << pl.plan.core_count
                  << " envelope=" << json(pl.plan.envelope_shape).dump()
                  << " waste=" << lj["padding_waste_pct"].get<double>() << "%";
      } else {
        std::cout << "kept dense";
      }
      std::cout << "\n";
    }
  } else {
    emit(j);
  }
  return 0;
}

int cmd_init(const std::string& network_path, const std::string& out_path,
             std::optional<std::uint64_t> seed_flag) {
  const NetworkDescription desc = load_network(network_path);
  const std::uint64_t seed = seed_flag.value_or(desc.seed);
  const StoredModel model = init_model(desc, seed);
  save_model(out_path, model);
  json j;
  j["command"] = "init";
  j["out"] = out_path;
  j["seed"] = seed;
  j["basis_size"] = desc.basis_size;
  j["rank"] = desc.rank;
  j["N"] = desc.mode_size();
  j["basis_mode"] = desc.basis_mode == BasisMode::prng ? "prng" : "learned";
  j["layers"] = json::array();
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    json lj;
    lj["name"] = desc.layers[i].spec.name;
    lj["compressed"] = static_cast<bool>(model.params[i]);
    if (model.params[i]) {
      lj["core_count"] = model.params[i]->plan.core_count;
      lj["params"] = model.params[i]->alpha.size() + model.params[i]->theta.size();
    }
    j["layers"].push_back(std::move(lj));
  }
  emit(j);
  return 0;
}

int cmd_fit(const std::string& network_path, const std::string& targets_dir,
            const std::string& out_path, FitConfig cfg, double reg_weight,
            std::optional<std::uint64_t> seed_flag, const std::string& report_path) {
  const NetworkDescription desc = load_network(network_path);
  const std::uint64_t seed = seed_flag.value_or(desc.seed);
  cfg.seed = rng::derive_seed(seed, "fit");
  StoredModel model = init_model(desc, seed);

  std::vector<std::size_t> indices;
  FitProblem problem;
  problem.model = fit_view(model, &indices);
  problem.reg_weight = reg_weight;
  for (std::size_t idx : indices) {
    const std::filesystem::path target_file =
        std::filesystem::path(targets_dir) / (desc.layers[idx].spec.name + ".dtf");
    problem.targets.push_back(load_dtf1(target_file));
  }

  auto [fitted, report] = fit(problem, cfg);
  apply_fit(model, fitted);
  save_model(out_path, model);

  json j;
  j["command"] = "fit";
  j["out"] = out_path;
  j["iterations"] = report.loss_history.size();
  j["best_loss"] = report.best_loss;
  j["best_iteration"] = report.best_iteration;
  j["aborted_non_finite"] = report.aborted_non_finite;
  j["wall_seconds"] = report.wall_seconds;
  j["layer_rel_errors"] = json::array();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    j["layer_rel_errors"].push_back(
        {{"layer", desc.layers[indices[k]].spec.name},
         {"rel_error", report.layer_rel_errors[k]}});
  }
  if (report.grad_check_max_rel >= 0.0) {
    j["grad_check_max_rel"] = report.grad_check_max_rel;
  }
  if (!report_path.empty()) {
    json full = j;
    full["loss_history"] = report.loss_history;
    atomic_write_file(report_path, full.dump(2) + "\n");
    j["report"] = report_path;
  }
  emit(j);
  return report.aborted_non_finite ? 2 : 0;
}

int cmd_synth(const std::string& model_path, const std::string& layer_name,
              const std::string& out_path) {
  const StoredModel model = load_model(model_path);
  const std::size_t idx = model.layer_index(layer_name);
  if (!model.params[idx]) {
    throw BadConfig("layer " + layer_name + " is kept dense; nothing to synthesize");
  }
  const DenseTensor w = synth_natural_weight(model.basis, *model.params[idx]);
  save_dtf1(out_path, w);
  json j;
  j["command"] = "synth";
  j["layer"] = layer_name;
  j["shape"] = w.shape();
  j["frobenius"] = frobenius(w);
  j["out"] = out_path;
  emit(j);
  return 0;
}

int cmd_conv(const std::string& model_path, const std::string& layer_name,
             const std::string& input_path, const std::string& path_name,
             const std::string& weight_path, const std::string& out_path) {
  const StoredModel model = load_model(model_path);
  const std::size_t idx = model.layer_index(layer_name);
  if (!model.params[idx]) {
    throw BadConfig("layer " + layer_name + " is kept dense");
  }
  const LayerParams& params = *model.params[idx];
  const DenseTensor x = load_dtf1(input_path);
  if (x.order() != 3) throw ShapeMismatch("input tensor must be W x H x C");

  OpCounter counter;
  DenseTensor y;
  ConvPath path;
  if (path_name == "direct") {
    path = ConvPath::direct;
    y = conv2d_direct(x, model.basis, params, &counter);
  } else if (path_name == "decompress") {
    path = ConvPath::decompress;
    y = conv2d_decompress(x, model.basis, params, &counter);
  } else if (path_name == "reference") {
    path = ConvPath::reference;
    if (weight_path.empty()) {
      throw BadConfig("path=reference needs --weight with an explicit dense weight");
    }
    y = conv2d_reference(x, load_dtf1(weight_path), &counter);
  } else {
    throw BadConfig("path must be direct, decompress, or reference");
  }
  save_dtf1(out_path, y);

  const ConvDims dims = conv_dims(params.plan, x.shape()[0], x.shape()[1],
                                  model.basis.rank);
  json j;
  j["command"] = "conv";
  j["layer"] = layer_name;
  j["path"] = path_name;
  j["out"] = out_path;
  j["out_shape"] = y.shape();
  j["multiply_adds"] = counter.multiply_adds;
  j["predicted_multiply_adds"] = flops(path, dims).multiply_adds;
  emit(j);
  return 0;
}

int cmd_stats(const std::string& network_path, const std::string& model_path,
              bool include_buffers, const std::string& format) {
  NetworkDescription desc;
  if (!network_path.empty()) {
    desc = load_network(network_path);
  } else if (!model_path.empty()) {
    desc = load_model(model_path).desc;
  } else {
    throw BadConfig("stats needs --network or --model");
  }
  const std::vector<PlannedLayer> planned = plan_network(desc);
  const CompressionStats s =
      stats(planned, desc.basis_size, desc.rank, desc.mode_size());
  const RemarkBound rb = remark_bound(planned, desc.base, desc.basis_size, desc.rank);
  if (format == "table") {
    std::cout << stats_table(s);
    return 0;
  }
  json j = stats_to_json(s);
  j["command"] = "stats";
  j["headline_compression_ratio"] =
      include_buffers ? s.compression_ratio_with_buffers : s.compression_ratio;
  j["log_bound"] = {{"actual", rb.actual},
                    {"bound", rb.bound},
                    {"largest_layer_weights", rb.largest_layer_weights},
                    {"constant", rb.constant},
                    {"note", "bound constant is implementation-chosen: 3*(B+R)"}};
  emit(j);
  return 0;
}

int cmd_verify(const std::string& model_path, std::optional<std::uint64_t> seed_flag,
               bool variance_check) {
  const StoredModel model = load_model(model_path);
  const std::uint64_t seed = seed_flag.value_or(model.desc.seed);
  CheckList list;

  // Serialization round trip must be byte-exact.
  {
    const std::string bytes = serialize_model(model);
    const std::string again = serialize_model(deserialize_model(bytes));
    list.add("model_roundtrip", "", bytes == again, bytes == again ? 0.0 : 1.0, 0.0);
  }

  for (std::size_t i = 0; i < model.params.size(); ++i) {
    if (!model.params[i]) continue;
    const LayerParams& params = *model.params[i];
    const LayerPlan& plan = params.plan;
    const std::string& name = plan.spec.name;
    const TRCores tr = synth_layer(model.basis, params);

    const DenseTensor seq = tr_reconstruct(tr);
    const DenseTensor pair = tr_assemble_pairwise(tr);
    list.add("assembly_agreement", name, relative_error(pair, seq) <= 1e-12,
             relative_error(pair, seq), 1e-12);

    // Sampled brute-force entries against the assembled tensor.
    {
      rng::CounterRng gen(rng::derive_seed(seed, "verify.entries/" + name));
      double worst = 0.0;
      const double scale = frobenius(seq) /
                           std::sqrt(static_cast<double>(seq.size())) + 1e-30;
      for (int s = 0; s < 64; ++s) {
        std::vector<std::size_t> idx(plan.core_count);
        for (std::size_t k = 0; k < idx.size(); ++k) {
          idx[k] = static_cast<std::size_t>(gen.next_u64() % plan.mode_size);
        }
        const double a = seq.at(idx);
        const double b = tr_entry(tr, idx);
        worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), scale));
      }
      list.add("entry_agreement", name, worst <= 1e-12, worst, 1e-12);
    }

    // Relabeling round trips, bitwise.
    {
      const DenseTensor env = untensorize(pair, plan);
      const bool bijective = tensorize(env, plan).data() == pair.data();
      const DenseTensor nat = crop_from_envelope(env, plan);
      const DenseTensor back = crop_from_envelope(pad_to_envelope(nat, plan), plan);
      const bool padcrop = back.data() == nat.data();
      list.add("relabel_roundtrip", name, bijective && padcrop,
               bijective && padcrop ? 0.0 : 1.0, 0.0);
    }

    // Convolution path equivalence on a seeded input.
    {
      const std::size_t k = plan.spec.kernel;
      const std::size_t side = std::max<std::size_t>(k + 3, 4);
      const DenseTensor x = seeded_input(side, side, plan.spec.c_in,
                                         rng::derive_seed(seed, "verify.x/" + name));
      OpCounter direct_count, dec_count;
      const DenseTensor y_direct = conv2d_direct(x, model.basis, params, &direct_count);
      const DenseTensor y_dec = conv2d_decompress(x, model.basis, params, &dec_count);
      const double path_err = relative_error(y_direct, y_dec);
      list.add("path_equivalence", name, path_err <= 1e-9, path_err, 1e-9);

      DenseTensor w = decompress_weight(model.basis, params);
      if (plan.spec.kind == LayerKind::linear) {
        w = reshape(w, {plan.spec.c_out, plan.spec.c_in, 1, 1});
      }
      const double ref_err = relative_error(y_dec, conv2d_reference(x, w));
      list.add("decompress_matches_reference", name, ref_err <= 1e-12, ref_err, 1e-12);

      const ConvDims dims = conv_dims(plan, side, side, model.basis.rank);
      const bool direct_ok =
          direct_count.multiply_adds == flops(ConvPath::direct, dims).multiply_adds;
      const bool dec_ok =
          dec_count.multiply_adds == flops(ConvPath::decompress, dims).multiply_adds;
      list.add("flops_exact", name, direct_ok && dec_ok,
               direct_ok && dec_ok ? 0.0 : 1.0, 0.0);
    }

    if (variance_check) {
      const InitSpec spec = init_spec_for(plan, model.basis.basis_size, model.basis.rank);
      const DenseTensor w = synth_natural_weight(model.basis, params);
      const double v = empirical_variance(w);
      const double dev = std::abs(v - spec.sigma_layer_sq) / spec.sigma_layer_sq;
      list.add("init_variance", name, dev <= 0.10, dev, 0.10);
    }
  }

  // Gradient check on a seeded problem built from the model.
  {
    FitProblem problem;
    problem.model = fit_view(model);
    problem.reg_weight = 3e-4;
    rng::CounterRng gen(rng::derive_seed(seed, "verify.targets"));
    for (const auto& layer : problem.model.layers) {
      DenseTensor w = synth_natural_weight(problem.model.basis, layer);
      const double scale =
          0.1 * (frobenius(w) / std::sqrt(static_cast<double>(w.size())) + 1e-12);
      for (double& v : w.data()) v += scale * gen.next_normal();
      problem.targets.push_back(std::move(w));
    }
    const double fd = fd_check(problem, 1e-5, 50, rng::derive_seed(seed, "verify.fd"));
    list.add("fd_check", "", fd <= 1e-5, fd, 1e-5);
  }

  json j;
  j["command"] = "verify";
  j["model"] = model_path;
  j["passed"] = list.all_pass;
  j["checks"] = list.checks;
  emit(j);
  return list.all_pass ? 0 : 2;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Tensor-ring shared-basis weight compression toolkit"};
  app.require_subcommand(1);

  std::string network_path, model_path, out_path, layer_name, input_path;
  std::string weight_path, targets_dir, report_path;
  std::string format = "json";
  std::string conv_path = "direct";
  std::string optimizer = "adam";
  bool include_buffers = false;
  bool no_variance_check = false;
  std::optional<std::uint64_t> seed_flag;
  FitConfig fit_cfg;
  fit_cfg.iterations = 1000;
  double reg_weight = 3e-4;

  auto* plan = app.add_subcommand("plan", "Derive per-layer tensorization plans");
  plan->add_option("--network", network_path, "network description JSON")->required();
  plan->add_option("--format", format, "json|table");

  auto* init = app.add_subcommand("init", "Initialize a model from a description");
  init->add_option("--network", network_path)->required();
  init->add_option("--out", out_path, "output model file")->required();
  init->add_option("--seed", seed_flag, "overrides the description seed");

  auto* fitc = app.add_subcommand("fit", "Fit a model to target tensors");
  fitc->add_option("--network", network_path)->required();
  fitc->add_option("--targets", targets_dir, "directory with <layer>.dtf targets")
      ->required();
  fitc->add_option("--out", out_path)->required();
  fitc->add_option("--iterations", fit_cfg.iterations);
  fitc->add_option("--lr", fit_cfg.lr, "learning rate (default 3e-3)");
  fitc->add_option("--warmup", fit_cfg.warmup_steps, "linear warm-up steps (default 2000)");
  fitc->add_option("--optimizer", optimizer, "adam|sgd");
  fitc->add_option("--reg", reg_weight, "weight-norm regularization (default 3e-4)");
  fitc->add_option("--seed", seed_flag);
  fitc->add_option("--report", report_path, "write the full fit report JSON here");
  fitc->add_flag("--grad-check", fit_cfg.grad_check, "append a gradient check to the report");

  auto* synth = app.add_subcommand("synth", "Write a layer's synthesized weight");
  synth->add_option("--model", model_path)->required();
  synth->add_option("--layer", layer_name)->required();
  synth->add_option("--out", out_path)->required();

  auto* conv = app.add_subcommand("conv", "Convolve an input through a layer");
  conv->add_option("--model", model_path)->required();
  conv->add_option("--layer", layer_name)->required();
  conv->add_option("--input", input_path, "input tensor (W x H x C DTF1)")->required();
  conv->add_option("--path", conv_path, "direct|decompress|reference");
  conv->add_option("--weight", weight_path, "explicit weight for path=reference");
  conv->add_option("--out", out_path)->required();

  auto* statsc = app.add_subcommand("stats", "Storage accounting and ratios");
  statsc->add_option("--network", network_path);
  statsc->add_option("--model", model_path);
  statsc->add_flag("--include-buffers", include_buffers,
                   "headline ratio counts declared buffers");
  statsc->add_option("--format", format, "json|table");

  auto* verify = app.add_subcommand("verify", "Run the model invariant suite");
  verify->add_option("--model", model_path)->required();
  verify->add_option("--seed", seed_flag);
  verify->add_flag("--no-variance-check", no_variance_check,
                   "skip the init-variance check (fitted models drift by design)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (plan->parsed()) return cmd_plan(network_path, format);
    if (init->parsed()) return cmd_init(network_path, out_path, seed_flag);
    if (fitc->parsed()) {
      fit_cfg.optimizer = optimizer == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;
      return cmd_fit(network_path, targets_dir, out_path, fit_cfg, reg_weight,
                     seed_flag, report_path);
    }
    if (synth->parsed()) return cmd_synth(model_path, layer_name, out_path);
    if (conv->parsed()) {
      return cmd_conv(model_path, layer_name, input_path, conv_path, weight_path,
                      out_path);
    }
    if (statsc->parsed()) {
      return cmd_stats(network_path, model_path, include_buffers, format);
    }
    if (verify->parsed()) return cmd_verify(model_path, seed_flag, !no_variance_check);
  } catch (const NonFinite& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace tbasis
