#include "tbasis/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace tbasis {

CompressionStats stats(std::span<const PlannedLayer> layers, std::size_t basis_size,
                       std::size_t rank, std::size_t mode_size) {
  CompressionStats s;
  s.basis_params = static_cast<std::uint64_t>(basis_size) * mode_size * rank * rank;
  bool any_compressed = false;
  for (const auto& layer : layers) {
    const LayerPlan& plan = layer.plan;
    LayerCounts c;
    c.name = plan.spec.name;
    c.compressed = layer.compress;
    c.core_count = plan.core_count;
    c.uncompressed = shape_volume(plan.natural_shape);
    c.buffers = layer.buffer_params;
    if (layer.compress) {
      any_compressed = true;
      c.plain_tr = static_cast<std::uint64_t>(plan.core_count) * mode_size * rank * rank;
      c.coeffs = static_cast<std::uint64_t>(plan.core_count) * basis_size;
      c.adapters = static_cast<std::uint64_t>(plan.core_count) * rank;
    } else {
      s.incompressible_total += c.uncompressed;
    }
    s.uncompressed_total += c.uncompressed;
    s.plain_tr_total += c.plain_tr;
    s.coeff_total += c.coeffs;
    s.adapter_total += c.adapters;
    s.buffer_total += c.buffers;
    s.layers.push_back(std::move(c));
  }
  s.tbasis_without_basis_total = s.coeff_total + s.adapter_total;
  s.tbasis_with_basis_total = s.tbasis_without_basis_total + (any_compressed ? s.basis_params : 0);

  if (s.plain_tr_total > 0) {
    const double tr = static_cast<double>(s.plain_tr_total);
    s.r_alpha = static_cast<double>(s.coeff_total) / tr;
    s.r_rho = static_cast<double>(s.adapter_total) / tr;
    s.r_basis = static_cast<double>(s.basis_params) / tr;
    s.r_total = s.r_alpha + s.r_rho + s.r_basis;
  }
  if (s.uncompressed_total > 0) {
    const double base = static_cast<double>(s.uncompressed_total);
    s.compression_ratio =
        static_cast<double>(s.tbasis_with_basis_total + s.incompressible_total) / base;
    s.compression_ratio_without_basis =
        static_cast<double>(s.tbasis_without_basis_total + s.incompressible_total) / base;
    s.compression_ratio_with_buffers =
        static_cast<double>(s.tbasis_with_basis_total + s.incompressible_total + s.buffer_total) /
        (base + static_cast<double>(s.buffer_total));
  }
  return s;
}

double storage_ratio_closed_form(std::size_t layer_count, std::size_t core_count,
                                 std::size_t basis_size, std::size_t rank,
                                 std::size_t mode_size) {
  const double b = static_cast<double>(basis_size);
  const double r = static_cast<double>(rank);
  const double n = static_cast<double>(mode_size);
  const double dl = static_cast<double>(core_count) * static_cast<double>(layer_count);
  return b / (n * r * r) + 1.0 / (n * r) + b / dl;
}

RemarkBound remark_bound(std::span<const PlannedLayer> layers, std::size_t base,
                         std::size_t basis_size, std::size_t rank) {
  RemarkBound rb;
  rb.constant = 3.0 * static_cast<double>(basis_size + rank);
  std::uint64_t actual = 0;
  std::size_t compressed_count = 0;
  for (const auto& layer : layers) {
    if (!layer.compress) continue;
    ++compressed_count;
    actual += static_cast<std::uint64_t>(layer.plan.core_count) * (basis_size + rank);
    rb.largest_layer_weights =
        std::max<std::uint64_t>(rb.largest_layer_weights, shape_volume(layer.plan.natural_shape));
  }
  rb.actual = static_cast<double>(actual);
  if (compressed_count > 0 && rb.largest_layer_weights > 1) {
    const double log_n_s = std::log(static_cast<double>(rb.largest_layer_weights)) /
                           std::log(static_cast<double>(base));
    rb.bound = rb.constant * static_cast<double>(compressed_count) * log_n_s;
  }
  return rb;
}

std::string stats_table(const CompressionStats& s) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %6s %12s %12s %10s %10s %10s\n", "layer",
                "cores", "uncompressed", "plain_tr", "coeffs", "adapters", "buffers");
  os << line;
  for (const auto& c : s.layers) {
    std::snprintf(line, sizeof(line), "%-16s %6zu %12llu %12llu %10llu %10llu %10llu%s\n",
                  c.name.c_str(), c.core_count,
                  static_cast<unsigned long long>(c.uncompressed),
                  static_cast<unsigned long long>(c.plain_tr),
                  static_cast<unsigned long long>(c.coeffs),
                  static_cast<unsigned long long>(c.adapters),
                  static_cast<unsigned long long>(c.buffers),
                  c.compressed ? "" : "   (kept dense)");
    os << line;
  }
  std::snprintf(line, sizeof(line),
                "totals: uncompressed=%llu plain_tr=%llu with_basis=%llu without_basis=%llu "
                "incompressible=%llu buffers=%llu\n",
                static_cast<unsigned long long>(s.uncompressed_total),
                static_cast<unsigned long long>(s.plain_tr_total),
                static_cast<unsigned long long>(s.tbasis_with_basis_total),
                static_cast<unsigned long long>(s.tbasis_without_basis_total),
                static_cast<unsigned long long>(s.incompressible_total),
                static_cast<unsigned long long>(s.buffer_total));
  os << line;
  std::snprintf(line, sizeof(line),
                "ratios: r_alpha=%.6f r_rho=%.6f r_basis=%.6f r_total=%.6f\n", s.r_alpha,
                s.r_rho, s.r_basis, s.r_total);
  os << line;
  std::snprintf(line, sizeof(line),
                "compression: with_basis=%.6f without_basis=%.6f with_buffers=%.6f\n",
                s.compression_ratio, s.compression_ratio_without_basis,
                s.compression_ratio_with_buffers);
  os << line;
  return os.str();
}

}  // namespace tbasis
