#include "tbasis/layer_plan.hpp"

#include <algorithm>
#include <string>

namespace tbasis {

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t v = 1;
  for (std::size_t i = 0; i < exp; ++i) v *= base;
  return v;
}

std::size_t ceil_log(std::size_t base, std::size_t value) {
  if (base < 2) throw UnsupportedBase("base must be at least 2");
  if (value == 0) throw BadConfig("value must be positive");
  std::size_t d = 0, p = 1;
  while (p < value) {
    p *= base;
    ++d;
  }
  return d;
}

LayerPlan plan_layer(const LayerSpec& spec, std::size_t base) {
  if (base < 2) throw UnsupportedBase("base must be at least 2");
  if (spec.c_out == 0 || spec.c_in == 0) throw BadConfig("channel counts must be positive");
  if (spec.kernel == 0) throw BadConfig("kernel size must be positive");
  if (spec.kind == LayerKind::linear && spec.kernel != 1) {
    throw BadConfig("linear layers have kernel size 1");
  }
  if (spec.kind == LayerKind::conv && base < spec.kernel) {
    throw UnsupportedBase("base " + std::to_string(base) +
                          " is smaller than kernel " + std::to_string(spec.kernel) +
                          " for layer " + spec.name);
  }

  LayerPlan plan;
  plan.spec = spec;
  plan.base = base;
  plan.depth = std::max<std::size_t>(
      {ceil_log(base, spec.c_out), ceil_log(base, spec.c_in), 1});
  plan.mode_size = base * base;
  const std::size_t padded = ipow(base, plan.depth);
  if (spec.kind == LayerKind::conv) {
    plan.core_count = plan.depth + 1;
    plan.natural_shape = {spec.c_out, spec.c_in, spec.kernel, spec.kernel};
    plan.envelope_shape = {padded, padded, base, base};
  } else {
    plan.core_count = plan.depth;
    plan.natural_shape = {spec.c_out, spec.c_in};
    plan.envelope_shape = {padded, padded};
  }
  plan.tensorized_shape.assign(plan.core_count, plan.mode_size);
  return plan;
}

std::size_t mixed_radix_encode(std::size_t base, std::span<const std::size_t> digits) {
  std::size_t v = 0;
  for (std::size_t d : digits) {
    if (d >= base) throw IndexOutOfRange("digit out of range");
    v = v * base + d;
  }
  return v;
}

std::vector<std::size_t> mixed_radix_decode(std::size_t base, std::size_t depth,
                                            std::size_t value) {
  if (value >= ipow(base, depth)) throw IndexOutOfRange("index out of range");
  std::vector<std::size_t> digits(depth);
  for (std::size_t k = depth; k-- > 0;) {
    digits[k] = value % base;
    value /= base;
  }
  return digits;
}

namespace {

// Splits every envelope mode into base-n digit modes: {n,..,n | n,..,n | n,n}.
Shape split_shape(const LayerPlan& plan) {
  const std::size_t d = plan.depth;
  Shape s(2 * d + (plan.has_spatial_core() ? 2 : 0), plan.base);
  return s;
}

// Interleaves (i_1..i_d, j_1..j_d[, p, q]) to (i_1, j_1, .., i_d, j_d[, p, q]).
std::vector<std::size_t> interleave_perm(const LayerPlan& plan) {
  const std::size_t d = plan.depth;
  std::vector<std::size_t> perm;
  perm.reserve(2 * d + 2);
  for (std::size_t k = 0; k < d; ++k) {
    perm.push_back(k);
    perm.push_back(d + k);
  }
  if (plan.has_spatial_core()) {
    perm.push_back(2 * d);
    perm.push_back(2 * d + 1);
  }
  return perm;
}

std::vector<std::size_t> inverse_perm(std::span<const std::size_t> perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = k;
  return inv;
}

}  // namespace

DenseTensor tensorize(const DenseTensor& envelope, const LayerPlan& plan) {
  if (envelope.shape() != plan.envelope_shape) {
    throw ShapeMismatch("tensorize expects the envelope shape");
  }
  DenseTensor split = reshape(envelope, split_shape(plan));
  DenseTensor mixed = permute(split, interleave_perm(plan));
  return reshape(mixed, plan.tensorized_shape);
}

DenseTensor untensorize(const DenseTensor& tensorized, const LayerPlan& plan) {
  if (tensorized.shape() != plan.tensorized_shape) {
    throw ShapeMismatch("untensorize expects the tensorized shape");
  }
  DenseTensor mixed = reshape(tensorized, split_shape(plan));
  DenseTensor split = permute(mixed, inverse_perm(interleave_perm(plan)));
  return reshape(split, plan.envelope_shape);
}

DenseTensor pad_to_envelope(const DenseTensor& natural, const LayerPlan& plan) {
  if (natural.shape() != plan.natural_shape) {
    throw ShapeMismatch("pad expects the natural shape");
  }
  DenseTensor out(plan.envelope_shape);
  const auto out_strides = row_major_strides(plan.envelope_shape);
  std::vector<std::size_t> idx(natural.order(), 0);
  std::size_t flat = 0;
  do {
    std::size_t dst = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) dst += idx[k] * out_strides[k];
    out[dst] = natural[flat++];
  } while (next_index(plan.natural_shape, idx));
  return out;
}

DenseTensor crop_from_envelope(const DenseTensor& envelope, const LayerPlan& plan) {
  if (envelope.shape() != plan.envelope_shape) {
    throw ShapeMismatch("crop expects the envelope shape");
  }
  DenseTensor out(plan.natural_shape);
  const auto in_strides = row_major_strides(plan.envelope_shape);
  std::vector<std::size_t> idx(out.order(), 0);
  std::size_t flat = 0;
  do {
    std::size_t src = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) src += idx[k] * in_strides[k];
    out[flat++] = envelope[src];
  } while (next_index(plan.natural_shape, idx));
  return out;
}

}  // namespace tbasis
