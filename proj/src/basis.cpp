#include "tbasis/basis.hpp"

#include <cmath>
#include <string>

#include "tbasis/rng.hpp"

namespace tbasis {

void TBasis::validate() const {
  if (basis_size == 0) throw BadConfig("basis size must be positive");
  if (rank == 0 || mode_size == 0) throw BadConfig("rank and mode size must be positive");
  if (basis_size > mode_size * rank * rank) {
    throw BadConfig("basis size " + std::to_string(basis_size) +
                    " exceeds the core-space dimension N*R^2 = " +
                    std::to_string(mode_size * rank * rank));
  }
  if (tensors.size() != basis_size) throw SizeMismatch("basis tensor count mismatch");
  const Shape expect{rank, mode_size, rank};
  for (const auto& t : tensors) {
    if (t.shape() != expect) throw ShapeMismatch("basis tensors must be R x N x R");
  }
}

InitSpec init_spec_for(const LayerPlan& plan, std::size_t basis_size, std::size_t rank) {
  InitSpec s;
  s.sigma_basis_sq = 1.0 / (static_cast<double>(basis_size) * static_cast<double>(rank));
  const double fan_in = plan.spec.kind == LayerKind::conv
                            ? static_cast<double>(plan.spec.c_in) * plan.spec.kernel * plan.spec.kernel
                            : static_cast<double>(plan.spec.c_in);
  s.sigma_layer_sq = plan.spec.gain / fan_in;
  s.sigma_alpha_sq = std::pow(s.sigma_layer_sq, 1.0 / static_cast<double>(plan.core_count));
  return s;
}

TBasis init_tbasis(std::size_t basis_size, std::size_t rank, std::size_t mode_size,
                   std::uint64_t seed, BasisMode mode) {
  TBasis basis;
  basis.basis_size = basis_size;
  basis.rank = rank;
  basis.mode_size = mode_size;
  basis.mode = mode;
  basis.seed = seed;
  if (basis_size == 0 || rank == 0 || mode_size == 0 ||
      basis_size > mode_size * rank * rank) {
    basis.tensors.clear();
    basis.validate();  // throws BadConfig with the exact bound
  }
  const double sigma = std::sqrt(1.0 / (static_cast<double>(basis_size) * rank));
  basis.tensors.reserve(basis_size);
  for (std::size_t beta = 0; beta < basis_size; ++beta) {
    rng::CounterRng gen(rng::derive_seed(seed, "basis." + std::to_string(beta)));
    DenseTensor t(Shape{rank, mode_size, rank});
    for (double& v : t.data()) v = sigma * gen.next_normal();
    basis.tensors.push_back(std::move(t));
  }
  return basis;
}

DenseTensor synth_core(const TBasis& basis, std::span<const double> coeff_row) {
  basis.validate();
  if (coeff_row.size() != basis.basis_size) {
    throw SizeMismatch("coefficient row length " + std::to_string(coeff_row.size()) +
                       " does not match basis size " + std::to_string(basis.basis_size));
  }
  DenseTensor core(Shape{basis.rank, basis.mode_size, basis.rank});
  double* out = core.data().data();
  for (std::size_t beta = 0; beta < basis.basis_size; ++beta) {
    const double a = coeff_row[beta];
    const double* src = basis.tensors[beta].data().data();
    for (std::size_t i = 0; i < core.size(); ++i) out[i] += a * src[i];
  }
  return core;
}

TRCores synth_layer(const TBasis& basis, const LayerParams& params) {
  basis.validate();
  const std::size_t d = params.plan.core_count;
  if (params.alpha.shape() != Shape{d, basis.basis_size}) {
    throw SizeMismatch("alpha must be core_count x basis_size");
  }
  if (params.theta.shape() != Shape{d, basis.rank}) {
    throw SizeMismatch("theta must be core_count x rank");
  }
  if (params.plan.mode_size != basis.mode_size) {
    throw SizeMismatch("layer mode size does not match the basis");
  }
  TRCores tr;
  tr.cores.reserve(d);
  tr.adapters.reserve(d);
  for (std::size_t k = 0; k < d; ++k) {
    std::span<const double> row(params.alpha.data().data() + k * basis.basis_size,
                                basis.basis_size);
    tr.cores.push_back(synth_core(basis, row));
    std::vector<double> rho(basis.rank);
    for (std::size_t a = 0; a < basis.rank; ++a) {
      rho[a] = std::exp(params.theta(k, a));
    }
    tr.adapters.push_back(std::move(rho));
  }
  return tr;
}

DenseTensor synth_natural_weight(const TBasis& basis, const LayerParams& params,
                                 OpCounter* counter) {
  const TRCores tr = synth_layer(basis, params);
  const DenseTensor tens = tr_assemble_pairwise(tr, counter);
  const DenseTensor env = untensorize(tens, params.plan);
  return crop_from_envelope(env, params.plan);
}

double empirical_variance(const DenseTensor& t) {
  const std::size_t n = t.size();
  double mean = 0.0;
  for (double v : t.data()) mean += v;
  mean /= static_cast<double>(n);
  double acc = 0.0;
  for (double v : t.data()) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(n);
}

LayerParams init_layer_params(const LayerPlan& plan, const TBasis& basis,
                              std::uint64_t seed) {
  basis.validate();
  if (plan.mode_size != basis.mode_size) {
    throw SizeMismatch("plan mode size does not match the basis");
  }
  const InitSpec spec = init_spec_for(plan, basis.basis_size, basis.rank);
  const double sigma_alpha = std::sqrt(spec.sigma_alpha_sq);

  LayerParams params;
  params.plan = plan;
  params.alpha = DenseTensor(Shape{plan.core_count, basis.basis_size});
  params.theta = DenseTensor(Shape{plan.core_count, basis.rank});
  rng::CounterRng gen(rng::derive_seed(seed, "alpha"));
  for (double& v : params.alpha.data()) v = sigma_alpha * gen.next_normal();

  // Correction pass: match the empirical variance of the cropped region to
  // the target. Scaling alpha by s scales the weight by s^core_count.
  const DenseTensor w = synth_natural_weight(basis, params);
  const double v_emp = empirical_variance(w);
  if (!(v_emp > 0.0) || !std::isfinite(v_emp)) {
    throw NonFinite("degenerate empirical variance during initialization");
  }
  const double scale =
      std::pow(spec.sigma_layer_sq / v_emp, 1.0 / (2.0 * static_cast<double>(plan.core_count)));
  for (double& v : params.alpha.data()) v *= scale;
  return params;
}

}  // namespace tbasis
