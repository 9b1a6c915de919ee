#include "tbasis/fit.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "tbasis/rng.hpp"

namespace tbasis {

namespace {

void validate_problem(const FitProblem& p) {
  p.model.basis.validate();
  if (p.model.layers.size() != p.targets.size()) {
    throw SizeMismatch("need one target per layer");
  }
  if (p.reg_weight < 0.0) throw BadConfig("reg weight must be nonnegative");
  for (std::size_t l = 0; l < p.targets.size(); ++l) {
    if (p.targets[l].shape() != p.model.layers[l].plan.natural_shape) {
      throw ShapeMismatch("target " + std::to_string(l) +
                          " does not match the layer's natural shape");
    }
  }
}

double layer_loss_terms(const DenseTensor& w, const DenseTensor& target, double reg) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = w[i] - target[i];
    acc += d * d + reg * w[i] * w[i];
  }
  return acc;
}

// Gradient of the ring product with respect to the adapter-scaled cores.
// For each tensorized entry, d tr(M_1 .. M_D)/dM_k = (S_{k+1} P_{k-1})^T with
// P the prefix and S the suffix products of the R x R core slices.
void ring_backward(const std::vector<DenseTensor>& scaled, const DenseTensor& g_tens,
                   std::size_t rank, std::vector<DenseTensor>& d_scaled) {
  const std::size_t dcount = scaled.size();
  const std::size_t r = rank;
  const std::size_t n = scaled.front().shape()[1];

  std::vector<const double*> core_ptr(dcount);
  for (std::size_t k = 0; k < dcount; ++k) core_ptr[k] = scaled[k].data().data();

  std::vector<double> prefix((dcount + 1) * r * r, 0.0);
  std::vector<double> suffix((dcount + 1) * r * r, 0.0);
  std::vector<double> tmp(r * r, 0.0);
  std::vector<std::size_t> digits(dcount, 0);

  for (std::size_t flat = 0;; ++flat) {
    const double g = g_tens[flat];
    if (g != 0.0) {
      // prefix[k] = M_0 .. M_{k-1}; suffix[k] = M_k .. M_{D-1}
      for (std::size_t a = 0; a < r; ++a) {
        for (std::size_t b = 0; b < r; ++b) {
          prefix[a * r + b] = (a == b) ? 1.0 : 0.0;
          suffix[dcount * r * r + a * r + b] = (a == b) ? 1.0 : 0.0;
        }
      }
      for (std::size_t k = 0; k < dcount; ++k) {
        const double* m = core_ptr[k] + digits[k] * r;  // M_k(a,b) at a*n*r+b
        const double* pin = &prefix[k * r * r];
        double* pout = &prefix[(k + 1) * r * r];
        for (std::size_t a = 0; a < r; ++a) {
          for (std::size_t b = 0; b < r; ++b) {
            double acc = 0.0;
            for (std::size_t c = 0; c < r; ++c) acc += pin[a * r + c] * m[c * n * r + b];
            pout[a * r + b] = acc;
          }
        }
      }
      for (std::size_t k = dcount; k-- > 0;) {
        const double* m = core_ptr[k] + digits[k] * r;
        const double* sin = &suffix[(k + 1) * r * r];
        double* sout = &suffix[k * r * r];
        for (std::size_t a = 0; a < r; ++a) {
          for (std::size_t b = 0; b < r; ++b) {
            double acc = 0.0;
            for (std::size_t c = 0; c < r; ++c) acc += m[a * n * r + c] * sin[c * r + b];
            sout[a * r + b] = acc;
          }
        }
      }
      for (std::size_t k = 0; k < dcount; ++k) {
        // env = S_{k+1} P_{k-1}; dM_k += g * env^T
        const double* s = &suffix[(k + 1) * r * r];
        const double* pp = &prefix[k * r * r];
        for (std::size_t a = 0; a < r; ++a) {
          for (std::size_t b = 0; b < r; ++b) {
            double acc = 0.0;
            for (std::size_t c = 0; c < r; ++c) acc += s[a * r + c] * pp[c * r + b];
            tmp[a * r + b] = acc;
          }
        }
        double* dm = d_scaled[k].data().data() + digits[k] * r;
        for (std::size_t a = 0; a < r; ++a) {
          for (std::size_t b = 0; b < r; ++b) {
            dm[b * n * r + a] += g * tmp[a * r + b];
          }
        }
      }
    }
    std::size_t k = dcount;
    bool done = true;
    while (k-- > 0) {
      if (++digits[k] < n) {
        done = false;
        break;
      }
      digits[k] = 0;
    }
    if (done) break;
  }
}

struct LossGrad {
  double value = 0.0;
  ModelGrad grads;
  bool with_grads = false;
};

LossGrad evaluate(const FitProblem& p, bool with_grads) {
  validate_problem(p);
  const TBasis& basis = p.model.basis;
  const std::size_t r = basis.rank;
  const bool learn_basis = basis.mode == BasisMode::learned;

  LossGrad out;
  out.with_grads = with_grads;
  if (with_grads) {
    out.grads.basis.assign(basis.basis_size,
                           DenseTensor(Shape{r, basis.mode_size, r}));
    for (const auto& layer : p.model.layers) {
      out.grads.alpha.push_back(DenseTensor(layer.alpha.shape()));
      out.grads.theta.push_back(DenseTensor(layer.theta.shape()));
    }
  }

  for (std::size_t l = 0; l < p.model.layers.size(); ++l) {
    const LayerParams& layer = p.model.layers[l];
    const LayerPlan& plan = layer.plan;
    const TRCores tr = synth_layer(basis, layer);
    const std::vector<DenseTensor> scaled = fold_adapters(tr);

    TRCores scaled_ring;
    scaled_ring.cores = scaled;
    const DenseTensor w_tens = tr_assemble_pairwise(scaled_ring);
    const DenseTensor w_env = untensorize(w_tens, plan);
    const DenseTensor w_nat = crop_from_envelope(w_env, plan);

    out.value += layer_loss_terms(w_nat, p.targets[l], p.reg_weight);
    if (!std::isfinite(out.value)) {
      throw NonFinite("loss is not finite (layer " + plan.spec.name + ")");
    }
    if (!with_grads) continue;

    DenseTensor g_nat(plan.natural_shape);
    for (std::size_t i = 0; i < w_nat.size(); ++i) {
      g_nat[i] = 2.0 * (w_nat[i] - p.targets[l][i]) + 2.0 * p.reg_weight * w_nat[i];
    }
    const DenseTensor g_env = pad_to_envelope(g_nat, plan);
    const DenseTensor g_tens = tensorize(g_env, plan);

    std::vector<DenseTensor> d_scaled(plan.core_count,
                                      DenseTensor(Shape{r, basis.mode_size, r}));
    ring_backward(scaled, g_tens, r, d_scaled);

    // Chain through the adapter scaling C'_k = diag(rho_k) C_k, then through
    // the linear combination over the basis and rho = exp(theta).
    for (std::size_t k = 0; k < plan.core_count; ++k) {
      const std::size_t nmid = basis.mode_size;
      DenseTensor d_core(Shape{r, nmid, r});
      const double* ds = d_scaled[k].data().data();
      const double* raw = tr.cores[k].data().data();
      double* dc = d_core.data().data();
      for (std::size_t a = 0; a < r; ++a) {
        const double rho = tr.adapters[k][a];
        double drho = 0.0;
        for (std::size_t i = 0; i < nmid * r; ++i) {
          const std::size_t off = a * nmid * r + i;
          dc[off] = rho * ds[off];
          drho += raw[off] * ds[off];
        }
        out.grads.theta[l](k, a) = drho * rho;  // d rho / d theta = rho
      }
      for (std::size_t beta = 0; beta < basis.basis_size; ++beta) {
        const double* bt = basis.tensors[beta].data().data();
        double acc = 0.0;
        for (std::size_t i = 0; i < d_core.size(); ++i) acc += bt[i] * dc[i];
        out.grads.alpha[l](k, beta) = acc;
        if (learn_basis) {
          const double a_kb = layer.alpha(k, beta);
          double* db = out.grads.basis[beta].data().data();
          for (std::size_t i = 0; i < d_core.size(); ++i) db[i] += a_kb * dc[i];
        }
      }
    }
  }
  return out;
}

// Flat view over the free parameters of a model, in a fixed order: basis
// tensors (learned mode only), then per layer alpha then theta.
std::vector<double*> parameter_slots(Model& m) {
  std::vector<double*> slots;
  if (m.basis.mode == BasisMode::learned) {
    for (auto& t : m.basis.tensors) {
      for (double& v : t.data()) slots.push_back(&v);
    }
  }
  for (auto& layer : m.layers) {
    for (double& v : layer.alpha.data()) slots.push_back(&v);
    for (double& v : layer.theta.data()) slots.push_back(&v);
  }
  return slots;
}

std::vector<double> flatten_grads(const Model& m, const ModelGrad& g) {
  std::vector<double> flat;
  if (m.basis.mode == BasisMode::learned) {
    for (const auto& t : g.basis) {
      flat.insert(flat.end(), t.data().begin(), t.data().end());
    }
  }
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    flat.insert(flat.end(), g.alpha[l].data().begin(), g.alpha[l].data().end());
    flat.insert(flat.end(), g.theta[l].data().begin(), g.theta[l].data().end());
  }
  return flat;
}

}  // namespace

double loss(const FitProblem& p) { return evaluate(p, false).value; }

ModelGrad grad(const FitProblem& p) { return evaluate(p, true).grads; }

std::size_t free_parameter_count(const Model& m) {
  std::size_t count = 0;
  if (m.basis.mode == BasisMode::learned) {
    for (const auto& t : m.basis.tensors) count += t.size();
  }
  for (const auto& layer : m.layers) count += layer.alpha.size() + layer.theta.size();
  return count;
}

double fd_check(const FitProblem& p, double eps, std::size_t samples, std::uint64_t seed) {
  if (!(eps > 0.0)) throw BadConfig("eps must be positive");
  FitProblem work = p;
  const std::vector<double> analytic = flatten_grads(work.model, grad(work));
  std::vector<double*> slots = parameter_slots(work.model);
  if (slots.empty()) return 0.0;

  rng::CounterRng gen(rng::derive_seed(seed, "fd_check"));
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t i = static_cast<std::size_t>(gen.next_u64() % slots.size());
    const double saved = *slots[i];
    *slots[i] = saved + eps;
    const double lp = loss(work);
    *slots[i] = saved - eps;
    const double lm = loss(work);
    *slots[i] = saved;
    const double numeric = (lp - lm) / (2.0 * eps);
    const double denom = std::max(std::abs(analytic[i]), 1e-12);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

std::pair<Model, FitReport> fit(const FitProblem& p, const FitConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw BadConfig("learning rate must be positive");
  validate_problem(p);

  const auto t0 = std::chrono::steady_clock::now();
  FitProblem work = p;
  Model best = work.model;
  FitReport report;
  report.best_loss = std::numeric_limits<double>::infinity();

  std::vector<double*> slots = parameter_slots(work.model);
  std::vector<double> m1(slots.size(), 0.0), m2(slots.size(), 0.0);

  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    LossGrad lg;
    try {
      lg = evaluate(work, true);
    } catch (const NonFinite&) {
      report.aborted_non_finite = true;
      break;
    }
    report.loss_history.push_back(lg.value);
    if (lg.value < report.best_loss) {
      report.best_loss = lg.value;
      report.best_iteration = t;
      best = work.model;
    }

    const std::vector<double> g = flatten_grads(work.model, lg.grads);
    double lr_t = cfg.lr;
    if (cfg.warmup_steps > 0 && t < cfg.warmup_steps) {
      lr_t *= static_cast<double>(t) / static_cast<double>(cfg.warmup_steps);
    }
    if (cfg.optimizer == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < slots.size(); ++i) *slots[i] -= lr_t * g[i];
    } else {
      const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
      for (std::size_t i = 0; i < slots.size(); ++i) {
        m1[i] = cfg.adam_beta1 * m1[i] + (1.0 - cfg.adam_beta1) * g[i];
        m2[i] = cfg.adam_beta2 * m2[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
        const double mhat = m1[i] / c1;
        const double vhat = m2[i] / c2;
        *slots[i] -= lr_t * mhat / (std::sqrt(vhat) + cfg.adam_eps);
      }
    }
  }

  if (report.loss_history.empty()) {
    // No iteration was costed: zero iterations requested, or the very first
    // evaluation was already non-finite.
    best = p.model;
    report.best_iteration = 0;
    if (!report.aborted_non_finite) report.best_loss = loss(p);
  }

  FitProblem final_problem = p;
  final_problem.model = best;
  for (std::size_t l = 0; l < best.layers.size(); ++l) {
    const DenseTensor w = synth_natural_weight(best.basis, best.layers[l]);
    report.layer_rel_errors.push_back(relative_error(w, p.targets[l]));
  }
  if (cfg.grad_check) {
    report.grad_check_max_rel =
        fd_check(final_problem, 1e-5, cfg.grad_check_samples, cfg.seed);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(best), std::move(report)};
}

}  // namespace tbasis
