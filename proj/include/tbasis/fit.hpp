#pragma once

#include <cstdint>
#include <vector>

#include "tbasis/basis.hpp"

namespace tbasis {

/// Fitting problem: approximate each target tensor (natural layer shape) by
/// the cropped synthesis of the corresponding layer, with an optional squared
/// Frobenius penalty on the synthesized weights:
///   J = sum_l ||crop(synth_l) - T_l||_F^2 + reg * sum_l ||crop(synth_l)||_F^2.
struct FitProblem {
  Model model;
  std::vector<DenseTensor> targets;  // one per model layer, natural shape
  double reg_weight = 3e-4;
};

/// Gradients of J with respect to every free parameter. The basis block is
/// identically zero when the basis mode is prng (frozen basis).
struct ModelGrad {
  std::vector<DenseTensor> basis;
  std::vector<DenseTensor> alpha;
  std::vector<DenseTensor> theta;
};

double loss(const FitProblem& p);

ModelGrad grad(const FitProblem& p);

// Max over `samples` sampled free coordinates of
//   |analytic - central difference| / max(|analytic|, 1e-12).
double fd_check(const FitProblem& p, double eps, std::size_t samples, std::uint64_t seed);

enum class OptimizerKind { sgd, adam };

struct FitConfig {
  OptimizerKind optimizer = OptimizerKind::adam;
  double lr = 3e-3;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::size_t warmup_steps = 2000;  // linear LR warm-up
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool grad_check = false;
  std::size_t grad_check_samples = 20;
};

struct FitReport {
  std::vector<double> loss_history;      // loss at the start of each iteration
  std::vector<double> layer_rel_errors;  // of the returned model vs targets
  double best_loss = 0.0;
  std::size_t best_iteration = 0;
  bool aborted_non_finite = false;
  double grad_check_max_rel = -1.0;  // -1 when the check was not run
  double wall_seconds = 0.0;
};

// Deterministic for a fixed (problem, config); returns the best-loss model
// encountered. A non-finite loss aborts with the last finite best model.
std::pair<Model, FitReport> fit(const FitProblem& p, const FitConfig& cfg);

// Number of free scalar parameters (basis excluded in prng mode).
std::size_t free_parameter_count(const Model& m);

}  // namespace tbasis
