#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tbasis/basis.hpp"
#include "tbasis/rng.hpp"

using namespace tbasis;

namespace {

LayerParams make_params(const LayerPlan& plan, const TBasis& basis, std::uint64_t seed) {
  LayerParams p;
  p.plan = plan;
  p.alpha = oracles::random_tensor({plan.core_count, basis.basis_size}, seed);
  p.theta = oracles::random_tensor({plan.core_count, basis.rank}, seed + 1, 0.3);
  return p;
}

LayerPlan conv_plan(std::size_t c, std::size_t k, std::size_t n) {
  LayerSpec s;
  s.name = "layer";
  s.kind = LayerKind::conv;
  s.c_out = c;
  s.c_in = c;
  s.kernel = k;
  return plan_layer(s, n);
}

}  // namespace

TEST_CASE("counter rng streams are deterministic and label-split") {
  rng::CounterRng a(rng::derive_seed(1, "x"));
  rng::CounterRng b(rng::derive_seed(1, "x"));
  rng::CounterRng c(rng::derive_seed(1, "y"));
  bool differs = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    differs = differs || (va != c.next_u64());
  }
  CHECK(differs);
}

TEST_CASE("init_tbasis is bit-reproducible and respects the dimension bound") {
  const TBasis a = init_tbasis(6, 3, 9, 42, BasisMode::learned);
  const TBasis b = init_tbasis(6, 3, 9, 42, BasisMode::learned);
  REQUIRE(a.tensors.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.tensors[i].data() == b.tensors[i].data());
  }
  const TBasis other = init_tbasis(6, 3, 9, 43, BasisMode::learned);
  CHECK(a.tensors[0].data() != other.tensors[0].data());

  CHECK_THROWS_AS(init_tbasis(9 * 9 + 1, 3, 9, 1, BasisMode::learned), BadConfig);
  CHECK_THROWS_AS(init_tbasis(0, 3, 9, 1, BasisMode::learned), BadConfig);
}

TEST_CASE("prng basis is a pure function of its seed") {
  const TBasis a = init_tbasis(4, 2, 9, 7, BasisMode::prng);
  const TBasis b = init_tbasis(4, 2, 9, 7, BasisMode::prng);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.tensors[i].data() == b.tensors[i].data());
  // Same seed, same draws in both modes; only the frozen flag differs.
  const TBasis learned = init_tbasis(4, 2, 9, 7, BasisMode::learned);
  CHECK(a.tensors[0].data() == learned.tensors[0].data());
}

TEST_CASE("basis entries hit the target variance 1/(B*R)") {
  // B=8, R=4 -> variance 1/32; at least 1e4 samples via N=100.
  const TBasis basis = init_tbasis(8, 4, 100, 11, BasisMode::learned);
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& t : basis.tensors) {
    for (double v : t.data()) acc += v * v;
    count += t.size();
  }
  REQUIRE(count >= 10000);
  const double var = acc / static_cast<double>(count);
  CHECK(var == doctest::Approx(1.0 / 32.0).epsilon(0.10));
}

TEST_CASE("synth_core examples") {
  const TBasis single = init_tbasis(1, 2, 4, 3, BasisMode::learned);
  const double one[] = {1.0};
  CHECK(synth_core(single, one).data() == single.tensors[0].data());

  const TBasis basis = init_tbasis(3, 2, 4, 5, BasisMode::learned);
  const double zeros[] = {0.0, 0.0, 0.0};
  const DenseTensor zero_core = synth_core(basis, zeros);
  for (double v : zero_core.data()) CHECK(v == 0.0);

  const double coeffs[] = {0.5, -1.25, 2.0};
  const DenseTensor got = synth_core(basis, coeffs);
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double want = 0.5 * basis.tensors[0][i] - 1.25 * basis.tensors[1][i] +
                        2.0 * basis.tensors[2][i];
    CHECK(got[i] == doctest::Approx(want).epsilon(1e-14));
  }

  const double bad[] = {1.0};
  CHECK_THROWS_AS(synth_core(basis, bad), SizeMismatch);
}

TEST_CASE("synth_core is exactly linear in the coefficients") {
  const TBasis basis = init_tbasis(4, 2, 9, 13, BasisMode::learned);
  std::vector<double> row{0.5, -1.0, 2.0, 0.25};
  std::vector<double> row2 = row;
  for (double& v : row2) v *= 2.0;
  DenseTensor want = synth_core(basis, row);
  for (double& v : want.data()) v *= 2.0;
  CHECK(synth_core(basis, row2).data() == want.data());
}

TEST_CASE("one-hot rows with zero theta reproduce the basis tensors exactly") {
  const TBasis basis = init_tbasis(3, 2, 9, 17, BasisMode::learned);
  const LayerPlan plan = conv_plan(9, 3, 3);  // core_count 3
  LayerParams params;
  params.plan = plan;
  params.alpha = DenseTensor(Shape{3, 3});
  params.theta = DenseTensor(Shape{3, 2});
  for (std::size_t k = 0; k < 3; ++k) params.alpha(k, k) = 1.0;
  const TRCores tr = synth_layer(basis, params);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(tr.cores[k].data() == basis.tensors[k].data());
    for (double rho : tr.adapters[k]) CHECK(rho == 1.0);
  }
}

TEST_CASE("zero theta synthesizes the adapter-free reconstruction") {
  const TBasis basis = init_tbasis(4, 2, 4, 19, BasisMode::learned);
  const LayerPlan plan = plan_layer(
      LayerSpec{"lin", LayerKind::linear, 4, 4, 1, 2.0}, 2);
  LayerParams params = make_params(plan, basis, 23);
  for (double& v : params.theta.data()) v = 0.0;
  const TRCores with = synth_layer(basis, params);
  TRCores without = with;
  without.adapters.clear();
  CHECK(tr_reconstruct(with).data() == tr_reconstruct(without).data());
}

TEST_CASE("synth_layer matches brute-force entries at random indices") {
  const TBasis basis = init_tbasis(4, 2, 16, 29, BasisMode::learned);
  const LayerPlan plan = plan_layer(
      LayerSpec{"lin", LayerKind::linear, 64, 64, 1, 2.0}, 4);  // d=3, N=16
  REQUIRE(plan.core_count == 3);
  const LayerParams params = make_params(plan, basis, 31);
  const TRCores tr = synth_layer(basis, params);
  const DenseTensor full = tr_assemble_pairwise(tr);
  rng::CounterRng gen(37);
  for (int s = 0; s < 100; ++s) {
    std::vector<std::size_t> idx(3);
    for (auto& v : idx) v = gen.next_u64() % 16;
    const double want = tr_entry(tr, idx);
    CHECK(full.at(idx) ==
          doctest::Approx(want).epsilon(1e-12).scale(std::abs(want) + 1.0));
  }
}

TEST_CASE("init spec matches the variance formulas") {
  // C_in=16, K=3, gain 2: sigma_l^2 = 2/144; three core slots with n=4.
  LayerSpec s{"c", LayerKind::conv, 16, 16, 3, 2.0};
  const LayerPlan plan = plan_layer(s, 4);
  REQUIRE(plan.core_count == 3);
  const InitSpec spec = init_spec_for(plan, 8, 4);
  CHECK(spec.sigma_basis_sq == doctest::Approx(1.0 / 32.0).epsilon(1e-15));
  CHECK(spec.sigma_layer_sq == doctest::Approx(2.0 / 144.0).epsilon(1e-15));
  CHECK(spec.sigma_alpha_sq == doctest::Approx(0.24028).epsilon(1e-4));

  // Closure: (B * R * sigma_B^2 * sigma_alpha^2)^d == sigma_l^2.
  const double lhs = std::pow(8.0 * 4.0 * spec.sigma_basis_sq * spec.sigma_alpha_sq,
                              static_cast<double>(plan.core_count));
  CHECK(lhs == doctest::Approx(spec.sigma_layer_sq).epsilon(1e-14));
}

TEST_CASE("degenerate single-core layers take the layer variance directly") {
  LayerSpec s{"l", LayerKind::linear, 2, 2, 1, 1.0};
  const LayerPlan plan = plan_layer(s, 2);
  REQUIRE(plan.core_count == 1);
  const InitSpec spec = init_spec_for(plan, 4, 2);
  CHECK(spec.sigma_alpha_sq == doctest::Approx(spec.sigma_layer_sq).epsilon(1e-15));
}

TEST_CASE("variance correction lands on the target for a large layer") {
  // Linear 320x320 with n=2: 102400 cropped entries.
  LayerSpec s{"fc", LayerKind::linear, 320, 320, 1, 1.0};
  const LayerPlan plan = plan_layer(s, 2);
  const TBasis basis = init_tbasis(6, 4, 4, 41, BasisMode::learned);
  const LayerParams params = init_layer_params(plan, basis, 43);
  const DenseTensor w = synth_natural_weight(basis, params);
  REQUIRE(w.size() >= 100000);
  const InitSpec spec = init_spec_for(plan, 6, 4);
  CHECK(empirical_variance(w) ==
        doctest::Approx(spec.sigma_layer_sq).epsilon(0.10));
  for (double v : params.theta.data()) CHECK(v == 0.0);
}

TEST_CASE("initialization is deterministic in the seed") {
  const LayerPlan plan = conv_plan(9, 3, 3);
  const TBasis basis = init_tbasis(4, 2, 9, 47, BasisMode::learned);
  const LayerParams a = init_layer_params(plan, basis, 53);
  const LayerParams b = init_layer_params(plan, basis, 53);
  CHECK(a.alpha.data() == b.alpha.data());
  const LayerParams c = init_layer_params(plan, basis, 54);
  CHECK(a.alpha.data() != c.alpha.data());
}

TEST_CASE("synth_layer validates against the basis") {
  const TBasis basis = init_tbasis(4, 2, 9, 59, BasisMode::learned);
  const LayerPlan plan = conv_plan(4, 2, 2);  // N = 4, mismatched with basis N = 9
  const LayerParams params = make_params(plan, basis, 61);
  CHECK_THROWS_AS(synth_layer(basis, params), SizeMismatch);
}
