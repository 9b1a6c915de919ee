#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "tbasis/conv_ops.hpp"

using namespace tbasis;

namespace {

struct TestLayer {
  TBasis basis;
  LayerParams params;
};

TestLayer random_layer(LayerKind kind, std::size_t c_out, std::size_t c_in,
                       std::size_t kernel, std::size_t n, std::size_t basis_size,
                       std::size_t rank, std::uint64_t seed) {
  LayerSpec spec;
  spec.name = "layer";
  spec.kind = kind;
  spec.c_out = c_out;
  spec.c_in = c_in;
  spec.kernel = kernel;
  TestLayer out;
  out.basis = init_tbasis(basis_size, rank, n * n, seed, BasisMode::learned);
  out.params.plan = plan_layer(spec, n);
  out.params.alpha =
      oracles::random_tensor({out.params.plan.core_count, basis_size}, seed + 1, 0.6);
  out.params.theta =
      oracles::random_tensor({out.params.plan.core_count, rank}, seed + 2, 0.3);
  return out;
}

}  // namespace

TEST_CASE("1x1 identity kernel passes the input through") {
  DenseTensor w(Shape{3, 3, 1, 1});
  for (std::size_t i = 0; i < 3; ++i) w(i, i, 0, 0) = 1.0;
  const DenseTensor x = oracles::random_tensor({4, 5, 3}, 7);
  const DenseTensor y = conv2d_reference(x, w);
  CHECK(y.shape() == x.shape());
  CHECK(relative_error(y, x) <= 1e-15);
}

TEST_CASE("all-ones 3x3 kernel box-sums a flat input") {
  const DenseTensor x(Shape{5, 5, 1}, std::vector<double>(25, 1.0));
  const DenseTensor w(Shape{1, 1, 3, 3}, std::vector<double>(9, 1.0));
  const DenseTensor y = conv2d_reference(x, w);
  CHECK(y.shape() == Shape{3, 3, 1});
  for (double v : y.data()) CHECK(v == doctest::Approx(9.0).epsilon(1e-15));
}

TEST_CASE("reference convolution matches the naive loop oracle") {
  const DenseTensor x = oracles::random_tensor({6, 6, 4}, 11);
  const DenseTensor w = oracles::random_tensor({3, 4, 3, 3}, 13);
  const DenseTensor y = conv2d_reference(x, w);
  CHECK(y.shape() == Shape{4, 4, 3});
  CHECK(relative_error(y, oracles::naive_conv(x, w)) <= 1e-12);
}

TEST_CASE("reference convolution validates shapes") {
  CHECK_THROWS_AS(conv2d_reference(DenseTensor(Shape{4, 4}), DenseTensor(Shape{1, 1, 3, 3})),
                  ShapeMismatch);
  CHECK_THROWS_AS(
      conv2d_reference(DenseTensor(Shape{4, 4, 2}), DenseTensor(Shape{1, 3, 3, 3})),
      ShapeMismatch);
  CHECK_THROWS_AS(
      conv2d_reference(DenseTensor(Shape{2, 2, 1}), DenseTensor(Shape{1, 1, 3, 3})),
      ShapeMismatch);
}

TEST_CASE("rank-1 single-basis model reduces to an explicit rank-1 weight") {
  const TestLayer tl = random_layer(LayerKind::conv, 3, 3, 3, 3, 1, 1, 17);
  const DenseTensor x = oracles::random_tensor({5, 5, 3}, 19);
  const DenseTensor w = decompress_weight(tl.basis, tl.params);
  const DenseTensor want = conv2d_reference(x, w);
  CHECK(relative_error(conv2d_decompress(x, tl.basis, tl.params), want) <= 1e-15);
  CHECK(relative_error(conv2d_direct(x, tl.basis, tl.params), want) <= 1e-9);
}

TEST_CASE("decompress path equals reference on the explicit weight") {
  const TestLayer tl = random_layer(LayerKind::conv, 16, 16, 3, 3, 4, 2, 23);
  const DenseTensor x = oracles::random_tensor({6, 6, 16}, 29);
  const DenseTensor w = decompress_weight(tl.basis, tl.params);
  CHECK(relative_error(conv2d_decompress(x, tl.basis, tl.params),
                       conv2d_reference(x, w)) <= 1e-12);
}

TEST_CASE("padded channels cannot leak into valid outputs") {
  // 20 -> 50 with n=5: envelope channels 125/125, most of them padding.
  const TestLayer tl = random_layer(LayerKind::conv, 50, 20, 5, 5, 3, 2, 31);
  const DenseTensor x = oracles::random_tensor({7, 7, 20}, 37);
  const DenseTensor y_dec = conv2d_decompress(x, tl.basis, tl.params);
  const DenseTensor y_dir = conv2d_direct(x, tl.basis, tl.params);
  CHECK(y_dec.shape() == Shape{3, 3, 50});
  CHECK(y_dir.shape() == Shape{3, 3, 50});
  CHECK(relative_error(y_dir, y_dec) <= 1e-9);
}

TEST_CASE("two-core ring: d=1 with K=n") {
  const TestLayer tl = random_layer(LayerKind::conv, 3, 3, 3, 3, 2, 2, 41);
  REQUIRE(tl.params.plan.core_count == 2);
  const DenseTensor x = oracles::random_tensor({5, 5, 3}, 43);
  CHECK(relative_error(conv2d_direct(x, tl.basis, tl.params),
                       conv2d_decompress(x, tl.basis, tl.params)) <= 1e-9);
}

TEST_CASE("identity adapters do not change the direct path") {
  TestLayer tl = random_layer(LayerKind::conv, 9, 9, 3, 3, 4, 2, 47);
  for (double& v : tl.params.theta.data()) v = 0.0;
  const DenseTensor x = oracles::random_tensor({6, 6, 9}, 53);
  const DenseTensor y = conv2d_direct(x, tl.basis, tl.params);
  // exp(0) = 1, so folding is multiplication by 1.0: bitwise no-op.
  TRCores tr = synth_layer(tl.basis, tl.params);
  tr.adapters.clear();
  const DenseTensor w =
      crop_from_envelope(untensorize(tr_assemble_pairwise(tr), tl.params.plan),
                         tl.params.plan);
  CHECK(relative_error(y, conv2d_reference(x, w)) <= 1e-12);
}

TEST_CASE("big padded direct case agrees with decompression") {
  const TestLayer tl = random_layer(LayerKind::conv, 64, 64, 3, 3, 4, 4, 59);
  REQUIRE(tl.params.plan.depth == 4);
  const DenseTensor x = oracles::random_tensor({8, 8, 64}, 61);
  const DenseTensor a = conv2d_direct(x, tl.basis, tl.params);
  const DenseTensor b = conv2d_decompress(x, tl.basis, tl.params);
  CHECK(relative_error(a, b) <= 1e-9);
}

TEST_CASE("linear layers run as 1x1 maps through both paths") {
  const TestLayer tl = random_layer(LayerKind::linear, 20, 12, 1, 3, 4, 2, 67);
  const DenseTensor x = oracles::random_tensor({4, 3, 12}, 71);
  const DenseTensor a = conv2d_direct(x, tl.basis, tl.params);
  const DenseTensor b = conv2d_decompress(x, tl.basis, tl.params);
  CHECK(a.shape() == Shape{4, 3, 20});
  CHECK(relative_error(a, b) <= 1e-9);
}

TEST_CASE("all paths are linear in the input") {
  const TestLayer tl = random_layer(LayerKind::conv, 9, 9, 3, 3, 4, 2, 73);
  const DenseTensor x1 = oracles::random_tensor({5, 5, 9}, 79);
  const DenseTensor x2 = oracles::random_tensor({5, 5, 9}, 83);
  DenseTensor mix(Shape{5, 5, 9});
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.0 * x1[i] - 0.5 * x2[i];

  auto check_linear = [&](auto&& evaluate) {
    const DenseTensor y1 = evaluate(x1);
    const DenseTensor y2 = evaluate(x2);
    DenseTensor want(y1.shape());
    for (std::size_t i = 0; i < want.size(); ++i) want[i] = 2.0 * y1[i] - 0.5 * y2[i];
    CHECK(relative_error(evaluate(mix), want) <= 1e-10);
  };
  check_linear([&](const DenseTensor& x) { return conv2d_direct(x, tl.basis, tl.params); });
  check_linear(
      [&](const DenseTensor& x) { return conv2d_decompress(x, tl.basis, tl.params); });
  const DenseTensor w = decompress_weight(tl.basis, tl.params);
  check_linear([&](const DenseTensor& x) { return conv2d_reference(x, w); });
}

TEST_CASE("zero input maps to zero output on every path") {
  const TestLayer tl = random_layer(LayerKind::conv, 9, 9, 3, 3, 4, 2, 89);
  const DenseTensor x(Shape{5, 5, 9});
  const DenseTensor y_direct = conv2d_direct(x, tl.basis, tl.params);
  const DenseTensor y_dec = conv2d_decompress(x, tl.basis, tl.params);
  for (double v : y_direct.data()) CHECK(v == 0.0);
  for (double v : y_dec.data()) CHECK(v == 0.0);
}

TEST_CASE("reference flop count follows the closed form") {
  const DenseTensor x = oracles::random_tensor({6, 6, 4}, 97);
  const DenseTensor w = oracles::random_tensor({3, 4, 3, 3}, 101);
  OpCounter counter;
  conv2d_reference(x, w, &counter);
  CHECK(counter.multiply_adds == 1728);  // 4*4*3*4*9

  ConvDims dims;
  dims.width = 6;
  dims.height = 6;
  dims.c_in = 4;
  dims.c_out = 3;
  dims.kernel = 3;
  const OpCount predicted = flops(ConvPath::reference, dims);
  CHECK(predicted.multiply_adds == 1728);
  CHECK(predicted.path == ConvPath::reference);
}

TEST_CASE("instrumented counters equal the predictors on both model paths") {
  struct Case {
    LayerKind kind;
    std::size_t c_out, c_in, kernel, n, basis, rank, side;
  };
  const Case cases[] = {
      {LayerKind::conv, 3, 3, 3, 3, 2, 2, 5},     // d=1 minimal ring
      {LayerKind::conv, 9, 9, 3, 3, 4, 2, 6},
      {LayerKind::conv, 16, 8, 3, 3, 4, 3, 7},
      {LayerKind::conv, 50, 20, 5, 5, 3, 2, 8},
      {LayerKind::conv, 27, 27, 3, 3, 8, 4, 6},
      {LayerKind::linear, 20, 12, 1, 3, 4, 2, 4},
      {LayerKind::linear, 9, 9, 1, 3, 2, 5, 3},
  };
  std::uint64_t seed = 500;
  for (const auto& c : cases) {
    const TestLayer tl =
        random_layer(c.kind, c.c_out, c.c_in, c.kernel, c.n, c.basis, c.rank, seed++);
    const DenseTensor x = oracles::random_tensor({c.side, c.side, c.c_in}, seed++);
    const ConvDims dims = conv_dims(tl.params.plan, c.side, c.side, c.rank);

    OpCounter direct_count;
    conv2d_direct(x, tl.basis, tl.params, &direct_count);
    CHECK(direct_count.multiply_adds == flops(ConvPath::direct, dims).multiply_adds);

    OpCounter dec_count;
    conv2d_decompress(x, tl.basis, tl.params, &dec_count);
    CHECK(dec_count.multiply_adds == flops(ConvPath::decompress, dims).multiply_adds);
  }
}

TEST_CASE("channel mismatches are rejected") {
  const TestLayer tl = random_layer(LayerKind::conv, 9, 9, 3, 3, 4, 2, 103);
  const DenseTensor x = oracles::random_tensor({5, 5, 8}, 107);
  CHECK_THROWS_AS(conv2d_direct(x, tl.basis, tl.params), ShapeMismatch);
  CHECK_THROWS_AS(conv2d_decompress(x, tl.basis, tl.params), ShapeMismatch);
}
