#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tbasis/dense_tensor.hpp"

using namespace tbasis;

TEST_CASE("reshape relabels row-major data") {
  DenseTensor t(Shape{4, 6});
  for (std::size_t i = 0; i < 24; ++i) t[i] = static_cast<double>(i);

  const DenseTensor r = reshape(t, {2, 2, 6});
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(r(i / 2, i % 2, j) == t(i, j));
    }
  }

  const DenseTensor flat = reshape(DenseTensor(Shape{2, 3}, {1, 2, 3, 4, 5, 6}), {6});
  for (std::size_t i = 0; i < 6; ++i) CHECK(flat[i] == static_cast<double>(i + 1));

  CHECK_THROWS_AS(reshape(DenseTensor(Shape{2, 3}), {4}), SizeMismatch);
}

TEST_CASE("reshape preserves frobenius exactly") {
  const DenseTensor t = oracles::random_tensor({3, 4, 5}, 11);
  CHECK(frobenius(reshape(t, {60})) == frobenius(t));
  CHECK(frobenius(reshape(t, {12, 5})) == frobenius(t));
}

TEST_CASE("permute identity and transpose") {
  const DenseTensor t = oracles::random_tensor({2, 3}, 7);
  const std::size_t id[] = {0, 1};
  CHECK(permute(t, id).data() == t.data());

  const std::size_t swap[] = {1, 0};
  const DenseTensor s = permute(t, swap);
  CHECK(s.shape() == Shape{3, 2});
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(s(j, i) == t(i, j));
  }
}

TEST_CASE("permute matches the index-loop oracle on all entries") {
  const DenseTensor t = oracles::random_tensor({2, 3, 4}, 13);
  const std::vector<std::size_t> perm{2, 0, 1};  // 1-based (3,1,2)
  const DenseTensor got = permute(t, perm);
  const DenseTensor want = oracles::naive_permute(t, perm);
  CHECK(got.shape() == Shape{4, 2, 3});
  REQUIRE(got.size() == 24);
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
}

TEST_CASE("permute composed with its inverse is the identity, bitwise") {
  const DenseTensor t = oracles::random_tensor({2, 5, 3, 4}, 17);
  const std::vector<std::size_t> perm{3, 1, 0, 2};
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = k;
  CHECK(permute(permute(t, perm), inv).data() == t.data());
}

TEST_CASE("permute rejects non-bijections") {
  const DenseTensor t = oracles::random_tensor({2, 3}, 3);
  CHECK_THROWS_AS(permute(t, std::vector<std::size_t>{0, 0}), BadPermutation);
  CHECK_THROWS_AS(permute(t, std::vector<std::size_t>{0}), BadPermutation);
  CHECK_THROWS_AS(permute(t, std::vector<std::size_t>{0, 2}), BadPermutation);
}

TEST_CASE("contract as matrix-vector product") {
  const DenseTensor m(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  const DenseTensor v(Shape{3}, {1, 0, 2});
  const DenseTensor y = contract(m, v, {{1, 0}});
  CHECK(y.shape() == Shape{2});
  CHECK(y[0] == doctest::Approx(7.0).epsilon(1e-14));
  CHECK(y[1] == doctest::Approx(16.0).epsilon(1e-14));
}

TEST_CASE("contract with a unit scalar over no axes is the identity on values") {
  const DenseTensor t = oracles::random_tensor({2, 2}, 5);
  const DenseTensor one(Shape{1}, {1.0});
  const DenseTensor out = contract(t, one, {});
  CHECK(out.shape() == Shape{2, 2, 1});
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(out[i] == t[i]);
}

TEST_CASE("contract matches the triple-loop oracle") {
  const DenseTensor a = oracles::random_tensor({2, 3, 2}, 19);
  const DenseTensor b = oracles::random_tensor({2, 4, 2}, 23);
  const DenseTensor got = contract(a, b, {{2, 0}});
  const DenseTensor want = oracles::naive_contract(a, b, {{2, 0}});
  CHECK(got.shape() == want.shape());
  CHECK(relative_error(got, want) <= 1e-12);
}

TEST_CASE("contract agrees with the nested-loop oracle on random shapes") {
  struct Case {
    Shape a, b;
    AxisPairs axes;
  };
  const Case cases[] = {
      {{4, 5}, {5, 6}, {{1, 0}}},
      {{2, 3, 4}, {4, 3}, {{2, 0}, {1, 1}}},
      {{6}, {6}, {{0, 0}}},
      {{2, 2, 2, 2}, {2, 2, 2}, {{0, 2}, {3, 0}}},
      {{3, 7}, {2, 4}, {}},
      {{8, 1, 5}, {5, 8}, {{0, 1}, {2, 0}}},
  };
  std::uint64_t seed = 100;
  for (const auto& c : cases) {
    const DenseTensor a = oracles::random_tensor(c.a, seed++);
    const DenseTensor b = oracles::random_tensor(c.b, seed++);
    const DenseTensor got = contract(a, b, c.axes);
    const DenseTensor want = oracles::naive_contract(a, b, c.axes);
    REQUIRE(got.shape() == want.shape());
    CHECK(relative_error(got, want) <= 1e-12);
  }
}

TEST_CASE("contract is bilinear") {
  const DenseTensor a = oracles::random_tensor({3, 4}, 31);
  const DenseTensor b = oracles::random_tensor({4, 2}, 37);
  DenseTensor a2 = a;
  for (double& v : a2.data()) v *= 2.5;
  DenseTensor want = contract(a, b, {{1, 0}});
  for (double& v : want.data()) v *= 2.5;
  CHECK(relative_error(contract(a2, b, {{1, 0}}), want) <= 1e-12);
}

TEST_CASE("contract validates paired modes") {
  const DenseTensor a = oracles::random_tensor({2, 3}, 41);
  const DenseTensor b = oracles::random_tensor({4, 2}, 43);
  CHECK_THROWS_AS(contract(a, b, {{1, 0}}), SizeMismatch);
  CHECK_THROWS_AS(contract(a, b, {{5, 0}}), IndexOutOfRange);
  CHECK_THROWS_AS(contract(a, b, {{0, 1}, {0, 1}}), BadConfig);
}

TEST_CASE("contract tallies one multiply-add per product term") {
  const DenseTensor a = oracles::random_tensor({3, 4}, 47);
  const DenseTensor b = oracles::random_tensor({4, 5}, 53);
  OpCounter counter;
  contract(a, b, {{1, 0}}, &counter);
  CHECK(counter.multiply_adds == 3 * 4 * 5);
}

TEST_CASE("frobenius examples") {
  CHECK(frobenius(DenseTensor(Shape{3, 2})) == 0.0);
  CHECK(frobenius(DenseTensor(Shape{1}, {3.0})) == 3.0);
  CHECK(frobenius(DenseTensor(Shape{2, 2}, {1, 2, 3, 4})) ==
        doctest::Approx(std::sqrt(30.0)).epsilon(1e-15));
}

TEST_CASE("index access is bounds-checked") {
  DenseTensor t(Shape{2, 3});
  CHECK_THROWS_AS(t(2, 0), IndexOutOfRange);
  CHECK_THROWS_AS(t(0, 3), IndexOutOfRange);
  CHECK_THROWS_AS(t(0, 0, 0), IndexOutOfRange);
}
