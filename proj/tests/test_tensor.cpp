#include <doctest.h>

#include <cmath>

#include "knowsite/tensor.hpp"

using namespace knowsite;
using namespace knowsite::num;

TEST_CASE("matmul identity") {
  auto i2 = Tensor::eye(2);
  auto a = Tensor::from({2, 2}, {1, 2, 3, 4});
  auto c = matmul(i2, a);
  CHECK(c.value() == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("matmul hand product") {
  auto a = Tensor::from({1, 2}, {1, 2});
  auto b = Tensor::from({2, 1}, {3, 4});
  auto c = matmul(a, b);
  CHECK(c.item() == doctest::Approx(11.0).epsilon(1e-15));
}

TEST_CASE("matmul matches triple-loop oracle") {
  Rng rng(7);
  const int64_t m = 5, k = 7, n = 3;
  auto a = Tensor::uniform({m, k}, -1, 1, rng);
  auto b = Tensor::uniform({k, n}, -1, 1, rng);
  auto c = matmul(a, b);
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      double want = 0;
      for (int64_t p = 0; p < k; ++p) want += a.at(i, p) * b.at(p, j);
      CHECK(std::abs(c.at(i, j) - want) < 1e-12);
    }
  }
}

TEST_CASE("matmul shape mismatch throws") {
  auto a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  auto b = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK_THROWS_AS((void)matmul(a, b), DimensionError);
}

TEST_CASE("softmax symmetry") {
  auto x = Tensor::from({2}, {0, 0});
  auto s = softmax(x);
  CHECK(s.at(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.at(1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("softmax stability under large inputs") {
  auto x = Tensor::from({2}, {1000, 0});
  auto s = softmax(x);
  CHECK(std::isfinite(s.at(0)));
  CHECK(s.at(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.at(1) < 1e-300);
}

TEST_CASE("softmax hand values") {
  auto s = softmax(Tensor::from({3}, {1, 2, 3}));
  CHECK(s.at(0) == doctest::Approx(0.09003057).epsilon(1e-6));
  CHECK(s.at(1) == doctest::Approx(0.24472847).epsilon(1e-6));
  CHECK(s.at(2) == doctest::Approx(0.66524096).epsilon(1e-6));
}

TEST_CASE("softmax empty input throws") {
  CHECK_THROWS_AS((void)Tensor::from({0}, {}), DimensionError);
}

TEST_CASE("softmax rows are probability vectors") {
  Rng rng(11);
  auto x = Tensor::uniform({6, 9}, -20, 20, rng);
  auto s = softmax(x);
  for (int64_t i = 0; i < 6; ++i) {
    double total = 0;
    for (int64_t j = 0; j < 9; ++j) {
      CHECK(s.at(i, j) >= 0.0);
      total += s.at(i, j);
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("backward on sum gives ones") {
  auto x = Tensor::from({3}, {1, 2, 3}, /*requires_grad=*/true);
  backward(sum(x));
  CHECK(x.grad() == std::vector<double>{1, 1, 1});
}

TEST_CASE("backward on dot(x,x)") {
  auto x = Tensor::from({1}, {2}, true);
  backward(dot(x, x));
  CHECK(x.grad()[0] == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("backward requires scalar loss") {
  auto x = Tensor::from({2}, {1, 2}, true);
  auto y = mul(x, x);
  CHECK_THROWS_AS(backward(y), ContractError);
}

TEST_CASE("gradients accumulate until cleared") {
  auto x = Tensor::from({2}, {1, 2}, true);
  backward(sum(x));
  backward(sum(x));
  CHECK(x.grad() == std::vector<double>{2, 2});
  x.clear_grad();
  backward(sum(x));
  CHECK(x.grad() == std::vector<double>{1, 1});
}

TEST_CASE("no_grad suppresses graph recording") {
  auto x = Tensor::from({2}, {1, 2}, true);
  NoGradGuard guard;
  auto y = sum(mul(x, x));
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("bmm matches per-batch matmul") {
  Rng rng(3);
  auto a = Tensor::uniform({4, 2, 3}, -1, 1, rng);
  auto b = Tensor::uniform({4, 3, 5}, -1, 1, rng);
  auto c = bmm(a, b);
  for (int64_t i = 0; i < 4; ++i) {
    for (int64_t r = 0; r < 2; ++r) {
      for (int64_t s = 0; s < 5; ++s) {
        double want = 0;
        for (int64_t p = 0; p < 3; ++p) want += a.at(i, r, p) * b.at(i, p, s);
        CHECK(std::abs(c.at(i, r, s) - want) < 1e-12);
      }
    }
  }
}

TEST_CASE("rotate_compose is a 90 degree rotation") {
  auto hu = Tensor::from({2}, {1, 0});
  auto hr = Tensor::from({2}, {0, 1});
  auto out = rotate_compose(hu, hr);
  CHECK(out.at(0) == doctest::Approx(0.0));
  CHECK(out.at(1) == doctest::Approx(1.0));
}

TEST_CASE("rotate_compose normalizes the relation pair") {
  auto hu = Tensor::from({2}, {2, 0});
  auto hr = Tensor::from({2}, {0, 5});  // same rotation as (0,1)
  auto out = rotate_compose(hu, hr);
  CHECK(out.at(0) == doctest::Approx(0.0));
  CHECK(out.at(1) == doctest::Approx(2.0));
}

TEST_CASE("rotate_compose rejects odd dims") {
  auto hu = Tensor::from({3}, {1, 0, 1});
  auto hr = Tensor::from({3}, {0, 1, 0});
  CHECK_THROWS_AS((void)rotate_compose(hu, hr), DimensionError);
}

TEST_CASE("rotate_compose preserves row norms") {
  Rng rng(17);
  auto hu = Tensor::uniform({5, 8}, -1, 1, rng);
  auto hr = Tensor::uniform({8}, -1, 1, rng);
  auto out = rotate_compose(hu, hr);
  for (int64_t i = 0; i < 5; ++i) {
    double n_in = 0, n_out = 0;
    for (int64_t j = 0; j < 8; ++j) {
      n_in += hu.at(i, j) * hu.at(i, j);
      n_out += out.at(i, j) * out.at(i, j);
    }
    CHECK(std::abs(n_in - n_out) < 1e-12);
  }
}

TEST_CASE("gather and scatter are adjoint index ops") {
  auto m = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  auto g = gather_rows(m, {2, 0, 2});
  CHECK(g.value() == std::vector<double>{5, 6, 1, 2, 5, 6});
  auto s = scatter_add_rows(g, {2, 0, 2}, 3);
  CHECK(s.value() == std::vector<double>{1, 2, 0, 0, 10, 12});
  CHECK_THROWS_AS((void)gather_rows(m, {3}), ContractError);
}

TEST_CASE("dropout zero probability is identity") {
  Rng rng(1);
  auto x = Tensor::from({3}, {1, 2, 3});
  auto y = dropout(x, 0.0, rng);
  CHECK(y.value() == x.value());
}

TEST_CASE("dropout is deterministic under a fixed seed") {
  auto x = Tensor::full({100}, 1.0);
  Rng a(42), b(42);
  auto ya = dropout(x, 0.5, a);
  auto yb = dropout(x, 0.5, b);
  CHECK(ya.value() == yb.value());
  double kept = 0;
  for (double v : ya.value()) kept += v > 0 ? 1 : 0;
  CHECK(kept > 25);
  CHECK(kept < 75);
}

TEST_CASE("seeded tensor construction is reproducible") {
  Rng a(5), b(5);
  auto x = Tensor::normal({4, 4}, 0, 1, a);
  auto y = Tensor::normal({4, 4}, 0, 1, b);
  CHECK(x.value() == y.value());
}

TEST_CASE("log_softmax agrees with log of softmax") {
  Rng rng(9);
  auto x = Tensor::uniform({3, 5}, -3, 3, rng);
  auto a = log_softmax(x);
  auto b = softmax(x);
  for (int64_t i = 0; i < 3; ++i) {
    for (int64_t j = 0; j < 5; ++j) {
      CHECK(a.at(i, j) == doctest::Approx(std::log(b.at(i, j))).epsilon(1e-12));
    }
  }
}

TEST_CASE("leaf mutation is rejected on op outputs") {
  auto x = Tensor::from({2}, {1, 2}, true);
  auto y = add(x, x);
  CHECK_THROWS_AS((void)y.leaf_value(), ContractError);
}
