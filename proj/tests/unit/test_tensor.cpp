#include <cmath>
#include <cstring>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "verbose/errors.hpp"
#include "verbose/rng.hpp"
#include "verbose/tensor.hpp"

using namespace verbose;
using testing_oracles::fd_max_rel_error;
using testing_oracles::random_tensor;
using testing_oracles::random_tensor_away_from_zero;

namespace {
constexpr float kFdTol = 1e-3f;
constexpr int kInstances = 20;
}  // namespace

TEST_CASE("matmul identity and hand arithmetic") {
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor a({2, 2}, {3, -1, 2, 5});
  Tensor out = matmul(eye, a);
  for (int i = 0; i < 4; ++i) CHECK(out.data()[i] == a.data()[i]);

  Tensor b({2, 2}, {1, 2, 3, 4});
  Tensor ones({2, 1}, {1, 1});
  Tensor prod = matmul(b, ones);
  CHECK(prod.data()[0] == doctest::Approx(3));
  CHECK(prod.data()[1] == doctest::Approx(7));

  CHECK_THROWS_AS(matmul(Tensor({2, 3}, 1.f), Tensor({2, 3}, 1.f)),
                  DimensionError);
}

TEST_CASE("matmul gradient vs finite differences") {
  Rng rng(101);
  for (int inst = 0; inst < kInstances; ++inst) {
    Tensor a = random_tensor({5, 4}, rng);
    Tensor b = random_tensor({4, 3}, rng);
    a.set_requires_grad(true);
    CHECK(fd_max_rel_error([&] { return mean(matmul(a, b)); }, a) < kFdTol);
    a.set_requires_grad(false);
    b.set_requires_grad(true);
    CHECK(fd_max_rel_error([&] { return mean(matmul(a, b)); }, b) < kFdTol);
    b.set_requires_grad(false);
  }
}

TEST_CASE("softmax trivial cases") {
  Tensor z({1, 4}, {0, 0, 0, 0});
  Tensor y = softmax(z);
  for (int i = 0; i < 4; ++i) CHECK(y.data()[i] == doctest::Approx(0.25));

  Tensor extreme({1, 2}, {1000.f, 0.f});
  Tensor ye = softmax(extreme);
  CHECK(std::isfinite(ye.data()[0]));
  CHECK(ye.data()[0] == doctest::Approx(1.0));
  CHECK(ye.data()[1] == doctest::Approx(0.0));
}

TEST_CASE("softmax rows sum to one, entries in (0,1)") {
  Rng rng(77);
  for (int inst = 0; inst < kInstances; ++inst) {
    Tensor z = random_tensor({3, 7}, rng, -4.f, 4.f);
    Tensor y = softmax(z);
    for (int r = 0; r < 3; ++r) {
      double total = 0.0;
      for (int j = 0; j < 7; ++j) {
        const float f = y.data()[r * 7 + j];
        CHECK(f > 0.f);
        CHECK(f < 1.f);
        total += f;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("softmax gradient vs finite differences") {
  Rng rng(78);
  for (int inst = 0; inst < kInstances; ++inst) {
    Tensor z = random_tensor({3, 7}, rng, -2.f, 2.f);
    Tensor w = random_tensor({3, 7}, rng);  // random probe direction
    z.set_requires_grad(true);
    CHECK(fd_max_rel_error([&] { return sum(mul(softmax(z), w)); }, z) < kFdTol);
    z.set_requires_grad(false);
  }
}

TEST_CASE("backward basics") {
  Tensor x = Tensor::leaf({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  backward(sum(x));
  for (int i = 0; i < 6; ++i) CHECK(x.grad()[i] == doctest::Approx(1.0));

  Tensor y = Tensor::leaf({1, 2}, {1, 2}, true);
  backward(sum(mul(y, y)));
  CHECK(y.grad()[0] == doctest::Approx(2.0));
  CHECK(y.grad()[1] == doctest::Approx(4.0));

  Tensor z = Tensor::leaf({2, 2}, {1, 2, 3, 4}, true);
  CHECK_THROWS_AS(backward(add(z, z)), UsageError);
  Tensor nograd({1, 1}, 1.f);
  CHECK_THROWS_AS(backward(nograd), UsageError);
}

TEST_CASE("backward composed net vs finite differences") {
  Rng rng(5);
  for (int inst = 0; inst < kInstances; ++inst) {
    Tensor table = random_tensor({6, 4}, rng);
    Tensor w = random_tensor({4, 5}, rng);
    table.set_requires_grad(true);
    auto net = [&] {
      Tensor e = embedding_lookup(table, 3);
      Tensor logits = matmul(e, w);
      return pick(log(softmax(logits)), 2);
    };
    CHECK(fd_max_rel_error(net, table) < kFdTol);
    table.set_requires_grad(false);
  }
}

TEST_CASE("backward is deterministic bit for bit") {
  Rng rng(9);
  Tensor x = random_tensor({4, 4}, rng);
  Tensor w = random_tensor({4, 4}, rng);
  x.set_requires_grad(true);
  auto run = [&] {
    x.zero_grad();
    backward(sum(mul(softmax(matmul(x, w)), matmul(x, w))));
    return x.grad();
  };
  const std::vector<float> g1 = run();
  const std::vector<float> g2 = run();
  for (size_t i = 0; i < g1.size(); ++i) {
    CHECK(std::memcmp(&g1[i], &g2[i], sizeof(float)) == 0);
  }
}

TEST_CASE("finite-difference suite over every primitive") {
  Rng rng(42);
  // random probe direction keeps |f| small relative to the gradient scale,
  // which is what the float32 central difference needs at h = 1e-3
  auto fd_unary = [&](auto op, Tensor x) {
    Tensor probe = random_tensor(x.shape(), rng);
    x.set_requires_grad(true);
    const float err =
        fd_max_rel_error([&] { return sum(mul(op(x), probe)); }, x);
    x.set_requires_grad(false);
    return err;
  };
  for (int inst = 0; inst < kInstances; ++inst) {
    Tensor a = random_tensor({3, 5}, rng);
    Tensor b = random_tensor({3, 5}, rng);

    CHECK(fd_unary([&](const Tensor& t) { return add(t, b); }, a) < kFdTol);
    CHECK(fd_unary([&](const Tensor& t) { return sub(t, b); }, a) < kFdTol);
    CHECK(fd_unary([&](const Tensor& t) { return mul(t, b); }, a) < kFdTol);
    CHECK(fd_unary([&](const Tensor& t) { return scale(t, 1.7f); }, a) < kFdTol);
    CHECK(fd_unary([](const Tensor& t) { return tanh(t); }, a) < kFdTol);
    CHECK(fd_unary([](const Tensor& t) { return sigmoid(t); }, a) < kFdTol);

    // relu kink and log singularity: inputs bounded away from trouble
    Tensor pos = random_tensor({3, 5}, rng, 0.2f, 2.f);
    Tensor kinked = random_tensor_away_from_zero({3, 5}, rng, 0.05f, 1.f);
    CHECK(fd_unary([](const Tensor& t) { return relu(t); }, kinked) < kFdTol);
    CHECK(fd_unary([](const Tensor& t) { return log(t); }, pos) < kFdTol);

    a.set_requires_grad(true);
    CHECK(fd_max_rel_error([&] { return sum(a); }, a) < kFdTol);
    CHECK(fd_max_rel_error([&] { return mean(a); }, a) < kFdTol);
    CHECK(fd_max_rel_error([&] { return pick(a, 7); }, a) < kFdTol);
    a.set_requires_grad(false);

    // concat_rows
    Tensor r1 = random_tensor({1, 4}, rng);
    Tensor r2 = random_tensor({1, 4}, rng);
    Tensor probe = random_tensor({3, 4}, rng);
    r1.set_requires_grad(true);
    CHECK(fd_max_rel_error(
              [&] { return sum(mul(concat_rows({r1, r2, r1}), probe)); }, r1) <
          kFdTol);
    r1.set_requires_grad(false);

    // embedding_lookup
    Tensor table = random_tensor({5, 4}, rng);
    table.set_requires_grad(true);
    CHECK(fd_max_rel_error([&] { return mean(embedding_lookup(table, 2)); },
                           table) < kFdTol);
    table.set_requires_grad(false);

    // layer_norm wrt input, gamma, beta
    Tensor x = random_tensor({2, 6}, rng);
    Tensor gamma = random_tensor({1, 6}, rng, 0.5f, 1.5f);
    Tensor beta = random_tensor({1, 6}, rng);
    Tensor probe_ln = random_tensor({2, 6}, rng);
    auto ln = [&] { return sum(mul(layer_norm(x, gamma, beta), probe_ln)); };
    x.set_requires_grad(true);
    CHECK(fd_max_rel_error(ln, x) < kFdTol);
    x.set_requires_grad(false);
    gamma.set_requires_grad(true);
    CHECK(fd_max_rel_error(ln, gamma) < kFdTol);
    gamma.set_requires_grad(false);
    beta.set_requires_grad(true);
    CHECK(fd_max_rel_error(ln, beta) < kFdTol);
    beta.set_requires_grad(false);

    // extract_patch
    Tensor img = random_tensor({3, 8, 8}, rng);
    Tensor probe_p = random_tensor({1, 3 * 4 * 4}, rng);
    img.set_requires_grad(true);
    CHECK(fd_max_rel_error(
              [&] { return sum(mul(extract_patch(img, 2, 3, 4), probe_p)); },
              img) < kFdTol);
    img.set_requires_grad(false);

    // kl_uniform on a strictly positive distribution
    Tensor logits = random_tensor({2, 6}, rng, -1.5f, 1.5f);
    logits.set_requires_grad(true);
    CHECK(fd_max_rel_error([&] { return kl_uniform(softmax(logits)); },
                           logits) < kFdTol);
    logits.set_requires_grad(false);
  }
}

TEST_CASE("elementwise op shape checks") {
  Tensor a({2, 2}, 1.f);
  Tensor b({2, 3}, 1.f);
  CHECK_THROWS_AS(add(a, b), DimensionError);
  CHECK_THROWS_AS(mul(a, b), DimensionError);
  CHECK_THROWS_AS(pick(a, 9), DimensionError);
  CHECK_THROWS_AS(embedding_lookup(a, 5), DimensionError);
  CHECK_THROWS_AS(extract_patch(Tensor({3, 8, 8}, 0.f), 6, 6, 4),
                  DimensionError);
}

TEST_CASE("kl_uniform matches entropy identity and handles zeros") {
  Rng rng(11);
  const int v = 6;
  for (int inst = 0; inst < kInstances; ++inst) {
    Tensor z = random_tensor({3, v}, rng, -3.f, 3.f);
    Tensor dist = softmax(z);
    const float got = kl_uniform(dist).item();
    double expected = 0.0;
    for (int r = 0; r < 3; ++r) {
      std::vector<float> row(dist.data() + r * v, dist.data() + (r + 1) * v);
      expected += std::log(static_cast<double>(v)) -
                  testing_oracles::entropy_oracle(row);
    }
    CHECK(got == doctest::Approx(expected).epsilon(1e-5));
  }
  // exact zeros contribute nothing
  Tensor hard({1, 4}, {0.f, 1.f, 0.f, 0.f});
  CHECK(kl_uniform(hard).item() == doctest::Approx(std::log(4.0)));
}
