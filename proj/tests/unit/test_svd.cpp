#include <cmath>
#include <cstring>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "verbose/errors.hpp"
#include "verbose/rng.hpp"
#include "verbose/svd.hpp"
#include "verbose/tensor.hpp"

using namespace verbose;
using testing_oracles::fd_max_rel_error;
using testing_oracles::nuclear_norm_gram_oracle;
using testing_oracles::random_tensor;

TEST_CASE("nuclear norm trivial cases") {
  Tensor eye({2, 2}, {1, 0, 0, 1});
  CHECK(nuclear_norm(eye).item() == doctest::Approx(2.0));

  // N identical rows g: rank one, nuclear norm sqrt(N) * ||g||
  Rng rng(3);
  Tensor g = random_tensor({1, 6}, rng);
  double norm2 = 0.0;
  for (int i = 0; i < 6; ++i) norm2 += static_cast<double>(g.data()[i]) * g.data()[i];
  const int n = 5;
  std::vector<float> stacked;
  for (int r = 0; r < n; ++r) {
    stacked.insert(stacked.end(), g.data(), g.data() + 6);
  }
  Tensor mat({n, 6}, stacked);
  CHECK(nuclear_norm(mat).item() ==
        doctest::Approx(std::sqrt(static_cast<double>(n) * norm2)).epsilon(1e-5));
}

TEST_CASE("svd factors reconstruct and are orthonormal") {
  Rng rng(17);
  for (const auto& [rows, cols] : std::vector<std::pair<int, int>>{
           {6, 4}, {4, 6}, {5, 5}, {1, 7}, {7, 1}, {64, 8}}) {
    Tensor a = random_tensor({rows, cols}, rng);
    SvdFactors f = svd_thin(a.data(), rows, cols);
    REQUIRE(f.rank == std::min(rows, cols));

    const std::vector<float> recon = f.reconstruct();
    for (int i = 0; i < rows * cols; ++i) {
      CHECK(std::abs(recon[i] - a.data()[i]) < 1e-4f);
    }
    // non-increasing, non-negative spectrum
    for (int k = 0; k + 1 < f.rank; ++k) CHECK(f.s[k] >= f.s[k + 1]);
    CHECK(f.s[f.rank - 1] >= 0.f);

    // columns of u and v orthonormal within 1e-4
    auto check_orthonormal = [&](const std::vector<float>& m, int nrows) {
      for (int c1 = 0; c1 < f.rank; ++c1) {
        for (int c2 = c1; c2 < f.rank; ++c2) {
          double dot = 0.0;
          for (int r = 0; r < nrows; ++r) {
            dot += static_cast<double>(m[r * f.rank + c1]) * m[r * f.rank + c2];
          }
          CHECK(std::abs(dot - (c1 == c2 ? 1.0 : 0.0)) < 1e-4);
        }
      }
    };
    check_orthonormal(f.u, rows);
    check_orthonormal(f.v, cols);
  }
}

TEST_CASE("nuclear norm agrees with the Gram-matrix Jacobi oracle") {
  Rng rng(23);
  for (int inst = 0; inst < 100; ++inst) {
    const int rows = 1 + static_cast<int>(rng.uniform_int(8));
    const int cols = 1 + static_cast<int>(rng.uniform_int(8));
    Tensor a = random_tensor({rows, cols}, rng, -2.f, 2.f);
    const double oracle = nuclear_norm_gram_oracle(a.data(), rows, cols);
    const double lib = nuclear_norm(a).item();
    CHECK(std::abs(lib - oracle) < 1e-5 * std::max(1.0, oracle));
  }
}

TEST_CASE("nuclear norm equals SvdFactors sum and dominates Frobenius bound") {
  Rng rng(29);
  for (int inst = 0; inst < 20; ++inst) {
    const int rows = 2 + static_cast<int>(rng.uniform_int(7));
    const int cols = 2 + static_cast<int>(rng.uniform_int(7));
    Tensor a = random_tensor({rows, cols}, rng);
    SvdFactors f = svd_thin(a.data(), rows, cols);
    const float lib = nuclear_norm(a).item();
    CHECK(std::abs(lib - f.nuclear()) < 1e-5f * std::max(1.f, f.nuclear()));

    double frob2 = 0.0;
    for (int i = 0; i < rows * cols; ++i) {
      frob2 += static_cast<double>(a.data()[i]) * a.data()[i];
    }
    const double frob = std::sqrt(frob2);
    CHECK(lib >= frob / std::sqrt(static_cast<double>(std::min(rows, cols))) -
                     1e-5);
    CHECK(lib >= f.s[0] - 1e-5f);  // dominates the spectral radius
  }
}

TEST_CASE("nuclear norm gradient u v^T vs finite differences") {
  Rng rng(31);
  for (int inst = 0; inst < 20; ++inst) {
    Tensor a = random_tensor({5, 4}, rng, -2.f, 2.f);  // full rank a.s.
    a.set_requires_grad(true);
    CHECK(fd_max_rel_error([&] { return nuclear_norm(a); }, a) < 1e-3f);
    a.set_requires_grad(false);
  }
}

TEST_CASE("svd rejects garbage") {
  std::vector<float> bad = {1.f, std::nanf(""), 0.f, 1.f};
  CHECK_THROWS_AS(svd_thin(bad.data(), 2, 2), NumericError);
}
