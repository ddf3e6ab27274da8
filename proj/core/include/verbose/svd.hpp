#pragma once

#include <vector>

namespace verbose {

// Thin SVD factors of an N x C matrix: a = u * diag(s) * v^T with
// r = min(N, C), u: N x r, v: C x r (both row-major), s non-increasing >= 0.
struct SvdFactors {
  int rows = 0;
  int cols = 0;
  int rank = 0;  // min(rows, cols)
  std::vector<float> u;
  std::vector<float> s;
  std::vector<float> v;

  float nuclear() const;
  // Reconstruction u * diag(s) * v^T, row-major rows x cols.
  std::vector<float> reconstruct() const;
};

// One-sided Jacobi SVD. Internally double precision; capped at 100 sweeps,
// converged when the off-diagonal Frobenius mass of the implicit Gram matrix
// drops below 1e-10 (relative to ||a||_F^2 for badly scaled inputs).
// Throws NumericError if the cap is hit, or on non-finite input.
SvdFactors svd_thin(const float* a, int rows, int cols);

}  // namespace verbose
