#include "verbose/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "verbose/errors.hpp"

namespace verbose {

float SvdFactors::nuclear() const {
  double total = 0.0;
  for (float x : s) total += x;
  return static_cast<float>(total);
}

std::vector<float> SvdFactors::reconstruct() const {
  std::vector<float> out(static_cast<size_t>(rows) * cols, 0.f);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < rank; ++k) {
      const double uik_s = static_cast<double>(u[i * rank + k]) * s[k];
      for (int j = 0; j < cols; ++j) {
        out[i * cols + j] += static_cast<float>(uik_s * v[j * rank + k]);
      }
    }
  }
  return out;
}

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kOffMassTol = 1e-10;

// Hestenes one-sided Jacobi on the columns of w (rows x cols, column count
// <= row count is NOT required). v accumulates the right rotations.
// Returns false if the sweep cap is hit before convergence.
bool jacobi_columns(std::vector<double>& w, std::vector<double>& v, int rows,
                    int cols) {
  double frob2 = 0.0;
  for (double x : w) frob2 += x * x;
  if (frob2 == 0.0) return true;  // zero matrix: already diagonal
  const double tol = kOffMassTol * std::max(frob2, 1.0);

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off_mass = 0.0;
    for (int p = 0; p < cols - 1; ++p) {
      for (int q = p + 1; q < cols; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < rows; ++i) {
          const double wp = w[i * cols + p];
          const double wq = w[i * cols + q];
          app += wp * wp;
          aqq += wq * wq;
          apq += wp * wq;
        }
        off_mass += 2.0 * apq * apq;
        if (apq == 0.0) continue;

        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;

        for (int i = 0; i < rows; ++i) {
          const double wp = w[i * cols + p];
          const double wq = w[i * cols + q];
          w[i * cols + p] = c * wp - s * wq;
          w[i * cols + q] = s * wp + c * wq;
        }
        for (int j = 0; j < cols; ++j) {
          const double vp = v[j * cols + p];
          const double vq = v[j * cols + q];
          v[j * cols + p] = c * vp - s * vq;
          v[j * cols + q] = s * vp + c * vq;
        }
      }
    }
    if (off_mass < tol) return true;
  }
  return false;
}

SvdFactors svd_tall(const float* a, int rows, int cols) {
  std::vector<double> w(static_cast<size_t>(rows) * cols);
  for (size_t i = 0; i < w.size(); ++i) {
    w[i] = a[i];
    if (!std::isfinite(w[i])) throw NumericError("svd: non-finite input");
  }
  std::vector<double> v(static_cast<size_t>(cols) * cols, 0.0);
  for (int j = 0; j < cols; ++j) v[j * cols + j] = 1.0;

  if (!jacobi_columns(w, v, rows, cols)) {
    throw NumericError("svd: Jacobi did not converge in " +
                       std::to_string(kMaxSweeps) + " sweeps");
  }

  std::vector<double> sigma(cols);
  for (int j = 0; j < cols; ++j) {
    double norm2 = 0.0;
    for (int i = 0; i < rows; ++i) {
      const double x = w[i * cols + j];
      norm2 += x * x;
    }
    sigma[j] = std::sqrt(norm2);
  }

  std::vector<int> order(cols);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return sigma[x] > sigma[y]; });

  SvdFactors f;
  f.rows = rows;
  f.cols = cols;
  f.rank = cols;
  f.u.assign(static_cast<size_t>(rows) * cols, 0.f);
  f.s.resize(cols);
  f.v.assign(static_cast<size_t>(cols) * cols, 0.f);
  for (int k = 0; k < cols; ++k) {
    const int j = order[k];
    f.s[k] = static_cast<float>(sigma[j]);
    if (sigma[j] > 0.0) {
      const double inv = 1.0 / sigma[j];
      for (int i = 0; i < rows; ++i) {
        f.u[i * cols + k] = static_cast<float>(w[i * cols + j] * inv);
      }
    }
    // zero singular value: u column left zero (subgradient convention)
    for (int i = 0; i < cols; ++i) {
      f.v[i * cols + k] = static_cast<float>(v[i * cols + j]);
    }
  }
  return f;
}

}  // namespace

SvdFactors svd_thin(const float* a, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw NumericError("svd: empty matrix");
  if (rows >= cols) return svd_tall(a, rows, cols);

  // Wide matrix: factor the transpose and swap u/v.
  std::vector<float> at(static_cast<size_t>(rows) * cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) at[j * rows + i] = a[i * cols + j];
  }
  SvdFactors ft = svd_tall(at.data(), cols, rows);
  SvdFactors f;
  f.rows = rows;
  f.cols = cols;
  f.rank = ft.rank;
  f.s = ft.s;
  f.u = ft.v;
  f.v = ft.u;
  return f;
}

}  // namespace verbose
