#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using verbose::Rng;
using verbose::Shape;
using verbose::Tensor;

namespace testing_oracles {

float fd_max_rel_error(const std::function<Tensor()>& forward, Tensor leaf,
                       float h) {
  leaf.zero_grad();
  Tensor loss = forward();
  verbose::backward(loss);
  const std::vector<float> ad = leaf.grad();

  const int n = leaf.numel();
  std::vector<float> fd(n);
  for (int i = 0; i < n; ++i) {
    const float saved = leaf.data()[i];
    leaf.data()[i] = saved - h;
    const float f_minus = forward().item();
    leaf.data()[i] = saved + h;
    const float f_plus = forward().item();
    leaf.data()[i] = saved;
    fd[i] = (f_plus - f_minus) / (2.f * h);
  }

  float scale = 1e-4f;
  for (int i = 0; i < n; ++i) {
    scale = std::max({scale, std::abs(ad[i]), std::abs(fd[i])});
  }
  float worst = 0.f;
  for (int i = 0; i < n; ++i) {
    worst = std::max(worst, std::abs(ad[i] - fd[i]) / scale);
  }
  return worst;
}

double nuclear_norm_gram_oracle(const float* a, int rows, int cols) {
  // G = A^T A, symmetric cols x cols
  std::vector<double> g(static_cast<size_t>(cols) * cols, 0.0);
  for (int i = 0; i < cols; ++i) {
    for (int j = i; j < cols; ++j) {
      double acc = 0.0;
      for (int r = 0; r < rows; ++r) {
        acc += static_cast<double>(a[r * cols + i]) * a[r * cols + j];
      }
      g[i * cols + j] = acc;
      g[j * cols + i] = acc;
    }
  }

  // cyclic two-sided Jacobi eigenvalue iteration
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < cols - 1; ++p) {
      for (int q = p + 1; q < cols; ++q) {
        off += 2.0 * g[p * cols + q] * g[p * cols + q];
        const double gpq = g[p * cols + q];
        if (gpq == 0.0) continue;
        const double tau = (g[q * cols + q] - g[p * cols + p]) / (2.0 * gpq);
        const double t =
            (tau >= 0.0 ? 1.0 : -1.0) /
            (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int k = 0; k < cols; ++k) {
          const double gkp = g[k * cols + p];
          const double gkq = g[k * cols + q];
          g[k * cols + p] = c * gkp - s * gkq;
          g[k * cols + q] = s * gkp + c * gkq;
        }
        for (int k = 0; k < cols; ++k) {
          const double gpk = g[p * cols + k];
          const double gqk = g[q * cols + k];
          g[p * cols + k] = c * gpk - s * gqk;
          g[q * cols + k] = s * gpk + c * gqk;
        }
      }
    }
    if (off < 1e-22) break;
  }

  double nuclear = 0.0;
  for (int i = 0; i < cols; ++i) {
    nuclear += std::sqrt(std::max(g[i * cols + i], 0.0));
  }
  return nuclear;
}

double entropy_oracle(const std::vector<float>& dist) {
  double h = 0.0;
  for (float f : dist) {
    if (f > 0.f) h -= static_cast<double>(f) * std::log(static_cast<double>(f));
  }
  return h;
}

Tensor random_tensor(Shape shape, Rng& rng, float lo, float hi) {
  std::vector<float> data(verbose::shape_numel(shape));
  for (float& x : data) x = rng.uniform_f(lo, hi);
  return Tensor(std::move(shape), std::move(data));
}

Tensor random_tensor_away_from_zero(Shape shape, Rng& rng, float min_abs,
                                    float max_abs) {
  std::vector<float> data(verbose::shape_numel(shape));
  for (float& x : data) {
    const float mag = rng.uniform_f(min_abs, max_abs);
    x = rng.uniform() < 0.5 ? -mag : mag;
  }
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace testing_oracles
