#include "verbose/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <utility>

#include "verbose/errors.hpp"
#include "verbose/svd.hpp"

namespace verbose {

int shape_numel(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor: rank-0 shape");
  long long n = 1;
  for (int d : shape) {
    if (d <= 0) throw DimensionError("tensor: non-positive dimension");
    n *= d;
  }
  return static_cast<int>(n);
}

void TensorNode::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.f);
}

Tensor::Tensor(Shape shape, float fill) {
  const int n = shape_numel(shape);
  node_ = std::make_shared<TensorNode>();
  node_->shape = std::move(shape);
  node_->data.assign(n, fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) {
  const int n = shape_numel(shape);
  if (n != static_cast<int>(data.size())) {
    throw DimensionError("tensor: data size does not match shape");
  }
  node_ = std::make_shared<TensorNode>();
  node_->shape = std::move(shape);
  node_->data = std::move(data);
}

Tensor Tensor::leaf(Shape shape, std::vector<float> data, bool requires_grad) {
  Tensor t(std::move(shape), std::move(data));
  t.node_->requires_grad = requires_grad;
  return t;
}

const std::vector<float>& Tensor::grad() const {
  if (!node_ || node_->grad.empty()) {
    throw UsageError("tensor: gradient not computed");
  }
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_ && !node_->grad.empty()) {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.f);
  }
}

float Tensor::item() const {
  if (!node_ || node_->data.size() != 1) {
    throw UsageError("tensor: item() requires a scalar");
  }
  return node_->data[0];
}

// Central op factory: the output only joins the graph if some input needs
// gradients; otherwise it is a plain value and the closure is dropped.
Tensor make_op_output(Shape shape, std::vector<float> data,
                      std::vector<Tensor> inputs) {
  Tensor out(std::move(shape), std::move(data));
  bool needs = false;
  for (const Tensor& t : inputs) needs = needs || t.requires_grad();
  if (needs) {
    out.node()->requires_grad = true;
    for (const Tensor& t : inputs) out.node()->parents.push_back(t.node());
  }
  return out;
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  const int n = a.numel();
  std::vector<float> out(n);
  for (int i = 0; i < n; ++i) out[i] = a.data()[i] + b.data()[i];
  auto an = a.node(), bn = b.node();
  Tensor result = make_op_output(a.shape(), std::move(out), {a, b});
  if (result.requires_grad()) {
    auto self = result.node().get();
    result.node()->backward_fn = [self, an, bn, n] {
      if (an->requires_grad) {
        an->ensure_grad();
        for (int i = 0; i < n; ++i) an->grad[i] += self->grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int i = 0; i < n; ++i) bn->grad[i] += self->grad[i];
      }
    };
  }
  return result;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  const int n = a.numel();
  std::vector<float> out(n);
  for (int i = 0; i < n; ++i) out[i] = a.data()[i] - b.data()[i];
  Tensor result = make_op_output(a.shape(), std::move(out), {a, b});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto an = a.node(), bn = b.node();
    result.node()->backward_fn = [self, an, bn, n] {
      if (an->requires_grad) {
        an->ensure_grad();
        for (int i = 0; i < n; ++i) an->grad[i] += self->grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int i = 0; i < n; ++i) bn->grad[i] -= self->grad[i];
      }
    };
  }
  return result;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  const int n = a.numel();
  std::vector<float> out(n);
  for (int i = 0; i < n; ++i) out[i] = a.data()[i] * b.data()[i];
  Tensor result = make_op_output(a.shape(), std::move(out), {a, b});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto an = a.node(), bn = b.node();
    result.node()->backward_fn = [self, an, bn, n] {
      if (an->requires_grad) {
        an->ensure_grad();
        for (int i = 0; i < n; ++i) an->grad[i] += self->grad[i] * bn->data[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int i = 0; i < n; ++i) bn->grad[i] += self->grad[i] * an->data[i];
      }
    };
  }
  return result;
}

Tensor scale(const Tensor& a, float c) {
  const int n = a.numel();
  std::vector<float> out(n);
  for (int i = 0; i < n; ++i) out[i] = a.data()[i] * c;
  Tensor result = make_op_output(a.shape(), std::move(out), {a});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto an = a.node();
    result.node()->backward_fn = [self, an, c, n] {
      an->ensure_grad();
      for (int i = 0; i < n; ++i) an->grad[i] += self->grad[i] * c;
    };
  }
  return result;
}

Tensor tanh(const Tensor& a) {
  const int n = a.numel();
  std::vector<float> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::tanh(a.data()[i]);
  Tensor result = make_op_output(a.shape(), std::move(out), {a});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto an = a.node();
    result.node()->backward_fn = [self, an, n] {
      an->ensure_grad();
      for (int i = 0; i < n; ++i) {
        const float y = self->data[i];
        an->grad[i] += self->grad[i] * (1.f - y * y);
      }
    };
  }
  return result;
}

Tensor relu(const Tensor& a) {
  const int n = a.numel();
  std::vector<float> out(n);
  for (int i = 0; i < n; ++i) out[i] = a.data()[i] > 0.f ? a.data()[i] : 0.f;
  Tensor result = make_op_output(a.shape(), std::move(out), {a});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto an = a.node();
    result.node()->backward_fn = [self, an, n] {
      an->ensure_grad();
      for (int i = 0; i < n; ++i) {
        if (an->data[i] > 0.f) an->grad[i] += self->grad[i];
      }
    };
  }
  return result;
}

Tensor sigmoid(const Tensor& a) {
  const int n = a.numel();
  std::vector<float> out(n);
  for (int i = 0; i < n; ++i) {
    const float x = a.data()[i];
    out[i] = x >= 0.f ? 1.f / (1.f + std::exp(-x))
                      : std::exp(x) / (1.f + std::exp(x));
  }
  Tensor result = make_op_output(a.shape(), std::move(out), {a});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto an = a.node();
    result.node()->backward_fn = [self, an, n] {
      an->ensure_grad();
      for (int i = 0; i < n; ++i) {
        const float y = self->data[i];
        an->grad[i] += self->grad[i] * y * (1.f - y);
      }
    };
  }
  return result;
}

Tensor log(const Tensor& a) {
  const int n = a.numel();
  std::vector<float> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::log(a.data()[i]);
  Tensor result = make_op_output(a.shape(), std::move(out), {a});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto an = a.node();
    result.node()->backward_fn = [self, an, n] {
      an->ensure_grad();
      for (int i = 0; i < n; ++i) {
        an->grad[i] += self->grad[i] / an->data[i];
      }
    };
  }
  return result;
}

Tensor sum(const Tensor& a) {
  const int n = a.numel();
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += a.data()[i];
  Tensor result = make_op_output({1, 1}, {static_cast<float>(total)}, {a});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto an = a.node();
    result.node()->backward_fn = [self, an, n] {
      an->ensure_grad();
      const float g = self->grad[0];
      for (int i = 0; i < n; ++i) an->grad[i] += g;
    };
  }
  return result;
}

Tensor mean(const Tensor& a) {
  const int n = a.numel();
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += a.data()[i];
  Tensor result =
      make_op_output({1, 1}, {static_cast<float>(total / n)}, {a});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto an = a.node();
    result.node()->backward_fn = [self, an, n] {
      an->ensure_grad();
      const float g = self->grad[0] / static_cast<float>(n);
      for (int i = 0; i < n; ++i) an->grad[i] += g;
    };
  }
  return result;
}

Tensor concat_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw UsageError("concat_rows: empty input");
  const int cols = rows[0].numel();
  const int k = static_cast<int>(rows.size());
  std::vector<float> out;
  out.reserve(static_cast<size_t>(k) * cols);
  for (const Tensor& r : rows) {
    if (r.numel() != cols) {
      throw DimensionError("concat_rows: rows differ in length");
    }
    out.insert(out.end(), r.data(), r.data() + cols);
  }
  Tensor result = make_op_output({k, cols}, std::move(out), rows);
  if (result.requires_grad()) {
    auto self = result.node().get();
    std::vector<std::shared_ptr<TensorNode>> parents;
    parents.reserve(rows.size());
    for (const Tensor& r : rows) parents.push_back(r.node());
    result.node()->backward_fn = [self, parents, cols] {
      for (size_t r = 0; r < parents.size(); ++r) {
        if (!parents[r]->requires_grad) continue;
        parents[r]->ensure_grad();
        for (int j = 0; j < cols; ++j) {
          parents[r]->grad[j] += self->grad[r * cols + j];
        }
      }
    };
  }
  return result;
}

Tensor embedding_lookup(const Tensor& table, int id) {
  if (table.shape().size() != 2) {
    throw DimensionError("embedding_lookup: table must be 2-D");
  }
  const int v = table.shape()[0];
  const int d = table.shape()[1];
  if (id < 0 || id >= v) {
    throw DimensionError("embedding_lookup: id out of range");
  }
  std::vector<float> out(table.data() + static_cast<size_t>(id) * d,
                         table.data() + static_cast<size_t>(id + 1) * d);
  Tensor result = make_op_output({1, d}, std::move(out), {table});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto tn = table.node();
    result.node()->backward_fn = [self, tn, id, d] {
      tn->ensure_grad();
      for (int j = 0; j < d; ++j) {
        tn->grad[static_cast<size_t>(id) * d + j] += self->grad[j];
      }
    };
  }
  return result;
}

Tensor pick(const Tensor& a, int index) {
  if (index < 0 || index >= a.numel()) {
    throw DimensionError("pick: index out of range");
  }
  Tensor result = make_op_output({1, 1}, {a.data()[index]}, {a});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto an = a.node();
    result.node()->backward_fn = [self, an, index] {
      an->ensure_grad();
      an->grad[index] += self->grad[0];
    };
  }
  return result;
}

Tensor extract_patch(const Tensor& image, int top, int left, int patch) {
  if (image.shape().size() != 3) {
    throw DimensionError("extract_patch: image must be {C,H,W}");
  }
  const int chans = image.shape()[0];
  const int height = image.shape()[1];
  const int width = image.shape()[2];
  if (patch <= 0 || top < 0 || left < 0 || top + patch > height ||
      left + patch > width) {
    throw DimensionError("extract_patch: window out of bounds");
  }
  std::vector<float> out(static_cast<size_t>(chans) * patch * patch);
  int k = 0;
  for (int c = 0; c < chans; ++c) {
    for (int y = 0; y < patch; ++y) {
      for (int x = 0; x < patch; ++x) {
        out[k++] = image.data()[(c * height + top + y) * width + left + x];
      }
    }
  }
  Tensor result =
      make_op_output({1, chans * patch * patch}, std::move(out), {image});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto in = image.node();
    result.node()->backward_fn = [self, in, top, left, patch, chans, height,
                                  width] {
      in->ensure_grad();
      int k = 0;
      for (int c = 0; c < chans; ++c) {
        for (int y = 0; y < patch; ++y) {
          for (int x = 0; x < patch; ++x) {
            in->grad[(c * height + top + y) * width + left + x] +=
                self->grad[k++];
          }
        }
      }
    };
  }
  return result;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  float eps) {
  const int d = x.shape().back();
  if (gamma.numel() != d || beta.numel() != d) {
    throw DimensionError("layer_norm: gamma/beta must match last dimension");
  }
  const int rows = x.numel() / d;
  std::vector<float> out(x.numel());
  auto xhat = std::make_shared<std::vector<float>>(x.numel());
  auto inv_std = std::make_shared<std::vector<float>>(rows);
  for (int r = 0; r < rows; ++r) {
    const float* xr = x.data() + static_cast<size_t>(r) * d;
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += xr[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = xr[j] - mu;
      var += c * c;
    }
    var /= d;
    const float is = static_cast<float>(1.0 / std::sqrt(var + eps));
    (*inv_std)[r] = is;
    for (int j = 0; j < d; ++j) {
      const float xh = (xr[j] - static_cast<float>(mu)) * is;
      (*xhat)[r * d + j] = xh;
      out[r * d + j] = gamma.data()[j] * xh + beta.data()[j];
    }
  }
  Tensor result =
      make_op_output(x.shape(), std::move(out), {x, gamma, beta});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto xn = x.node(), gn = gamma.node(), bn = beta.node();
    result.node()->backward_fn = [self, xn, gn, bn, xhat, inv_std, rows, d] {
      for (int r = 0; r < rows; ++r) {
        const float* g = self->grad.data() + static_cast<size_t>(r) * d;
        const float* xh = xhat->data() + static_cast<size_t>(r) * d;
        if (gn->requires_grad) {
          gn->ensure_grad();
          for (int j = 0; j < d; ++j) gn->grad[j] += g[j] * xh[j];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (int j = 0; j < d; ++j) bn->grad[j] += g[j];
        }
        if (xn->requires_grad) {
          xn->ensure_grad();
          double mean_gy = 0.0, mean_gy_xh = 0.0;
          for (int j = 0; j < d; ++j) {
            const double gy = static_cast<double>(g[j]) * gn->data[j];
            mean_gy += gy;
            mean_gy_xh += gy * xh[j];
          }
          mean_gy /= d;
          mean_gy_xh /= d;
          for (int j = 0; j < d; ++j) {
            const double gy = static_cast<double>(g[j]) * gn->data[j];
            xn->grad[static_cast<size_t>(r) * d + j] += static_cast<float>(
                (gy - mean_gy - xh[j] * mean_gy_xh) * (*inv_std)[r]);
          }
        }
      }
    };
  }
  return result;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2) {
    throw DimensionError("matmul: operands must be 2-D");
  }
  const int m = a.shape()[0], k = a.shape()[1];
  const int k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) throw DimensionError("matmul: inner dimensions disagree");

  std::vector<float> out(static_cast<size_t>(m) * n, 0.f);
  for (int i = 0; i < m; ++i) {
    const float* ai = a.data() + static_cast<size_t>(i) * k;
    float* oi = out.data() + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const float av = ai[p];
      const float* bp = b.data() + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) oi[j] += av * bp[j];
    }
  }
  Tensor result = make_op_output({m, n}, std::move(out), {a, b});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto an = a.node(), bn = b.node();
    result.node()->backward_fn = [self, an, bn, m, k, n] {
      if (an->requires_grad) {
        an->ensure_grad();  // dA = G * B^T
        for (int i = 0; i < m; ++i) {
          const float* gi = self->grad.data() + static_cast<size_t>(i) * n;
          float* dai = an->grad.data() + static_cast<size_t>(i) * k;
          for (int p = 0; p < k; ++p) {
            const float* bp = bn->data.data() + static_cast<size_t>(p) * n;
            float acc = 0.f;
            for (int j = 0; j < n; ++j) acc += gi[j] * bp[j];
            dai[p] += acc;
          }
        }
      }
      if (bn->requires_grad) {
        bn->ensure_grad();  // dB = A^T * G
        for (int p = 0; p < k; ++p) {
          float* dbp = bn->grad.data() + static_cast<size_t>(p) * n;
          for (int i = 0; i < m; ++i) {
            const float av = an->data[static_cast<size_t>(i) * k + p];
            const float* gi = self->grad.data() + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) dbp[j] += av * gi[j];
          }
        }
      }
    };
  }
  return result;
}

Tensor softmax(const Tensor& z) {
  const int v = z.shape().back();
  const int rows = z.numel() / v;
  std::vector<float> out(z.numel());
  for (int r = 0; r < rows; ++r) {
    const float* zr = z.data() + static_cast<size_t>(r) * v;
    float* yr = out.data() + static_cast<size_t>(r) * v;
    float zmax = zr[0];
    for (int j = 1; j < v; ++j) zmax = std::max(zmax, zr[j]);
    double denom = 0.0;
    for (int j = 0; j < v; ++j) {
      yr[j] = std::exp(zr[j] - zmax);
      denom += yr[j];
    }
    const float inv = static_cast<float>(1.0 / denom);
    for (int j = 0; j < v; ++j) yr[j] *= inv;
  }
  Tensor result = make_op_output(z.shape(), std::move(out), {z});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto zn = z.node();
    result.node()->backward_fn = [self, zn, rows, v] {
      zn->ensure_grad();
      for (int r = 0; r < rows; ++r) {
        const float* y = self->data.data() + static_cast<size_t>(r) * v;
        const float* g = self->grad.data() + static_cast<size_t>(r) * v;
        double dot = 0.0;
        for (int j = 0; j < v; ++j) dot += static_cast<double>(g[j]) * y[j];
        for (int j = 0; j < v; ++j) {
          zn->grad[static_cast<size_t>(r) * v + j] +=
              y[j] * (g[j] - static_cast<float>(dot));
        }
      }
    };
  }
  return result;
}

Tensor nuclear_norm(const Tensor& a) {
  if (a.shape().size() != 2) {
    throw DimensionError("nuclear_norm: input must be 2-D");
  }
  const int rows = a.shape()[0], cols = a.shape()[1];
  auto factors =
      std::make_shared<SvdFactors>(svd_thin(a.data(), rows, cols));
  Tensor result =
      make_op_output({1, 1}, {factors->nuclear()}, {a});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto an = a.node();
    result.node()->backward_fn = [self, an, factors, rows, cols] {
      an->ensure_grad();
      const float g = self->grad[0];
      const int r = factors->rank;
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
          double acc = 0.0;
          for (int k = 0; k < r; ++k) {
            acc += static_cast<double>(factors->u[i * r + k]) *
                   factors->v[j * r + k];
          }
          an->grad[static_cast<size_t>(i) * cols + j] +=
              g * static_cast<float>(acc);
        }
      }
    };
  }
  return result;
}

Tensor kl_uniform(const Tensor& dist) {
  const int v = dist.shape().back();
  const int n = dist.numel();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const float f = dist.data()[i];
    if (f > 0.f) total += static_cast<double>(f) * std::log(static_cast<double>(f) * v);
  }
  Tensor result =
      make_op_output({1, 1}, {static_cast<float>(total)}, {dist});
  if (result.requires_grad()) {
    auto self = result.node().get();
    auto dn = dist.node();
    result.node()->backward_fn = [self, dn, n, v] {
      dn->ensure_grad();
      const float g = self->grad[0];
      for (int i = 0; i < n; ++i) {
        const float f = dn->data[i];
        if (f > 0.f) {
          dn->grad[i] += g * (std::log(f * static_cast<float>(v)) + 1.f);
        }
      }
    };
  }
  return result;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward: loss must be a scalar tensor");
  }
  if (!loss.requires_grad()) {
    throw UsageError("backward: no gradient-requiring leaves reachable");
  }

  // Iterative post-order DFS; each node visited exactly once.
  std::vector<TensorNode*> topo;
  std::unordered_set<TensorNode*> visited;
  struct Frame {
    TensorNode* node;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({loss.node().get(), 0});
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    const Frame f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      stack.back().next_parent++;
      TensorNode* p = f.node->parents[f.next_parent].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      topo.push_back(f.node);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad();
  loss.node()->grad[0] = 1.f;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    TensorNode* node = *it;
    if (node->backward_fn) {
      node->ensure_grad();
      node->backward_fn();
    }
  }
}

}  // namespace verbose
