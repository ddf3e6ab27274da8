#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace verbose {

using Shape = std::vector<int>;

int shape_numel(const Shape& shape);

// One record in the backward graph. The graph is implicit: each op links its
// output node to its input nodes and captures a pull-style backward closure.
// Graphs are rebuilt every forward pass (generation length changes between
// attack iterations), so nodes are cheap shared_ptr records.
struct TensorNode {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // lazily allocated, same size as data
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void()> backward_fn;  // reads this->grad, accumulates parents

  void ensure_grad();
};

// Value-semantic handle on a shared node. Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, float fill);
  Tensor(Shape shape, std::vector<float> data);
  static Tensor leaf(Shape shape, std::vector<float> data, bool requires_grad);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int numel() const { return static_cast<int>(node_->data.size()); }
  float* data() { return node_->data.data(); }
  const float* data() const { return node_->data.data(); }
  std::vector<float>& vec() { return node_->data; }
  const std::vector<float>& vec() const { return node_->data; }
  const std::vector<float>& grad() const;
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  void zero_grad();

  // Scalar access; throws UsageError unless numel() == 1.
  float item() const;

  std::shared_ptr<TensorNode> node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

// Op factory: output joins the graph iff some input requires gradients.
// The caller attaches the backward closure afterwards (it needs the output
// node's address).
Tensor make_op_output(Shape shape, std::vector<float> data,
                      std::vector<Tensor> inputs);

// --- elementwise / structural ops -----------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float c);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sum(const Tensor& a);   // -> scalar {1,1}
Tensor mean(const Tensor& a);  // -> scalar {1,1}

// Stacks k row vectors (each {1,C} or {C}) into a {k,C} matrix.
Tensor concat_rows(const std::vector<Tensor>& rows);

// Row `id` of a {V,D} table as a {1,D} tensor; backward scatters into the row.
Tensor embedding_lookup(const Tensor& table, int id);

// Scalar element at flat `index`; backward scatters.
Tensor pick(const Tensor& a, int index);

// Copies a P x P patch from a {C,H,W} image, flattened to {1, C*P*P}.
Tensor extract_patch(const Tensor& image, int top, int left, int patch);

// Normalizes the last dimension, then applies gamma/beta ({1,D}).
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  float eps = 1e-5f);

// --- linear algebra --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);  // {M,K} x {K,N} -> {M,N}

// Rows-sum-to-one softmax over the last dimension, max-stabilized.
Tensor softmax(const Tensor& z);

// Sum of singular values of a {N,C} matrix. Backward is the subgradient
// u * v^T of the thin SVD (exact when all singular values are positive).
Tensor nuclear_norm(const Tensor& a);

// KL(dist || uniform over the last dim) summed over rows:
// sum_v f_v * ln(f_v * V), with the 0*ln(0) := 0 convention. Softmax can
// underflow to exact zeros in float32, so this is a fused op rather than
// mul(f, log(scale(f, V))).
Tensor kl_uniform(const Tensor& dist);

// --- backward ---------------------------------------------------------------

// Reverse-mode sweep from a scalar loss. Visits every reachable node exactly
// once in topological order; leaves with requires_grad end up holding
// d(loss)/d(leaf). Throws UsageError if loss is not scalar or the graph has
// no gradient-requiring leaf.
void backward(const Tensor& loss);

}  // namespace verbose
