#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "verbose/decode.hpp"
#include "verbose/tensor.hpp"
#include "verbose/vlm.hpp"

namespace verbose {

// Knobs of the verbose-image optimization. Defaults follow the reference
// recipe on a 0..255 pixel scale mapped into [0,1]: epsilon 8/255, step
// 1/255, decay parameters (10,-20), (0,0), (0.5,1), momentum 0.9.
struct AttackConfig {
  float epsilon = 8.f / 255.f;
  float alpha = 1.f / 255.f;
  int iters = 300;
  float a1 = 10.f, b1 = -20.f;
  float a2 = 0.f, b2 = 0.f;
  float a3 = 0.5f, b3 = 1.f;
  float momentum = 0.9f;
  int unroll = 64;  // generation cap while optimizing
  // Traces are re-sampled from the full distribution each iteration (the
  // probability-space losses need the exploration; greedy traces starve them
  // on a confident model). Deterministic per seed either way; set false for
  // greedy-trace optimization.
  bool sample_during_attack = true;
  bool use_l1 = true, use_l2 = true, use_l3 = true;
  bool use_decay = true, use_momentum = true;
  uint64_t seed = 0;

  // epsilon == 0 is the explicit null budget (the projection pins the image);
  // otherwise 0 < alpha <= epsilon <= 1.
  void validate() const;
};

struct ScheduleState {
  std::array<double, 3> lambda_prev = {0.0, 0.0, 0.0};
  int t = 0;  // iterations consumed so far
};

struct LossBreakdown {
  float l1 = 0.f;  // mean EOS probability, in [0,1]
  float l2 = 0.f;  // KL-to-uniform sum, in [0, N ln V]
  float l3 = 0.f;  // negated nuclear norm, <= 0
  int n = 0;       // sequence length used
};

// --- the three losses, graph-attached ---------------------------------------

// Mean EOS probability over all recorded steps.
Tensor loss_eos(const GraphTrace& trace, int eos_id);

// Sum over steps of KL(f_i || uniform) = sum ln V - H(f_i).
Tensor loss_uncertainty(const GraphTrace& trace);

// Negated nuclear norm of the N x C matrix of stacked hidden states.
Tensor loss_diversity(const GraphTrace& trace);

// --- schedule ----------------------------------------------------------------

// Normalization-and-decay weights with momentum smoothing:
//   T_j(t) = max(a_j ln t + b_j, 1)
//   lambda_j(t) = |L2| / max(|L_j|, 1e-8) / T_j(t)
//   lambda'_j(t) = m lambda'_j(t-1) + (1-m) lambda_j(t),  lambda'_j(1) = lambda_j(1)
// The clamp at 1 keeps T usable at t = 1 where the published constants give
// T_1 = -20 and T_2 = 0.
std::array<double, 3> schedule_weights(ScheduleState& state,
                                       const LossBreakdown& losses,
                                       const AttackConfig& cfg);

// --- PGD ----------------------------------------------------------------------

// One sign step, then projection into the epsilon ball around x_ref and the
// valid [0,1] pixel range. sign(0) := 0.
Tensor pgd_step(const Tensor& x_t, const Tensor& x_ref,
                const std::vector<float>& grad, const AttackConfig& cfg);

// --- full attacks -------------------------------------------------------------

struct CurveRow {
  int iter = 0;
  float l1 = 0.f, l2 = 0.f, l3 = 0.f;
  double lam1 = 0.0, lam2 = 0.0, lam3 = 0.0;
  int n = 0;
};

struct AttackResult {
  Tensor x_adv;
  std::vector<CurveRow> curves;
  float linf_dist = 0.f;
  float l2_dist = 0.f;
  // filled by the evaluation layer
  std::vector<std::pair<std::string, GenerationTrace>> eval_traces;
};

// The full verbose-image loop: noise init, per-iteration generation, the
// three losses, scheduled weights, sign-gradient step, projection.
// Deterministic per (model, image, cfg, seed). Throws NumericError with the
// iteration index if a loss goes non-finite.
AttackResult craft_verbose_image(const ToyVlm& m, const Tensor& image,
                                 const AttackConfig& cfg);

// Baselines. Both PGD baselines optimize over greedy traces regardless of
// sample_during_attack: they are deterministic-decoding methods, and their
// token-specific objectives assume a stable target sequence.
Tensor baseline_noise(const Tensor& image, float epsilon, uint64_t seed);

// PGD maximizing the squared L2 norm of activations (encoder MLP hidden plus
// every decoder-step hidden state).
AttackResult baseline_sponge(const ToyVlm& m, const Tensor& image,
                             const AttackConfig& cfg);

// PGD minimizing sum_i (z_i^EOS + z_i^{y_i}) over pre-softmax logits, with
// y_i re-generated every iteration.
AttackResult baseline_nicg(const ToyVlm& m, const Tensor& image,
                           const AttackConfig& cfg);

// Distance helpers.
float linf_distance(const Tensor& a, const Tensor& b);
float l2_distance(const Tensor& a, const Tensor& b);

}  // namespace verbose
