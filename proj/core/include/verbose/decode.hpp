#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "verbose/rng.hpp"
#include "verbose/tensor.hpp"
#include "verbose/vlm.hpp"

namespace verbose {

enum class PolicyKind { greedy, beam, top_k, nucleus };

struct DecodePolicy {
  PolicyKind kind = PolicyKind::greedy;
  int beam_width = 5;
  int k = 10;
  float p = 0.9f;
  float temperature = 1.f;
  int max_len = 256;
  uint64_t seed = 0;

  void validate() const;  // throws UsageError
  std::string name() const;

  // "greedy", "beam:5", "top_k:10", "nucleus:0.9"
  static DecodePolicy parse(const std::string& text);
};

enum class StopReason { eos, max_len };

struct GenerationTrace {
  std::vector<int> tokens;
  std::vector<std::vector<float>> dists;    // f_i, one V-vector per step
  std::vector<std::vector<float>> hiddens;  // g_i, one C-vector per step
  bool eos_emitted = false;
  StopReason stop_reason = StopReason::max_len;

  int length() const { return static_cast<int>(tokens.size()); }
};

// Runs the auto-regressive loop under `policy` until EOS or max_len.
// Deterministic for greedy/beam, and for stochastic kinds given the seed.
GenerationTrace generate(const ToyVlm& m, const Tensor& image,
                         const DecodePolicy& policy);

// Keeps the smallest descending-probability prefix with cumulative mass >= p,
// renormalized; dropped entries are zeroed. Ties broken by lower token id.
std::vector<float> nucleus_filter(const std::vector<float>& dist, float p);

// Raw log-probability beam search, no length normalization. Returns the
// highest-scoring completed hypothesis (or the best live one when nothing
// completes within max_len). width == 1 coincides with greedy.
GenerationTrace beam_decode(const ToyVlm& m, const Tensor& image, int width,
                            int max_len, float temperature = 1.f);

// Greedy but deaf to EOS: runs exactly n steps. Used by the metering sweep
// where the independent variable is the forced generation length.
GenerationTrace generate_forced(const ToyVlm& m, const Tensor& image, int n);

// Recomputes f_i by teacher-forcing recorded tokens (trace reproducibility).
std::vector<std::vector<float>> teacher_force_dists(
    const ToyVlm& m, const Tensor& image, const std::vector<int>& tokens,
    float temperature = 1.f);

// CSV export, one line per step: token id, EOS probability, entropy.
void write_trace_csv(std::ostream& out, const GenerationTrace& trace,
                     int eos_id);

// --- attack-side generation --------------------------------------------------

// Generation that keeps the autodiff graph alive: dists/hiddens/logits are
// graph-attached tensors through which pixel gradients flow. Sampled tokens
// are constants; gradients flow only through the recorded distributions and
// hidden states.
struct GraphTrace {
  std::vector<int> tokens;
  std::vector<Tensor> dists;    // each {1, V}
  std::vector<Tensor> hiddens;  // each {1, C}
  std::vector<Tensor> logits;   // each {1, V}
  Tensor encoder_hidden;        // {1, enc_hidden}
  bool eos_emitted = false;

  int length() const { return static_cast<int>(tokens.size()); }
};

// Greedy when rng == nullptr, otherwise full-distribution sampling (the
// optional sampled-decoding mode during attacks).
GraphTrace generate_graph(const ToyVlm& m, const Tensor& image_var,
                          int unroll_cap, Rng* rng = nullptr);

// Graph-attached teacher forcing of a fixed token sequence. This is the
// smooth function whose pixel gradient the attack actually follows (tokens
// are constants during backward), so finite-difference checks go through it.
GraphTrace generate_graph_teacher(const ToyVlm& m, const Tensor& image_var,
                                  const std::vector<int>& tokens);

}  // namespace verbose
