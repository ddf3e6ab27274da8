#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "verbose/tensor.hpp"
#include "verbose/vocab.hpp"

namespace verbose {

// Small differentiable captioner: patch embedding + layer-norm + one-hidden-
// layer MLP encoder, and a single gated recurrent decoder cell whose hidden
// state is exposed per step. The image context vector is fed to every decoder
// step, so pixel gradients reach each generated token directly.
struct ToyVlm {
  int d_model = 64;
  int hidden = 64;      // decoder cell width C
  int enc_hidden = 64;  // encoder MLP hidden width
  int patch = 8;
  Vocab vocab;

  Tensor patch_w, patch_b;            // {3*P*P, d}, {1, d}
  Tensor ln_gamma, ln_beta;           // {1, d}
  Tensor mlp_w1, mlp_b1;              // {d, H}, {1, H}
  Tensor mlp_w2, mlp_b2;              // {H, d}, {1, d}
  Tensor init_w, init_b;              // {d, C}, {1, C}
  Tensor token_embed;                 // {V, d}
  Tensor gate_uz, gate_ez, gate_cz, gate_bz;  // update gate
  Tensor gate_ur, gate_er, gate_cr, gate_br;  // reset gate
  Tensor gate_uh, gate_eh, gate_ch, gate_bh;  // candidate state
  Tensor out_w, out_b;                // {C, V}, {1, V}

  int vocab_size() const { return vocab.size(); }
  std::vector<std::pair<std::string, Tensor*>> named_params();
  std::vector<std::pair<std::string, const Tensor*>> named_params() const;
  void set_requires_grad(bool on);
  void zero_grad();
  void check_finite() const;  // throws NumericError
};

ToyVlm init_model(uint64_t seed, int d_model = 64, int hidden = 64,
                  int enc_hidden = 64, int patch = 8);

struct EncoderOut {
  Tensor ctx;         // {1, d_model}
  Tensor mlp_hidden;  // {1, enc_hidden}; encoder activation for sponge-style objectives
  Tensor h0;          // {1, hidden}
};

EncoderOut encode(const ToyVlm& m, const Tensor& image);

// Convenience: the context vector alone.
Tensor encode_image(const ToyVlm& m, const Tensor& image);

struct DecoderStep {
  Tensor h;       // {1, hidden}
  Tensor probs;   // {1, V}
  Tensor logits;  // {1, V}
};

DecoderStep decoder_step(const ToyVlm& m, const Tensor& h_prev, int tok,
                         const Tensor& ctx);

// Teacher-forced negative log-likelihood of one caption: -sum_i log p(y_i).
Tensor caption_nll(const ToyVlm& m, const EncoderOut& enc,
                   const std::vector<int>& caption);

struct SynthSample;

struct TrainReport {
  std::vector<double> epoch_loss;  // mean per-sample NLL
  int epochs = 0;
  double final_loss = 0.0;
};

// Plain SGD with global-norm gradient clipping at 5. Throws TrainingError
// (with the epoch index) if the loss goes non-finite.
TrainReport train(ToyVlm& m, const std::vector<SynthSample>& data, int epochs,
                  float lr, uint64_t seed);

// Checkpoint: "VVLM" header (dims + vocab) followed by the parameter tensors
// as VFT1 blocks in a fixed order. Round trips are bit-exact.
void save_model(const ToyVlm& m, const std::string& path);
ToyVlm load_model(const std::string& path);

}  // namespace verbose
