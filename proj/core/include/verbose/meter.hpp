#pragma once

#include <utility>
#include <vector>

#include "verbose/decode.hpp"
#include "verbose/vlm.hpp"

namespace verbose {

struct MeterReading {
  int tokens = 0;
  int decoder_calls = 0;  // == tokens
  double flops = 0.0;
  double wall_seconds = 0.0;
  double proxy_energy = 0.0;  // flops * joules_per_flop
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Analytic operation counts, from the declared formulas:
//   matmul {M,K}x{K,N}: 2MKN      bias/elementwise (n elements): n
//   softmax over V: 4V            layer_norm over D: 8D
// Inference cost is encoder_flops + N * per_step_flops by construction.
struct FlopModel {
  double encoder_flops = 0.0;
  double per_step_flops = 0.0;

  static FlopModel from(const ToyVlm& m);
  double total(int n_tokens) const {
    return encoder_flops + n_tokens * per_step_flops;
  }
};

inline constexpr double kDefaultJoulesPerFlop = 1e-9;

// Runs generation under `policy`, wall-clocking the inference (encode plus
// the decode loop) and deriving flops/energy analytically.
std::pair<GenerationTrace, MeterReading> meter_generation(
    const ToyVlm& m, const Tensor& image, const DecodePolicy& policy,
    double joules_per_flop = kDefaultJoulesPerFlop);

// Forced-length variant for the linearity sweep (EOS ignored, exactly n
// decoder calls).
std::pair<GenerationTrace, MeterReading> meter_forced(
    const ToyVlm& m, const Tensor& image, int n,
    double joules_per_flop = kDefaultJoulesPerFlop);

// Ordinary least squares y = slope * x + intercept. Throws FitError with
// fewer than 3 points or zero x-variance. Constant y gives slope 0 and the
// R^2 = 0 convention.
LinearFit fit_linear(const std::vector<std::pair<double, double>>& points);

}  // namespace verbose
