#include "verbose/meter.hpp"

#include <chrono>
#include <cmath>

#include "verbose/dataset.hpp"
#include "verbose/errors.hpp"

namespace verbose {

FlopModel FlopModel::from(const ToyVlm& m) {
  const double d = m.d_model;
  const double c = m.hidden;
  const double h = m.enc_hidden;
  const double v = m.vocab.size();
  const double pdim = kImageChannels * m.patch * m.patch;
  const double n_patches =
      static_cast<double>(kImageSize / m.patch) * (kImageSize / m.patch);

  FlopModel f;
  // encoder: per-patch embed, mean pool, layer norm, 2-layer MLP, h0
  f.encoder_flops = n_patches * (2.0 * pdim * d + d)  // patch matmul + bias
                    + 2.0 * n_patches * d             // pooling matmul
                    + 8.0 * d                         // layer norm
                    + 2.0 * d * h + h + h             // mlp1 + bias + tanh
                    + 2.0 * h * d + d                 // mlp2 + bias
                    + 2.0 * d * c + c + c;            // h0 + bias + tanh
  // one decoder step: three gates, candidate blend, output head, softmax
  const double gate = 2.0 * c * c + 2.0 * d * c + 2.0 * d * c  // three matmuls
                      + 3.0 * c                                // adds + bias
                      + c;                                     // activation
  f.per_step_flops = 3.0 * gate       // z, r, candidate
                     + c              // r * h inside the candidate
                     + 4.0 * c        // (1-z)*h + z*cand blend
                     + 2.0 * c * v + v  // output head + bias
                     + 4.0 * v;         // softmax
  return f;
}

namespace {

MeterReading make_reading(const FlopModel& fm, int tokens, double seconds,
                          double joules_per_flop) {
  MeterReading r;
  r.tokens = tokens;
  r.decoder_calls = tokens;
  r.flops = fm.total(tokens);
  r.wall_seconds = seconds;
  r.proxy_energy = r.flops * joules_per_flop;
  return r;
}

}  // namespace

std::pair<GenerationTrace, MeterReading> meter_generation(
    const ToyVlm& m, const Tensor& image, const DecodePolicy& policy,
    double joules_per_flop) {
  const FlopModel fm = FlopModel::from(m);
  const auto t0 = std::chrono::steady_clock::now();
  GenerationTrace trace = generate(m, image, policy);
  const auto t1 = std::chrono::steady_clock::now();
  const double seconds =
      std::chrono::duration<double>(t1 - t0).count();
  MeterReading r =
      make_reading(fm, trace.length(), seconds, joules_per_flop);
  return {std::move(trace), r};
}

std::pair<GenerationTrace, MeterReading> meter_forced(
    const ToyVlm& m, const Tensor& image, int n, double joules_per_flop) {
  const FlopModel fm = FlopModel::from(m);
  const auto t0 = std::chrono::steady_clock::now();
  GenerationTrace trace = generate_forced(m, image, n);
  const auto t1 = std::chrono::steady_clock::now();
  const double seconds =
      std::chrono::duration<double>(t1 - t0).count();
  MeterReading r =
      make_reading(fm, trace.length(), seconds, joules_per_flop);
  return {std::move(trace), r};
}

LinearFit fit_linear(const std::vector<std::pair<double, double>>& points) {
  const size_t n = points.size();
  if (n < 3) throw FitError("fit_linear: need at least 3 points");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0) throw FitError("fit_linear: degenerate x-variance");

  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (syy == 0.0) {
    f.r_squared = 0.0;  // constant y convention
  } else {
    double ss_res = 0.0;
    for (const auto& [x, y] : points) {
      const double e = y - (f.slope * x + f.intercept);
      ss_res += e * e;
    }
    f.r_squared = 1.0 - ss_res / syy;
  }
  return f;
}

}  // namespace verbose
