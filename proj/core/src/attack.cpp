#include "verbose/attack.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "verbose/errors.hpp"
#include "verbose/rng.hpp"

namespace verbose {

void AttackConfig::validate() const {
  if (iters < 1) throw UsageError("attack: iters must be >= 1");
  if (!(momentum >= 0.f && momentum < 1.f)) {
    throw UsageError("attack: momentum must be in [0,1)");
  }
  if (!(epsilon >= 0.f && epsilon <= 1.f)) {
    throw UsageError("attack: epsilon must be in [0,1]");
  }
  if (epsilon > 0.f && !(alpha > 0.f && alpha <= epsilon)) {
    throw UsageError("attack: need 0 < alpha <= epsilon");
  }
  if (unroll < 1) throw UsageError("attack: unroll cap must be >= 1");
  if (!use_l1 && !use_l2 && !use_l3) {
    throw UsageError("attack: at least one loss must be enabled");
  }
}

Tensor loss_eos(const GraphTrace& trace, int eos_id) {
  if (trace.length() < 1) throw UsageError("loss_eos: empty trace");
  std::vector<Tensor> picks;
  picks.reserve(trace.dists.size());
  for (const Tensor& dist : trace.dists) picks.push_back(pick(dist, eos_id));
  return mean(concat_rows(picks));
}

Tensor loss_uncertainty(const GraphTrace& trace) {
  if (trace.length() < 1) throw UsageError("loss_uncertainty: empty trace");
  return kl_uniform(concat_rows(trace.dists));
}

Tensor loss_diversity(const GraphTrace& trace) {
  if (trace.length() < 1) throw UsageError("loss_diversity: empty trace");
  return scale(nuclear_norm(concat_rows(trace.hiddens)), -1.f);
}

std::array<double, 3> schedule_weights(ScheduleState& state,
                                       const LossBreakdown& losses,
                                       const AttackConfig& cfg) {
  constexpr double kDenomGuard = 1e-8;
  const int t = state.t + 1;
  const double log_t = std::log(static_cast<double>(t));
  const std::array<double, 3> decay_a = {cfg.a1, cfg.a2, cfg.a3};
  const std::array<double, 3> decay_b = {cfg.b1, cfg.b2, cfg.b3};
  const std::array<double, 3> mags = {std::abs(static_cast<double>(losses.l1)),
                                      std::abs(static_cast<double>(losses.l2)),
                                      std::abs(static_cast<double>(losses.l3))};
  std::array<double, 3> lambda;
  for (int j = 0; j < 3; ++j) {
    const double decay =
        cfg.use_decay ? std::max(decay_a[j] * log_t + decay_b[j], 1.0) : 1.0;
    lambda[j] = mags[1] / std::max(mags[j], kDenomGuard) / decay;
  }
  if (t > 1 && cfg.use_momentum) {
    for (int j = 0; j < 3; ++j) {
      lambda[j] = cfg.momentum * state.lambda_prev[j] +
                  (1.0 - cfg.momentum) * lambda[j];
    }
  }
  state.lambda_prev = lambda;
  state.t = t;
  return lambda;
}

Tensor pgd_step(const Tensor& x_t, const Tensor& x_ref,
                const std::vector<float>& grad, const AttackConfig& cfg) {
  if (x_t.shape() != x_ref.shape() ||
      grad.size() != static_cast<size_t>(x_t.numel())) {
    throw DimensionError("pgd_step: shape mismatch");
  }
  const int n = x_t.numel();
  std::vector<float> out(n);
  for (int i = 0; i < n; ++i) {
    const float g = grad[i];
    const float sgn = g > 0.f ? 1.f : (g < 0.f ? -1.f : 0.f);
    float v = x_t.data()[i] - cfg.alpha * sgn;
    const float lo = x_ref.data()[i] - cfg.epsilon;
    const float hi = x_ref.data()[i] + cfg.epsilon;
    v = std::min(std::max(v, lo), hi);
    v = std::min(std::max(v, 0.f), 1.f);
    out[i] = v;
  }
  return Tensor(x_t.shape(), std::move(out));
}

float linf_distance(const Tensor& a, const Tensor& b) {
  float d = 0.f;
  for (int i = 0; i < a.numel(); ++i) {
    d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  }
  return d;
}

float l2_distance(const Tensor& a, const Tensor& b) {
  double d = 0.0;
  for (int i = 0; i < a.numel(); ++i) {
    const double c = static_cast<double>(a.data()[i]) - b.data()[i];
    d += c * c;
  }
  return static_cast<float>(std::sqrt(d));
}

namespace {

Tensor noise_init(const Tensor& image, float epsilon, Rng& rng) {
  std::vector<float> out(image.numel());
  for (int i = 0; i < image.numel(); ++i) {
    const float v = image.data()[i] + rng.uniform_f(-epsilon, epsilon);
    out[i] = std::min(std::max(v, 0.f), 1.f);
  }
  return Tensor(image.shape(), std::move(out));
}

// Shared PGD chassis for the baselines: `objective` builds a graph-attached
// scalar to be minimized from the current greedy trace.
template <typename ObjectiveFn>
AttackResult pgd_attack(const ToyVlm& m, const Tensor& image,
                        const AttackConfig& cfg, ObjectiveFn objective) {
  cfg.validate();
  Rng rng(cfg.seed);
  Tensor x_adv = noise_init(image, cfg.epsilon, rng);
  AttackResult result;
  for (int t = 1; t <= cfg.iters; ++t) {
    Tensor x_var = Tensor::leaf(x_adv.shape(), x_adv.vec(), true);
    GraphTrace trace = generate_graph(m, x_var, cfg.unroll);
    Tensor obj = objective(trace, t);
    if (!std::isfinite(obj.item())) {
      throw NumericError("attack: non-finite objective at iteration " +
                         std::to_string(t));
    }
    backward(obj);
    x_adv = pgd_step(x_adv, image, x_var.grad(), cfg);
  }
  result.x_adv = x_adv;
  result.linf_dist = linf_distance(x_adv, image);
  result.l2_dist = l2_distance(x_adv, image);
  return result;
}

}  // namespace

AttackResult craft_verbose_image(const ToyVlm& m, const Tensor& image,
                                 const AttackConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Tensor x_adv = noise_init(image, cfg.epsilon, rng);
  Rng sample_rng(mix_seed(cfg.seed, 0x5a));
  ScheduleState state;
  AttackResult result;
  result.curves.reserve(cfg.iters);

  for (int t = 1; t <= cfg.iters; ++t) {
    Tensor x_var = Tensor::leaf(x_adv.shape(), x_adv.vec(), true);
    GraphTrace trace = generate_graph(
        m, x_var, cfg.unroll, cfg.sample_during_attack ? &sample_rng : nullptr);

    Tensor l1 = loss_eos(trace, m.vocab.eos_id);
    Tensor l2 = loss_uncertainty(trace);
    Tensor l3 = loss_diversity(trace);
    LossBreakdown breakdown{l1.item(), l2.item(), l3.item(), trace.length()};
    if (!std::isfinite(breakdown.l1) || !std::isfinite(breakdown.l2) ||
        !std::isfinite(breakdown.l3)) {
      throw NumericError("attack: non-finite loss at iteration " +
                         std::to_string(t));
    }

    const std::array<double, 3> lambda = schedule_weights(state, breakdown, cfg);

    Tensor objective;
    auto accumulate = [&objective](Tensor term) {
      objective = objective.defined() ? add(objective, term) : term;
    };
    if (cfg.use_l1) accumulate(scale(l1, static_cast<float>(lambda[0])));
    if (cfg.use_l2) accumulate(scale(l2, static_cast<float>(lambda[1])));
    if (cfg.use_l3) accumulate(scale(l3, static_cast<float>(lambda[2])));

    backward(objective);
    x_adv = pgd_step(x_adv, image, x_var.grad(), cfg);

    result.curves.push_back(CurveRow{t, breakdown.l1, breakdown.l2,
                                     breakdown.l3, lambda[0], lambda[1],
                                     lambda[2], breakdown.n});
  }

  result.x_adv = x_adv;
  result.linf_dist = linf_distance(x_adv, image);
  result.l2_dist = l2_distance(x_adv, image);
  return result;
}

Tensor baseline_noise(const Tensor& image, float epsilon, uint64_t seed) {
  Rng rng(seed);
  return noise_init(image, epsilon, rng);
}

AttackResult baseline_sponge(const ToyVlm& m, const Tensor& image,
                             const AttackConfig& cfg) {
  return pgd_attack(m, image, cfg, [](const GraphTrace& trace, int) {
    Tensor total = sum(mul(trace.encoder_hidden, trace.encoder_hidden));
    for (const Tensor& h : trace.hiddens) total = add(total, sum(mul(h, h)));
    return scale(total, -1.f);  // maximize activation mass
  });
}

AttackResult baseline_nicg(const ToyVlm& m, const Tensor& image,
                           const AttackConfig& cfg) {
  const int eos = m.vocab.eos_id;
  return pgd_attack(m, image, cfg, [eos](const GraphTrace& trace, int) {
    std::vector<Tensor> terms;
    terms.reserve(trace.logits.size() * 2);
    for (size_t i = 0; i < trace.logits.size(); ++i) {
      terms.push_back(pick(trace.logits[i], eos));
      terms.push_back(pick(trace.logits[i], trace.tokens[i]));
    }
    return sum(concat_rows(terms));
  });
}

}  // namespace verbose
