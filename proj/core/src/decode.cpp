#include "verbose/decode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "verbose/errors.hpp"

namespace verbose {

void DecodePolicy::validate() const {
  if (max_len < 1) throw UsageError("policy: max_len must be >= 1");
  if (temperature <= 0.f) throw UsageError("policy: temperature must be > 0");
  switch (kind) {
    case PolicyKind::beam:
      if (beam_width < 1) throw UsageError("policy: beam width must be >= 1");
      break;
    case PolicyKind::top_k:
      if (k < 1) throw UsageError("policy: k must be >= 1");
      break;
    case PolicyKind::nucleus:
      if (!(p > 0.f && p <= 1.f)) throw UsageError("policy: p must be in (0,1]");
      break;
    case PolicyKind::greedy:
      break;
  }
}

std::string DecodePolicy::name() const {
  char buf[48];
  switch (kind) {
    case PolicyKind::greedy:
      return "greedy";
    case PolicyKind::beam:
      std::snprintf(buf, sizeof(buf), "beam:%d", beam_width);
      return buf;
    case PolicyKind::top_k:
      std::snprintf(buf, sizeof(buf), "top_k:%d", k);
      return buf;
    case PolicyKind::nucleus:
      std::snprintf(buf, sizeof(buf), "nucleus:%g", p);
      return buf;
  }
  return "?";
}

DecodePolicy DecodePolicy::parse(const std::string& text) {
  DecodePolicy pol;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg =
      colon == std::string::npos ? "" : text.substr(colon + 1);
  try {
    if (head == "greedy") {
      pol.kind = PolicyKind::greedy;
    } else if (head == "beam") {
      pol.kind = PolicyKind::beam;
      if (!arg.empty()) pol.beam_width = std::stoi(arg);
    } else if (head == "top_k") {
      pol.kind = PolicyKind::top_k;
      if (!arg.empty()) pol.k = std::stoi(arg);
    } else if (head == "nucleus") {
      pol.kind = PolicyKind::nucleus;
      if (!arg.empty()) pol.p = std::stof(arg);
    } else {
      throw UsageError("policy: unknown kind '" + head + "'");
    }
  } catch (const std::invalid_argument&) {
    throw UsageError("policy: bad argument in '" + text + "'");
  }
  pol.validate();
  return pol;
}

namespace {

// softmax(logits / temperature) on plain values, double accumulation
std::vector<float> dist_from_logits(const std::vector<float>& logits,
                                    float temperature) {
  const int v = static_cast<int>(logits.size());
  std::vector<float> out(v);
  float zmax = -std::numeric_limits<float>::infinity();
  for (float z : logits) zmax = std::max(zmax, z / temperature);
  double denom = 0.0;
  for (int j = 0; j < v; ++j) {
    out[j] = std::exp(logits[j] / temperature - zmax);
    denom += out[j];
  }
  for (int j = 0; j < v; ++j) out[j] = static_cast<float>(out[j] / denom);
  return out;
}

int argmax(const std::vector<float>& x) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(x.size()); ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

// Inverse-CDF draw over a (possibly filtered) distribution.
int sample_index(const std::vector<float>& dist, Rng& rng) {
  double total = 0.0;
  for (float f : dist) total += f;
  const double u = rng.uniform() * total;
  double cum = 0.0;
  int last_nonzero = 0;
  for (int i = 0; i < static_cast<int>(dist.size()); ++i) {
    if (dist[i] > 0.f) last_nonzero = i;
    cum += dist[i];
    if (u < cum) return i;
  }
  return last_nonzero;
}

std::vector<float> top_k_filter(const std::vector<float>& dist, int k) {
  const int v = static_cast<int>(dist.size());
  if (k >= v) return dist;
  std::vector<int> order(v);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dist[a] > dist[b]; });
  std::vector<float> out(v, 0.f);
  double kept = 0.0;
  for (int i = 0; i < k; ++i) kept += dist[order[i]];
  for (int i = 0; i < k; ++i) {
    out[order[i]] = static_cast<float>(dist[order[i]] / kept);
  }
  return out;
}

struct StepValues {
  std::vector<float> h;
  std::vector<float> logits;
};

StepValues plain_step(const ToyVlm& m, const std::vector<float>& h_prev,
                      int tok, const Tensor& ctx) {
  Tensor h({1, m.hidden}, h_prev);
  DecoderStep s = decoder_step(m, h, tok, ctx);
  return StepValues{s.h.vec(), s.logits.vec()};
}

}  // namespace

std::vector<float> nucleus_filter(const std::vector<float>& dist, float p) {
  const int v = static_cast<int>(dist.size());
  std::vector<int> order(v);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dist[a] > dist[b]; });
  double cum = 0.0;
  int keep = 0;
  while (keep < v) {
    cum += dist[order[keep]];
    ++keep;
    if (cum >= static_cast<double>(p)) break;
  }
  std::vector<float> out(v, 0.f);
  for (int i = 0; i < keep; ++i) {
    out[order[i]] = static_cast<float>(dist[order[i]] / cum);
  }
  return out;
}

GenerationTrace generate(const ToyVlm& m, const Tensor& image,
                         const DecodePolicy& policy) {
  policy.validate();
  if (policy.kind == PolicyKind::beam) {
    return beam_decode(m, image, policy.beam_width, policy.max_len,
                       policy.temperature);
  }
  EncoderOut enc = encode(m, image);
  Rng rng(policy.seed);
  GenerationTrace trace;
  std::vector<float> h = enc.h0.vec();
  int prev = m.vocab.bos_id;
  for (int step = 0; step < policy.max_len; ++step) {
    StepValues sv = plain_step(m, h, prev, enc.ctx);
    std::vector<float> dist = dist_from_logits(sv.logits, policy.temperature);
    int tok;
    switch (policy.kind) {
      case PolicyKind::greedy:
        tok = argmax(dist);
        break;
      case PolicyKind::top_k:
        tok = sample_index(top_k_filter(dist, policy.k), rng);
        break;
      case PolicyKind::nucleus:
        tok = sample_index(nucleus_filter(dist, policy.p), rng);
        break;
      default:
        throw UsageError("generate: unreachable policy kind");
    }
    trace.tokens.push_back(tok);
    trace.dists.push_back(std::move(dist));
    trace.hiddens.push_back(sv.h);
    h = trace.hiddens.back();
    prev = tok;
    if (tok == m.vocab.eos_id) {
      trace.eos_emitted = true;
      trace.stop_reason = StopReason::eos;
      return trace;
    }
  }
  trace.stop_reason = StopReason::max_len;
  return trace;
}

GenerationTrace generate_forced(const ToyVlm& m, const Tensor& image, int n) {
  if (n < 1) throw UsageError("generate_forced: n must be >= 1");
  EncoderOut enc = encode(m, image);
  GenerationTrace trace;
  std::vector<float> h = enc.h0.vec();
  int prev = m.vocab.bos_id;
  for (int step = 0; step < n; ++step) {
    StepValues sv = plain_step(m, h, prev, enc.ctx);
    std::vector<float> dist = dist_from_logits(sv.logits, 1.f);
    const int tok = argmax(dist);
    trace.tokens.push_back(tok);
    trace.dists.push_back(std::move(dist));
    trace.hiddens.push_back(sv.h);
    h = trace.hiddens.back();
    prev = tok;
  }
  trace.eos_emitted = false;
  trace.stop_reason = StopReason::max_len;
  return trace;
}

GenerationTrace beam_decode(const ToyVlm& m, const Tensor& image, int width,
                            int max_len, float temperature) {
  if (width < 1) throw UsageError("beam_decode: width must be >= 1");
  if (max_len < 1) throw UsageError("beam_decode: max_len must be >= 1");
  EncoderOut enc = encode(m, image);

  struct Hyp {
    std::vector<int> tokens;
    double logprob = 0.0;
    std::vector<float> h;
    std::vector<std::vector<float>> dists;
    std::vector<std::vector<float>> hiddens;
  };

  std::vector<Hyp> live(1);
  live[0].h = enc.h0.vec();
  std::vector<Hyp> completed;

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    struct Cand {
      int hyp;
      int tok;
      double logprob;
    };
    std::vector<Cand> cands;
    std::vector<StepValues> step_values(live.size());
    std::vector<std::vector<float>> step_dists(live.size());
    for (size_t i = 0; i < live.size(); ++i) {
      const int prev = live[i].tokens.empty() ? m.vocab.bos_id
                                              : live[i].tokens.back();
      step_values[i] = plain_step(m, live[i].h, prev, enc.ctx);
      step_dists[i] = dist_from_logits(step_values[i].logits, temperature);
      for (int tok = 0; tok < m.vocab_size(); ++tok) {
        const float f = step_dists[i][tok];
        if (f <= 0.f) continue;
        cands.push_back({static_cast<int>(i), tok,
                         live[i].logprob + std::log(static_cast<double>(f))});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.logprob != b.logprob) return a.logprob > b.logprob;
      if (a.tok != b.tok) return a.tok < b.tok;
      return a.hyp < b.hyp;
    });
    if (cands.size() > static_cast<size_t>(width)) cands.resize(width);

    std::vector<Hyp> next;
    for (const Cand& c : cands) {
      Hyp h = live[c.hyp];
      h.tokens.push_back(c.tok);
      h.logprob = c.logprob;
      h.dists.push_back(step_dists[c.hyp]);
      h.hiddens.push_back(step_values[c.hyp].h);
      h.h = step_values[c.hyp].h;
      if (c.tok == m.vocab.eos_id) {
        completed.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
  }

  const Hyp* best = nullptr;
  bool from_completed = false;
  for (const Hyp& h : completed) {
    if (!best || h.logprob > best->logprob) {
      best = &h;
      from_completed = true;
    }
  }
  if (!best) {
    for (const Hyp& h : live) {
      if (!best || h.logprob > best->logprob) best = &h;
    }
  }
  if (!best) throw NumericError("beam_decode: no hypothesis survived");

  GenerationTrace trace;
  trace.tokens = best->tokens;
  trace.dists = best->dists;
  trace.hiddens = best->hiddens;
  trace.eos_emitted = from_completed;
  trace.stop_reason = from_completed ? StopReason::eos : StopReason::max_len;
  return trace;
}

std::vector<std::vector<float>> teacher_force_dists(
    const ToyVlm& m, const Tensor& image, const std::vector<int>& tokens,
    float temperature) {
  EncoderOut enc = encode(m, image);
  std::vector<std::vector<float>> dists;
  dists.reserve(tokens.size());
  std::vector<float> h = enc.h0.vec();
  int prev = m.vocab.bos_id;
  for (int tok : tokens) {
    StepValues sv = plain_step(m, h, prev, enc.ctx);
    dists.push_back(dist_from_logits(sv.logits, temperature));
    h = sv.h;
    prev = tok;
  }
  return dists;
}

void write_trace_csv(std::ostream& out, const GenerationTrace& trace,
                     int eos_id) {
  out << "step,token_id,eos_prob,entropy\n";
  for (size_t i = 0; i < trace.tokens.size(); ++i) {
    double entropy = 0.0;
    for (float f : trace.dists[i]) {
      if (f > 0.f) entropy -= static_cast<double>(f) * std::log(f);
    }
    out << i << ',' << trace.tokens[i] << ',' << trace.dists[i][eos_id] << ','
        << entropy << '\n';
  }
}

GraphTrace generate_graph_teacher(const ToyVlm& m, const Tensor& image_var,
                                  const std::vector<int>& tokens) {
  if (tokens.empty()) throw UsageError("generate_graph_teacher: empty tokens");
  EncoderOut enc = encode(m, image_var);
  GraphTrace trace;
  trace.encoder_hidden = enc.mlp_hidden;
  Tensor h = enc.h0;
  int prev = m.vocab.bos_id;
  for (int tok : tokens) {
    DecoderStep s = decoder_step(m, h, prev, enc.ctx);
    trace.tokens.push_back(tok);
    trace.dists.push_back(s.probs);
    trace.hiddens.push_back(s.h);
    trace.logits.push_back(s.logits);
    h = s.h;
    prev = tok;
  }
  trace.eos_emitted = tokens.back() == m.vocab.eos_id;
  return trace;
}

GraphTrace generate_graph(const ToyVlm& m, const Tensor& image_var,
                          int unroll_cap, Rng* rng) {
  if (unroll_cap < 1) throw UsageError("generate_graph: unroll cap must be >= 1");
  EncoderOut enc = encode(m, image_var);
  GraphTrace trace;
  trace.encoder_hidden = enc.mlp_hidden;
  Tensor h = enc.h0;
  int prev = m.vocab.bos_id;
  for (int step = 0; step < unroll_cap; ++step) {
    DecoderStep s = decoder_step(m, h, prev, enc.ctx);
    const int tok =
        rng ? sample_index(s.probs.vec(), *rng) : argmax(s.probs.vec());
    trace.tokens.push_back(tok);
    trace.dists.push_back(s.probs);
    trace.hiddens.push_back(s.h);
    trace.logits.push_back(s.logits);
    h = s.h;
    prev = tok;
    if (tok == m.vocab.eos_id) {
      trace.eos_emitted = true;
      break;
    }
  }
  return trace;
}

}  // namespace verbose
