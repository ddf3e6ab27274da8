#include "verbose/vlm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

#include "verbose/dataset.hpp"
#include "verbose/errors.hpp"
#include "verbose/rng.hpp"
#include "verbose/tensor_io.hpp"

namespace verbose {

std::vector<std::pair<std::string, Tensor*>> ToyVlm::named_params() {
  return {
      {"patch_w", &patch_w},   {"patch_b", &patch_b},
      {"ln_gamma", &ln_gamma}, {"ln_beta", &ln_beta},
      {"mlp_w1", &mlp_w1},     {"mlp_b1", &mlp_b1},
      {"mlp_w2", &mlp_w2},     {"mlp_b2", &mlp_b2},
      {"init_w", &init_w},     {"init_b", &init_b},
      {"token_embed", &token_embed},
      {"gate_uz", &gate_uz},   {"gate_ez", &gate_ez},
      {"gate_cz", &gate_cz},   {"gate_bz", &gate_bz},
      {"gate_ur", &gate_ur},   {"gate_er", &gate_er},
      {"gate_cr", &gate_cr},   {"gate_br", &gate_br},
      {"gate_uh", &gate_uh},   {"gate_eh", &gate_eh},
      {"gate_ch", &gate_ch},   {"gate_bh", &gate_bh},
      {"out_w", &out_w},       {"out_b", &out_b},
  };
}

std::vector<std::pair<std::string, const Tensor*>> ToyVlm::named_params() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<ToyVlm*>(this)->named_params()) {
    out.emplace_back(name, t);
  }
  return out;
}

void ToyVlm::set_requires_grad(bool on) {
  for (auto& [name, t] : named_params()) t->set_requires_grad(on);
}

void ToyVlm::zero_grad() {
  for (auto& [name, t] : named_params()) t->zero_grad();
}

void ToyVlm::check_finite() const {
  for (auto& [name, t] : named_params()) {
    for (float x : t->vec()) {
      if (!std::isfinite(x)) {
        throw NumericError("model: non-finite parameter in " + name);
      }
    }
  }
}

namespace {

Tensor xavier(Rng& rng, int rows, int cols) {
  const float limit = std::sqrt(6.f / static_cast<float>(rows + cols));
  std::vector<float> data(static_cast<size_t>(rows) * cols);
  for (float& x : data) x = rng.uniform_f(-limit, limit);
  return Tensor({rows, cols}, std::move(data));
}

}  // namespace

ToyVlm init_model(uint64_t seed, int d_model, int hidden, int enc_hidden,
                  int patch) {
  ToyVlm m;
  m.d_model = d_model;
  m.hidden = hidden;
  m.enc_hidden = enc_hidden;
  m.patch = patch;
  m.vocab = default_vocab();
  const int v = m.vocab.size();
  const int pdim = kImageChannels * patch * patch;

  Rng rng(seed);
  // The vision branch is initialized hot (2x Xavier): the encoder tanh then
  // trains into its steep regime, giving the pixel-level sensitivity a
  // desk-scale attack target needs at perceptual budgets.
  m.patch_w = xavier(rng, pdim, d_model);
  for (float& x : m.patch_w.vec()) x *= 2.f;
  m.patch_b = Tensor({1, d_model}, 0.f);
  m.ln_gamma = Tensor({1, d_model}, 1.f);
  m.ln_beta = Tensor({1, d_model}, 0.f);
  m.mlp_w1 = xavier(rng, d_model, enc_hidden);
  m.mlp_b1 = Tensor({1, enc_hidden}, 0.f);
  m.mlp_w2 = xavier(rng, enc_hidden, d_model);
  m.mlp_b2 = Tensor({1, d_model}, 0.f);
  m.init_w = xavier(rng, d_model, hidden);
  m.init_b = Tensor({1, hidden}, 0.f);
  m.token_embed = xavier(rng, v, d_model);
  m.gate_uz = xavier(rng, hidden, hidden);
  m.gate_ez = xavier(rng, d_model, hidden);
  m.gate_cz = xavier(rng, d_model, hidden);
  m.gate_bz = Tensor({1, hidden}, 0.f);
  m.gate_ur = xavier(rng, hidden, hidden);
  m.gate_er = xavier(rng, d_model, hidden);
  m.gate_cr = xavier(rng, d_model, hidden);
  m.gate_br = Tensor({1, hidden}, 0.f);
  m.gate_uh = xavier(rng, hidden, hidden);
  m.gate_eh = xavier(rng, d_model, hidden);
  m.gate_ch = xavier(rng, d_model, hidden);
  m.gate_bh = Tensor({1, hidden}, 0.f);
  // cool head: a halved logit range keeps the softmax away from
  // saturation, so probability-space objectives keep usable gradients
  m.out_w = xavier(rng, hidden, v);
  for (float& x : m.out_w.vec()) x *= 0.5f;
  m.out_b = Tensor({1, v}, 0.f);
  return m;
}

EncoderOut encode(const ToyVlm& m, const Tensor& image) {
  if (image.shape() != Shape{kImageChannels, kImageSize, kImageSize}) {
    throw DimensionError("encode: image must be {3,32,32}");
  }
  const int per_side = kImageSize / m.patch;
  std::vector<Tensor> embedded;
  embedded.reserve(static_cast<size_t>(per_side) * per_side);
  for (int py = 0; py < per_side; ++py) {
    for (int px = 0; px < per_side; ++px) {
      Tensor p = extract_patch(image, py * m.patch, px * m.patch, m.patch);
      embedded.push_back(add(matmul(p, m.patch_w), m.patch_b));
    }
  }
  Tensor stacked = concat_rows(embedded);
  const int n_patches = per_side * per_side;
  Tensor pool_w({1, n_patches},
                1.f / std::sqrt(static_cast<float>(n_patches)));
  Tensor pooled = matmul(pool_w, stacked);
  Tensor hid = tanh(add(matmul(pooled, m.mlp_w1), m.mlp_b1));
  Tensor ctx = add(matmul(hid, m.mlp_w2), m.mlp_b2);
  Tensor h0 = tanh(add(matmul(ctx, m.init_w), m.init_b));
  return EncoderOut{ctx, hid, h0};
}

Tensor encode_image(const ToyVlm& m, const Tensor& image) {
  return encode(m, image).ctx;
}

DecoderStep decoder_step(const ToyVlm& m, const Tensor& h_prev, int tok,
                         const Tensor& ctx) {
  Tensor e = embedding_lookup(m.token_embed, tok);
  Tensor z = sigmoid(add(add(add(matmul(h_prev, m.gate_uz), matmul(e, m.gate_ez)),
                             matmul(ctx, m.gate_cz)),
                         m.gate_bz));
  Tensor r = sigmoid(add(add(add(matmul(h_prev, m.gate_ur), matmul(e, m.gate_er)),
                             matmul(ctx, m.gate_cr)),
                         m.gate_br));
  Tensor cand = tanh(add(add(add(matmul(mul(r, h_prev), m.gate_uh),
                                 matmul(e, m.gate_eh)),
                             matmul(ctx, m.gate_ch)),
                         m.gate_bh));
  Tensor ones({1, m.hidden}, 1.f);
  Tensor h = add(mul(sub(ones, z), h_prev), mul(z, cand));
  Tensor logits = add(matmul(h, m.out_w), m.out_b);
  Tensor probs = softmax(logits);
  return DecoderStep{h, probs, logits};
}

Tensor caption_nll(const ToyVlm& m, const EncoderOut& enc,
                   const std::vector<int>& caption) {
  if (caption.empty()) throw UsageError("caption_nll: empty caption");
  Tensor h = enc.h0;
  int prev = m.vocab.bos_id;
  std::vector<Tensor> terms;
  terms.reserve(caption.size());
  for (int target : caption) {
    DecoderStep step = decoder_step(m, h, prev, enc.ctx);
    terms.push_back(pick(log(step.probs), target));
    h = step.h;
    prev = target;
  }
  return scale(sum(concat_rows(terms)), -1.f);
}

TrainReport train(ToyVlm& m, const std::vector<SynthSample>& data, int epochs,
                  float lr, uint64_t seed) {
  if (data.empty()) throw UsageError("train: empty dataset");
  m.set_requires_grad(true);
  auto params = m.named_params();

  TrainReport report;
  Rng rng(seed);
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    // Fisher-Yates with the deterministic RNG
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_int(i)]);
    }
    double epoch_total = 0.0;
    for (size_t idx : order) {
      const SynthSample& s = data[idx];
      EncoderOut enc = encode(m, s.image);
      Tensor loss = caption_nll(m, enc, s.caption);
      const float value = loss.item();
      if (!std::isfinite(value)) {
        throw TrainingError("train: loss diverged at epoch " +
                            std::to_string(epoch));
      }
      epoch_total += value;
      if (lr != 0.f) {
        m.zero_grad();
        backward(loss);
        double norm2 = 0.0;
        for (auto& [name, t] : params) {
          if (!t->has_grad()) continue;
          for (float g : t->node()->grad) norm2 += static_cast<double>(g) * g;
        }
        const double norm = std::sqrt(norm2);
        const float clip =
            norm > 5.0 ? static_cast<float>(5.0 / norm) : 1.f;
        for (auto& [name, t] : params) {
          if (!t->has_grad()) continue;
          const auto& g = t->node()->grad;
          for (int i = 0; i < t->numel(); ++i) {
            t->data()[i] -= lr * clip * g[i];
          }
        }
      }
    }
    report.epoch_loss.push_back(epoch_total / static_cast<double>(data.size()));
  }
  report.epochs = epochs;
  report.final_loss = report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back();
  m.set_requires_grad(false);
  return report;
}

namespace {

constexpr char kCkptMagic[4] = {'V', 'V', 'L', 'M'};
constexpr uint32_t kCkptVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (!in) throw FormatError("checkpoint: truncated header");
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const uint32_t n = read_u32(in);
  if (n > 4096) throw FormatError("checkpoint: oversized string");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw FormatError("checkpoint: truncated string");
  return s;
}

}  // namespace

void save_model(const ToyVlm& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("checkpoint: cannot open for writing: " + path);
  f.write(kCkptMagic, 4);
  write_u32(f, kCkptVersion);
  write_u32(f, static_cast<uint32_t>(m.d_model));
  write_u32(f, static_cast<uint32_t>(m.hidden));
  write_u32(f, static_cast<uint32_t>(m.enc_hidden));
  write_u32(f, static_cast<uint32_t>(m.patch));
  write_u32(f, static_cast<uint32_t>(m.vocab.size()));
  write_u32(f, static_cast<uint32_t>(m.vocab.pad_id));
  write_u32(f, static_cast<uint32_t>(m.vocab.bos_id));
  write_u32(f, static_cast<uint32_t>(m.vocab.eos_id));
  for (const std::string& tok : m.vocab.tokens) write_string(f, tok);
  for (auto& [name, t] : m.named_params()) {
    write_string(f, name);
    write_vft1(f, *t);
  }
  if (!f) throw FormatError("checkpoint: write failed");
}

ToyVlm load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("checkpoint: cannot open: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kCkptMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  if (read_u32(f) != kCkptVersion) {
    throw FormatError("checkpoint: unsupported version");
  }
  ToyVlm m;
  m.d_model = static_cast<int>(read_u32(f));
  m.hidden = static_cast<int>(read_u32(f));
  m.enc_hidden = static_cast<int>(read_u32(f));
  m.patch = static_cast<int>(read_u32(f));
  const uint32_t v = read_u32(f);
  if (v < 8) throw FormatError("checkpoint: vocabulary too small");
  m.vocab.pad_id = static_cast<int>(read_u32(f));
  m.vocab.bos_id = static_cast<int>(read_u32(f));
  m.vocab.eos_id = static_cast<int>(read_u32(f));
  m.vocab.tokens.resize(v);
  for (uint32_t i = 0; i < v; ++i) m.vocab.tokens[i] = read_string(f);
  for (auto& [name, t] : m.named_params()) {
    const std::string got = read_string(f);
    if (got != name) {
      throw FormatError("checkpoint: expected tensor '" + name + "', found '" +
                        got + "'");
    }
    *t = read_vft1(f);
  }
  m.check_finite();
  return m;
}

}  // namespace verbose
