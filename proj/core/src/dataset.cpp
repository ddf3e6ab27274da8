#include "verbose/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "verbose/errors.hpp"
#include "verbose/rng.hpp"
#include "verbose/tensor_io.hpp"

namespace fs = std::filesystem;

namespace verbose {

namespace {

const char* kColorWords[] = {"red",     "green", "blue", "yellow", "purple",
                             "orange",  "cyan",  "magenta", "white", "gray",
                             "brown",   "pink",  "lime", "navy",   "teal"};
const float kColorRgb[][3] = {
    {1.0f, 0.1f, 0.1f}, {0.1f, 0.9f, 0.1f}, {0.15f, 0.2f, 1.0f},
    {1.0f, 0.9f, 0.1f}, {0.6f, 0.1f, 0.8f}, {1.0f, 0.55f, 0.05f},
    {0.05f, 0.9f, 0.9f}, {0.95f, 0.1f, 0.9f}, {0.95f, 0.95f, 0.95f},
    {0.5f, 0.5f, 0.5f}, {0.55f, 0.3f, 0.1f}, {1.0f, 0.6f, 0.75f},
    {0.65f, 1.0f, 0.1f}, {0.05f, 0.05f, 0.5f}, {0.05f, 0.5f, 0.5f}};
const char* kShapeWords[] = {"circle", "square", "triangle", "cross",
                             "ring",   "diamond", "bar",     "dot",
                             "box",    "star",    "stripe",  "wedge"};
constexpr int kNumColors = 15;
constexpr int kNumShapes = 12;

Vocab build_default_vocab() {
  Vocab v;
  v.tokens = {"<pad>", "<bos>", "<eos>", "a", "and"};
  for (const char* w : kColorWords) v.tokens.push_back(w);
  for (const char* w : kShapeWords) v.tokens.push_back(w);
  return v;
}

constexpr int kAId = 3;
constexpr int kAndId = 4;
constexpr int kColorBase = 5;
constexpr int kShapeBase = kColorBase + kNumColors;

bool inside_shape(int kind, float dx, float dy, float r) {
  const float ax = std::abs(dx), ay = std::abs(dy);
  switch (kind) {
    case 0:  // circle
      return dx * dx + dy * dy <= r * r;
    case 1:  // square
      return ax <= r && ay <= r;
    case 2:  // triangle (upward)
      return dy >= -r && dy <= r && ax <= (r - dy) * 0.5f + 0.5f;
    case 3:  // cross
      return (ax <= r * 0.35f && ay <= r) || (ay <= r * 0.35f && ax <= r);
    case 4:  // ring
      return dx * dx + dy * dy <= r * r &&
             dx * dx + dy * dy >= (0.55f * r) * (0.55f * r);
    case 5:  // diamond
      return ax + ay <= r;
    case 6:  // bar (horizontal)
      return ax <= r && ay <= r * 0.35f;
    case 7:  // dot
      return dx * dx + dy * dy <= (0.45f * r) * (0.45f * r);
    case 8:  // box outline
      return ax <= r && ay <= r && (ax >= 0.55f * r || ay >= 0.55f * r);
    case 9:  // star (plus and diagonal cross)
      return (ax <= r * 0.3f && ay <= r) || (ay <= r * 0.3f && ax <= r) ||
             (std::abs(ax - ay) <= r * 0.3f && ax <= r * 0.8f && ay <= r * 0.8f);
    case 10:  // stripe (vertical)
      return ay <= r && ax <= r * 0.35f;
    default:  // wedge (right triangle)
      return dx >= -r && dy >= -r && dx + dy <= 0.f && ax <= r && ay <= r;
  }
}

// Scenes are deliberately hard to read: textured background, intensity
// jitter and small sizes force the captioner to learn fine-grained,
// high-gain pixel features (the kind real captioners rely on).
SynthSample make_sample(uint64_t seed, int index) {
  Rng rng(mix_seed(seed, static_cast<uint64_t>(index)));
  Tensor img({kImageChannels, kImageSize, kImageSize}, 0.f);

  const float bg = rng.uniform_f(0.05f, 0.25f);
  for (float& px : img.vec()) px = bg + rng.uniform_f(-0.08f, 0.08f);

  const int k = 1 + static_cast<int>(rng.uniform_int(3));
  std::vector<std::pair<int, int>> drawn;  // (color, shape)
  for (int s = 0; s < k; ++s) {
    const int color = static_cast<int>(rng.uniform_int(kNumColors));
    const int shape = static_cast<int>(rng.uniform_int(kNumShapes));
    const float r = rng.uniform_f(3.f, 7.f);
    const float cx = rng.uniform_f(r + 1.f, kImageSize - r - 1.f);
    const float cy = rng.uniform_f(r + 1.f, kImageSize - r - 1.f);
    const float intensity = rng.uniform_f(0.45f, 1.f);
    for (int y = 0; y < kImageSize; ++y) {
      for (int x = 0; x < kImageSize; ++x) {
        if (inside_shape(shape, x - cx, y - cy, r)) {
          for (int c = 0; c < kImageChannels; ++c) {
            img.data()[(c * kImageSize + y) * kImageSize + x] =
                kColorRgb[color][c] * intensity;
          }
        }
      }
    }
    drawn.emplace_back(color, shape);
  }
  for (float& px : img.vec()) px = std::min(std::max(px, 0.f), 1.f);

  // Captions are ambiguous on purpose, like human annotations: mention count
  // and order vary, and words are occasionally wrong. The conditional token
  // distributions then keep entropy no matter how long the model trains.
  constexpr double kWordNoise = 0.12;
  int mentions = 1;
  if (k >= 2 && rng.uniform() < 0.85) mentions = 2;
  if (drawn.size() >= 2 && rng.uniform() < 0.5) {
    std::swap(drawn[0], drawn[1]);
  }
  std::vector<int> caption = {kAId};
  for (int s = 0; s < mentions; ++s) {
    if (s == 1) {
      caption.push_back(kAndId);
      caption.push_back(kAId);
    }
    int color = drawn[s].first;
    int shape = drawn[s].second;
    if (rng.uniform() < kWordNoise) {
      color = (color + 1 + static_cast<int>(rng.uniform_int(kNumColors - 1))) %
              kNumColors;
    }
    if (rng.uniform() < kWordNoise) {
      shape = (shape + 1 + static_cast<int>(rng.uniform_int(kNumShapes - 1))) %
              kNumShapes;
    }
    caption.push_back(kColorBase + color);
    caption.push_back(kShapeBase + shape);
  }
  caption.push_back(default_vocab().eos_id);
  return SynthSample{std::move(img), std::move(caption)};
}

}  // namespace

int Vocab::id_of(const std::string& w) const {
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == w) return static_cast<int>(i);
  }
  return -1;
}

std::string Vocab::detokenize(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (!out.empty()) out += ' ';
    out += word(id);
  }
  return out;
}

bool Vocab::matches_grammar(const std::vector<int>& ids) const {
  auto is_color = [](int id) {
    return id >= kColorBase && id < kColorBase + kNumColors;
  };
  auto is_shape = [](int id) {
    return id >= kShapeBase && id < kShapeBase + kNumShapes;
  };
  size_t i = 0;
  const size_t n = ids.size();
  while (true) {
    if (i + 2 >= n) return false;
    if (ids[i] != kAId || !is_color(ids[i + 1]) || !is_shape(ids[i + 2])) {
      return false;
    }
    i += 3;
    if (i < n && ids[i] == eos_id) return i + 1 == n;
    if (i < n && ids[i] == kAndId) {
      ++i;
      continue;
    }
    return false;
  }
}

const Vocab& default_vocab() {
  static const Vocab v = build_default_vocab();
  return v;
}

int first_color_id() { return kColorBase; }
int num_colors() { return kNumColors; }
int first_shape_id() { return kShapeBase; }
int num_shapes() { return kNumShapes; }
const float* color_rgb(int color_index) { return kColorRgb[color_index]; }

std::vector<SynthSample> synth_dataset(int n, uint64_t seed) {
  if (n < 1) throw UsageError("synth_dataset: n must be >= 1");
  std::vector<SynthSample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(make_sample(seed, i));
  return out;
}

void save_dataset(const std::string& dir, const std::vector<SynthSample>& data) {
  fs::create_directories(dir);
  std::ofstream captions(fs::path(dir) / "captions.txt");
  if (!captions) throw FormatError("dataset: cannot write captions.txt");
  char name[32];
  for (size_t i = 0; i < data.size(); ++i) {
    std::snprintf(name, sizeof(name), "img_%05zu.vft1", i);
    write_vft1_file((fs::path(dir) / name).string(), data[i].image);
    for (size_t j = 0; j < data[i].caption.size(); ++j) {
      if (j) captions << ' ';
      captions << data[i].caption[j];
    }
    captions << '\n';
  }
}

std::vector<SynthSample> load_dataset(const std::string& dir) {
  std::ifstream captions(fs::path(dir) / "captions.txt");
  if (!captions) throw FormatError("dataset: missing captions.txt in " + dir);
  std::vector<SynthSample> out;
  std::string line;
  char name[32];
  const int vocab_size = default_vocab().size();
  while (std::getline(captions, line)) {
    if (line.empty()) continue;
    SynthSample s;
    std::istringstream iss(line);
    int id;
    while (iss >> id) {
      if (id < 0 || id >= vocab_size) {
        throw FormatError("dataset: token id out of range in captions.txt");
      }
      s.caption.push_back(id);
    }
    std::snprintf(name, sizeof(name), "img_%05zu.vft1", out.size());
    s.image = read_vft1_file((fs::path(dir) / name).string());
    if (s.image.shape() != Shape{kImageChannels, kImageSize, kImageSize}) {
      throw FormatError("dataset: unexpected image shape");
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw FormatError("dataset: empty captions.txt");
  return out;
}

}  // namespace verbose
