#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "verbose/tensor.hpp"
#include "verbose/vocab.hpp"

namespace verbose {

inline constexpr int kImageChannels = 3;
inline constexpr int kImageSize = 32;

// One synthetic scene: a 3x32x32 image in [0,1] holding 1-3 colored shapes,
// captioned "a <color> <shape> [and a <color> <shape>] <eos>" (at most the
// first two shapes are mentioned, keeping captions within 10 tokens).
struct SynthSample {
  Tensor image;             // {3,32,32}
  std::vector<int> caption;  // token ids, ends with eos
};

// Deterministic per (seed, index): the n-th sample of seed s is identical
// regardless of how many samples are requested.
std::vector<SynthSample> synth_dataset(int n, uint64_t seed);

// Directory layout: img_%05d.vft1 per image plus captions.txt with one
// space-separated token-id line per image.
void save_dataset(const std::string& dir, const std::vector<SynthSample>& data);
std::vector<SynthSample> load_dataset(const std::string& dir);

}  // namespace verbose
