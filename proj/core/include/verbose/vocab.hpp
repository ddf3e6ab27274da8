#pragma once

#include <string>
#include <vector>

namespace verbose {

struct Vocab {
  std::vector<std::string> tokens;
  int pad_id = 0;
  int bos_id = 1;
  int eos_id = 2;

  int size() const { return static_cast<int>(tokens.size()); }
  const std::string& word(int id) const { return tokens.at(id); }
  int id_of(const std::string& w) const;  // -1 if absent

  std::string detokenize(const std::vector<int>& ids) const;

  // True iff ids parse as "a <color> <shape> (and a <color> <shape>)* <eos>".
  bool matches_grammar(const std::vector<int>& ids) const;
};

// The built-in caption vocabulary: pad/bos/eos, "a", "and", 15 color words,
// 12 shape words (V = 32). The color and shape id ranges are contiguous.
const Vocab& default_vocab();
int first_color_id();
int num_colors();
int first_shape_id();
int num_shapes();

// RGB triple for a color word (indexed 0..num_colors()-1).
const float* color_rgb(int color_index);

}  // namespace verbose
