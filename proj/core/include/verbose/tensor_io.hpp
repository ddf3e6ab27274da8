#pragma once

#include <iosfwd>
#include <string>

#include "verbose/tensor.hpp"

namespace verbose {

// Portable tensor container "VFT1": 4-byte magic, u32 rank, u32 dims...,
// little-endian f32 payload. Throws FormatError on bad magic / truncation.
void write_vft1(std::ostream& out, const Tensor& t);
void write_vft1_file(const std::string& path, const Tensor& t);
Tensor read_vft1(std::istream& in);
Tensor read_vft1_file(const std::string& path);

}  // namespace verbose
