#include "verbose/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "verbose/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "VFT1 I/O assumes a little-endian host");
static_assert(sizeof(float) == 4);

namespace verbose {

namespace {

constexpr char kMagic[4] = {'V', 'F', 'T', '1'};
constexpr uint32_t kMaxRank = 16;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (!in) throw FormatError("VFT1: truncated header");
  return v;
}

}  // namespace

void write_vft1(std::ostream& out, const Tensor& t) {
  out.write(kMagic, 4);
  write_u32(out, static_cast<uint32_t>(t.shape().size()));
  for (int d : t.shape()) write_u32(out, static_cast<uint32_t>(d));
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel()) * 4);
  if (!out) throw FormatError("VFT1: write failed");
}

void write_vft1_file(const std::string& path, const Tensor& t) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("VFT1: cannot open for writing: " + path);
  write_vft1(f, t);
}

Tensor read_vft1(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("VFT1: bad magic");
  }
  const uint32_t rank = read_u32(in);
  if (rank == 0 || rank > kMaxRank) throw FormatError("VFT1: bad rank");
  Shape shape(rank);
  for (uint32_t i = 0; i < rank; ++i) {
    const uint32_t d = read_u32(in);
    if (d == 0) throw FormatError("VFT1: zero dimension");
    shape[i] = static_cast<int>(d);
  }
  const int n = shape_numel(shape);
  std::vector<float> data(n);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(n) * 4);
  if (!in) throw FormatError("VFT1: truncated payload");
  return Tensor(std::move(shape), std::move(data));
}

Tensor read_vft1_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("VFT1: cannot open: " + path);
  return read_vft1(f);
}

}  // namespace verbose
