#include "srn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace srn {

namespace {

constexpr char kMagic[4] = {'S', 'P', 'K', 'R'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (is.gcount() != 4) throw std::runtime_error("checkpoint: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  if (is.gcount() != 2) throw std::runtime_error("checkpoint: truncated file");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

}  // namespace

void save_checkpoint(const std::vector<NamedTensor>& tensors, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + path.string());
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    if (t.name.size() > 0xffff) throw std::runtime_error("checkpoint: tensor name too long");
    put_u16(out, static_cast<std::uint16_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    out.put(0);  // dtype f32
    out.put(static_cast<char>(t.shape.size()));
    std::size_t n = 1;
    for (int d : t.shape) {
      put_u32(out, static_cast<std::uint32_t>(d));
      n *= static_cast<std::size_t>(d);
    }
    if (n != t.data.size()) throw std::runtime_error("checkpoint: shape/payload mismatch");
    for (float f : t.data) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      put_u32(out, u);
    }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path.string());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  const std::uint32_t version = read_u32(in);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t count = read_u32(in);

  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const std::uint16_t name_len = read_u16(in);
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    if (in.gcount() != name_len) throw std::runtime_error("checkpoint: truncated file");
    const int dtype = in.get();
    if (dtype != 0) throw std::runtime_error("checkpoint: unsupported dtype");
    const int rank = in.get();
    if (rank < 0 || rank > 8) throw std::runtime_error("checkpoint: bad rank");
    std::size_t n = 1;
    for (int r = 0; r < rank; ++r) {
      const std::uint32_t d = read_u32(in);
      t.shape.push_back(static_cast<int>(d));
      n *= d;
    }
    t.data.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::uint32_t u = read_u32(in);
      float f;
      std::memcpy(&f, &u, 4);
      t.data[j] = f;
    }
    tensors.push_back(std::move(t));
  }
  return tensors;
}

}  // namespace srn
