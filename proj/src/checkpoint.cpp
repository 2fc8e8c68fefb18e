#include "qnn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "qnn/error.hpp"

namespace qnn {

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw IoError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  std::uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

constexpr char kMagic[4] = {'Q', 'N', 'N', '1'};

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot open '" + path + "' for writing");
  out.write(kMagic, 4);
  write_u32(out, static_cast<std::uint32_t>(store.size()));
  for (std::size_t k = 0; k < store.size(); ++k) {
    const ParamInfo& info = store.info(static_cast<int>(k));
    write_u32(out, static_cast<std::uint32_t>(info.name.size()));
    out.write(info.name.data(), static_cast<std::streamsize>(info.name.size()));
    write_u32(out, 2);
    write_u64(out, info.rows);
    write_u64(out, info.cols);
  }
  for (std::size_t k = 0; k < store.size(); ++k) {
    for (double v : store.value(static_cast<int>(k)).data()) write_f64(out, v);
  }
  if (!out) throw IoError("checkpoint: write failed for '" + path + "'");
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("checkpoint: bad magic in '" + path + "'");
  }
  const std::uint32_t count = read_u32(in);
  std::vector<ManifestEntry> entries;
  entries.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    ManifestEntry e;
    const std::uint32_t name_len = read_u32(in);
    e.name.resize(name_len);
    in.read(e.name.data(), name_len);
    if (!in) throw IoError("checkpoint: truncated manifest");
    const std::uint32_t rank = read_u32(in);
    for (std::uint32_t d = 0; d < rank; ++d) e.shape.push_back(read_u64(in));
    entries.push_back(std::move(e));
  }
  return entries;
}

void load_checkpoint(const std::string& path, ParamStore& store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("checkpoint: bad magic in '" + path + "'");
  }
  const std::uint32_t count = read_u32(in);
  if (count != store.size()) throw IoError("checkpoint: tensor count does not match model");
  std::vector<int> order;
  order.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rank = read_u32(in);
    std::vector<std::size_t> shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(read_u64(in));
    int idx = store.find(name);
    if (idx < 0) throw IoError("checkpoint: unknown tensor '" + name + "'");
    const ParamInfo& info = store.info(idx);
    if (shape.size() != 2 || shape[0] != info.rows || shape[1] != info.cols) {
      throw IoError("checkpoint: shape mismatch for '" + name + "'");
    }
    order.push_back(idx);
  }
  for (int idx : order) {
    for (double& v : store.value(idx).data()) v = read_f64(in);
  }
  if (!in) throw IoError("checkpoint: truncated payload");
}

}  // namespace qnn
