#include "tbasis/dtf.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace tbasis {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated stream");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated stream");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& is) {
  return std::bit_cast<double>(get_u64(is));
}

}  // namespace

void write_dtf1(std::ostream& os, const DenseTensor& t) {
  os.write("DTF1", 4);
  put_u32(os, static_cast<std::uint32_t>(t.order()));
  for (std::size_t s : t.shape()) put_u64(os, s);
  for (double v : t.data()) put_f64(os, v);
  if (!os) throw IoError("failed to write DTF1 stream");
}

DenseTensor read_dtf1(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "DTF1", 4) != 0) {
    throw IoError("bad DTF1 magic");
  }
  const std::uint32_t d = get_u32(is);
  if (d > 64) throw IoError("implausible DTF1 mode count");
  Shape shape(d);
  for (std::uint32_t k = 0; k < d; ++k) {
    shape[k] = static_cast<std::size_t>(get_u64(is));
    if (shape[k] == 0) throw IoError("DTF1 mode size must be positive");
  }
  const std::size_t count = shape_volume(shape);
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = get_f64(is);
  return DenseTensor(std::move(shape), std::move(data));
}

void atomic_write_file(const std::filesystem::path& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("rename to " + path.string() + " failed: " + ec.message());
  }
}

void save_dtf1(const std::filesystem::path& path, const DenseTensor& t) {
  std::ostringstream os(std::ios::binary);
  write_dtf1(os, t);
  atomic_write_file(path, os.str());
}

DenseTensor load_dtf1(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_dtf1(is);
}

}  // namespace tbasis
