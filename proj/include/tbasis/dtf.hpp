#pragma once

#include <filesystem>
#include <istream>
#include <ostream>

#include "tbasis/dense_tensor.hpp"

namespace tbasis {

// DTF1 binary tensor format, used for all tensor I/O:
//   bytes 0..3   magic "DTF1"
//   u32  LE      mode count d
//   d x u64 LE   mode sizes
//   then product(shape) IEEE-754 doubles, little-endian, row-major.

void write_dtf1(std::ostream& os, const DenseTensor& t);
DenseTensor read_dtf1(std::istream& is);

// File variants; `save` writes a temp file and renames it into place.
void save_dtf1(const std::filesystem::path& path, const DenseTensor& t);
DenseTensor load_dtf1(const std::filesystem::path& path);

// Atomic write helper shared by the model writer.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace tbasis
