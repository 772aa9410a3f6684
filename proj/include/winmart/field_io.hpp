#pragma once

// Portable field file ("MAFG"), little-endian:
//
//   offset  size   field
//   0       4      magic "MAFG"
//   4       1      version (1)
//   5       1      dimension d
//   6       8      level C (f64)
//   14      8      spacing h (f64)
//   22      8      node count n (u64)
//   30      n*d*8  node coordinates, row-major lattice order (f64 each)
//   ..      n*8    node values, same order (f64 each)
//   ..      4      CRC32 (IEEE) of bytes [4, end-of-values)
//
// Readers rebuild the grid from (d, C, h) and verify the stored coordinates
// bit-for-bit, so a written file round-trips exactly.

#include "winmart/field.hpp"

#include <cstdint>
#include <string>

namespace winmart {

class FieldIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void write_field(const std::string& path, const ScalarField& field);
ScalarField read_field(const std::string& path);

/// CRC32 (IEEE 802.3, reflected, poly 0xEDB88320).
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

}  // namespace winmart
