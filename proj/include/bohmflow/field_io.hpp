#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "bohmflow/wave_field.hpp"

namespace bohmflow {

// Binary snapshot layout (all little-endian):
//   char[4]  magic "BFWF"
//   u32      format version (1)
//   u8       mode tag (0 quantum, 1 optics)
//   u8       rank (1 or 2)
//   u16      reserved (0)
//   rank x { f64 min, f64 max, u64 n }   x axis first
//   f64      param, f64 hbar, f64 mass
//   payload  size() x { f64 re, f64 im }  row-major, x fastest
inline constexpr char kSnapshotMagic[4] = {'B', 'F', 'W', 'F'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

void write_snapshot(std::ostream& out, const WaveField& field);
WaveField read_snapshot(std::istream& in);
void save_snapshot(const std::filesystem::path& path, const WaveField& field);
WaveField load_snapshot(const std::filesystem::path& path);

/// CSV with header "x,re,im" (or "x,y,re,im"); 17 significant digits.
void write_field_csv(std::ostream& out, const WaveField& field);
/// Reads a 1D "x,re,im" CSV; x must form a uniform power-of-two grid.
WaveField read_field_csv(std::istream& in, Mode mode = Mode::quantum, Units units = {});

/// FNV-1a 64-bit digest, hex encoded; used for manifest checksums.
std::string fnv1a_hex(std::string_view bytes);
std::string file_checksum(const std::filesystem::path& path);

/// Shortest-roundtrip-safe formatting with 17 significant digits.
std::string format_double(double v);

}  // namespace bohmflow
