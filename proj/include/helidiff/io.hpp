#pragma once

#include <filesystem>
#include <string>

#include "helidiff/fokker_planck.hpp"

namespace helidiff {

namespace fs = std::filesystem;

/// Writes the values as little-endian 64-bit reals in storage order to
/// `bin`, plus a JSON sidecar next to it ({shape, box: {center, side}, time})
/// with the extension replaced by .json.
void write_grid(const DensityGrid& f, const fs::path& bin);

/// Writes the plane z = const through cell layer k as CSV with columns
/// x, y, f. The first line is a comment carrying the layout.
void write_slice_csv(const DensityGrid& f, int k, const fs::path& csv);

/// Loads a grid written by write_grid (path to the .bin or its sidecar) or a
/// slice written by write_slice_csv (a grid of shape [Nx, Ny, 1]).
/// Throws ConfigError on unreadable or inconsistent files.
DensityGrid load_density(const fs::path& path);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

/// Lower-case hex SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const fs::path& path);

}  // namespace helidiff
