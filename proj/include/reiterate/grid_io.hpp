#pragma once

#include "reiterate/grid.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace reiterate {

/// Binary GridFunction layout (all little-endian):
///
///   bytes 0-3   magic "RHGF"
///   bytes 4-5   version (u16, currently 1)
///   byte  6     dimension d
///   byte  7     shape (1 scalar, 2 vector, 3 matrix)
///   byte  8     topology (0 periodic, 1 box)
///   bytes 9-15  reserved, zero
///   d x u32     stored node count per axis
///   f64 values  row-major over [node][component]
///
/// Box corner coordinates are not part of the file; callers reading a box
/// function supply the grid they expect.
inline constexpr std::uint16_t kGridFileVersion = 1;

std::vector<char> encode(const GridFunctiond& f);

/// Decodes a periodic function, or any function when `expected` is given
/// (its topology and node counts must match). Throws ValidationError on
/// malformed input.
GridFunctiond decode(const std::vector<char>& bytes, const Grid* expected = nullptr);

/// Atomic write: the payload goes to a sibling temp file that is renamed
/// into place.
void write_grid_function(const std::filesystem::path& path, const GridFunctiond& f);
GridFunctiond read_grid_function(const std::filesystem::path& path, const Grid* expected = nullptr);

/// Atomic text write used by every sidecar, CSV and manifest.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& content);
std::optional<std::vector<char>> read_file(const std::filesystem::path& path);

}  // namespace reiterate
