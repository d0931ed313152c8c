#pragma once

#include "reiterate/grid.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace reiterate {

/// Identifies one cell solve. `sample` is a canonical text naming the level,
/// frozen slow arguments, resolution, tolerance and upstream sampling; it is
/// stored in the sidecar and compared on lookup, so hash collisions are
/// never served.
struct CacheKey {
  std::uint64_t field_hash = 0;
  int level = 0;
  std::string sample;
  std::uint64_t sample_hash() const;
};

/// What a cell solve leaves behind.
struct CachePayload {
  Tensor effective;
  GridFunctiond correctors;  // vector-shaped: component j holds chi^{j+1}
  std::vector<double> frozen;
  double residual = 0.0;
  int iterations = 0;
};

/// On-disk corrector cache: `<root>/<field-hash>/L<level>/<sample-hash>.{bin,json}`.
///
/// The `.bin` file holds the correctors in the grid binary format; the JSON
/// sidecar holds the key, the tensor and a checksum of the `.bin` bytes and
/// is written last, so an entry is visible only once both files are in
/// place. Entries that fail to parse or verify are deleted and reported as
/// misses. Reads may run concurrently; writes are serialized.
class CorrectorCache {
public:
  CorrectorCache() = default;  // disabled: every lookup misses, puts are dropped
  explicit CorrectorCache(std::filesystem::path root);

  bool enabled() const { return !root_.empty(); }
  const std::filesystem::path& root() const { return root_; }

  std::optional<CachePayload> get(const CacheKey& key, const Grid& cell_grid);
  void put(const CacheKey& key, const CachePayload& payload);

  std::filesystem::path bin_path(const CacheKey& key) const;
  std::filesystem::path json_path(const CacheKey& key) const;

  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  std::uint64_t evictions() const { return evictions_; }
  double hit_rate() const;

  /// Removes the cache directory; returns the number of files deleted (0 when
  /// there was nothing to remove).
  static std::uintmax_t clean(const std::filesystem::path& root);

private:
  void evict(const CacheKey& key);

  std::filesystem::path root_;
  std::mutex write_mutex_;
  std::atomic<std::uint64_t> hits_{0}, misses_{0}, evictions_{0};
};

}  // namespace reiterate
