#include "reiterate/cache.hpp"

#include "reiterate/coeff.hpp"
#include "reiterate/grid_io.hpp"

#include <json.hpp>

namespace reiterate {

using nlohmann::json;

std::uint64_t CacheKey::sample_hash() const { return fnv1a("L" + std::to_string(level) + "|" + sample, field_hash); }

CorrectorCache::CorrectorCache(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path CorrectorCache::bin_path(const CacheKey& key) const {
  return root_ / hex64(key.field_hash) / ("L" + std::to_string(key.level)) / (hex64(key.sample_hash()) + ".bin");
}

std::filesystem::path CorrectorCache::json_path(const CacheKey& key) const {
  return root_ / hex64(key.field_hash) / ("L" + std::to_string(key.level)) / (hex64(key.sample_hash()) + ".json");
}

double CorrectorCache::hit_rate() const {
  const double total = double(hits_) + double(misses_);
  return total > 0 ? double(hits_) / total : 0.0;
}

void CorrectorCache::evict(const CacheKey& key) {
  std::lock_guard<std::mutex> lock(write_mutex_);
  std::error_code ec;
  std::filesystem::remove(json_path(key), ec);
  std::filesystem::remove(bin_path(key), ec);
  ++evictions_;
}

std::optional<CachePayload> CorrectorCache::get(const CacheKey& key, const Grid& cell_grid) {
  if (!enabled()) {
    ++misses_;
    return std::nullopt;
  }
  const auto side = read_file(json_path(key));
  if (!side) {
    ++misses_;
    return std::nullopt;
  }
  try {
    const json j = json::parse(side->begin(), side->end());
    if (j.at("sample").get<std::string>() != key.sample || j.at("level").get<int>() != key.level)
      throw ValidationError("cache: key mismatch");
    const auto bytes = read_file(bin_path(key));
    if (!bytes) throw ValidationError("cache: missing payload");
    if (j.at("bin_fnv").get<std::string>() != hex64(fnv1a(std::string(bytes->begin(), bytes->end()))))
      throw ValidationError("cache: checksum mismatch");
    CachePayload p{Tensor(), decode(*bytes, &cell_grid), {}, 0.0, 0};
    const int d = cell_grid.dim();
    const auto t = j.at("tensor").get<std::vector<double>>();
    if (static_cast<int>(t.size()) != d * d) throw ValidationError("cache: tensor size");
    p.effective = Tensor(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) p.effective(a, b) = t[a * d + b];
    p.frozen = j.at("frozen").get<std::vector<double>>();
    p.residual = j.at("residual").get<double>();
    p.iterations = j.at("iterations").get<int>();
    ++hits_;
    return p;
  } catch (const std::exception&) {
    evict(key);
    ++misses_;
    return std::nullopt;
  }
}

void CorrectorCache::put(const CacheKey& key, const CachePayload& p) {
  if (!enabled()) return;
  const std::vector<char> bytes = encode(p.correctors);
  json j;
  j["sample"] = key.sample;
  j["level"] = key.level;
  j["field_hash"] = hex64(key.field_hash);
  std::vector<double> t;
  for (int a = 0; a < p.effective.rows(); ++a)
    for (int b = 0; b < p.effective.cols(); ++b) t.push_back(p.effective(a, b));
  j["tensor"] = t;
  j["frozen"] = p.frozen;
  j["residual"] = p.residual;
  j["iterations"] = p.iterations;
  j["bin_fnv"] = hex64(fnv1a(std::string(bytes.begin(), bytes.end())));
  std::lock_guard<std::mutex> lock(write_mutex_);
  write_file_atomic(bin_path(key), bytes);
  write_file_atomic(json_path(key), j.dump(1));
}

std::uintmax_t CorrectorCache::clean(const std::filesystem::path& root) {
  std::error_code ec;
  if (!std::filesystem::exists(root, ec)) return 0;
  return std::filesystem::remove_all(root, ec);
}

}  // namespace reiterate
