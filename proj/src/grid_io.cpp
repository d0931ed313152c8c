#include "reiterate/grid_io.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

namespace reiterate {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::vector<char>& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get_le(const std::vector<char>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ValidationError("grid file: truncated payload");
  char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

std::vector<char> encode(const GridFunctiond& f) {
  const Grid& g = f.grid();
  std::vector<char> out;
  out.reserve(16 + 4 * g.dim() + 8 * f.values().size());
  for (char c : {'R', 'H', 'G', 'F'}) out.push_back(c);
  put_le<std::uint16_t>(out, kGridFileVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(g.dim()));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(f.shape()));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(g.topology()));
  out.insert(out.end(), 7, '\0');
  for (int a = 0; a < g.dim(); ++a) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.nodes(a)));
  for (Index k = 0; k < f.size(); ++k)
    for (int c = 0; c < f.components(); ++c) put_le<double>(out, f.values()(k, c));
  return out;
}

GridFunctiond decode(const std::vector<char>& bytes, const Grid* expected) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "RHGF", 4) != 0)
    throw ValidationError("grid file: bad magic");
  std::size_t pos = 4;
  const auto version = get_le<std::uint16_t>(bytes, pos);
  if (version != kGridFileVersion) throw ValidationError("grid file: unsupported version");
  const int d = get_le<std::uint8_t>(bytes, pos);
  const auto shape_code = get_le<std::uint8_t>(bytes, pos);
  const auto topo_code = get_le<std::uint8_t>(bytes, pos);
  if (d < 1 || d > 2) throw ValidationError("grid file: dimension must be 1 or 2");
  if (shape_code < 1 || shape_code > 3) throw ValidationError("grid file: unknown shape code");
  if (topo_code > 1) throw ValidationError("grid file: unknown topology code");
  pos = 16;
  std::vector<int> nodes(d);
  for (int a = 0; a < d; ++a) nodes[a] = static_cast<int>(get_le<std::uint32_t>(bytes, pos));
  const auto shape = static_cast<Shape>(shape_code);
  const auto topo = static_cast<Topology>(topo_code);

  std::optional<Grid> grid;
  if (expected) {
    if (expected->dim() != d || expected->topology() != topo)
      throw ValidationError("grid file: topology or dimension differs from the expected grid");
    for (int a = 0; a < d; ++a)
      if (expected->nodes(a) != nodes[a]) throw ValidationError("grid file: node counts differ from the expected grid");
    grid = *expected;
  } else if (topo == Topology::periodic) {
    grid = Grid::periodic(nodes);
  } else {
    throw ValidationError("grid file: box functions need the expected grid to restore corners");
  }

  const int comps = component_count(shape, d);
  const std::size_t want = pos + 8ull * grid->node_count() * comps;
  if (bytes.size() != want) throw ValidationError("grid file: payload size mismatch");
  GridFunctiond f(*grid, shape);
  for (Index k = 0; k < f.size(); ++k)
    for (int c = 0; c < comps; ++c) f.values()(k, c) = get_le<double>(bytes, pos);
  return f;
}

namespace {

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  static std::atomic<unsigned long> counter{0};
  std::ostringstream name;
  name << "." << path.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
       << "." << counter++;
  return path.parent_path() / name.str();
}

void write_bytes_atomic(const std::filesystem::path& path, const char* data, std::size_t size) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(data, static_cast<std::streamsize>(size));
    out.flush();
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  write_bytes_atomic(path, content.data(), content.size());
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& content) {
  write_bytes_atomic(path, content.data(), content.size());
}

std::optional<std::vector<char>> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_grid_function(const std::filesystem::path& path, const GridFunctiond& f) {
  write_file_atomic(path, encode(f));
}

GridFunctiond read_grid_function(const std::filesystem::path& path, const Grid* expected) {
  auto bytes = read_file(path);
  if (!bytes) throw ValidationError("cannot read grid file " + path.string());
  return decode(*bytes, expected);
}

}  // namespace reiterate
