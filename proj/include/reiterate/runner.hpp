#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace reiterate {

inline constexpr const char* kToolkitVersion = "0.1.0";

enum ExitStatus : int { exit_ok = 0, exit_internal = 1, exit_validation = 2, exit_solver = 3 };

struct RunOptions {
  std::string subcommand;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> cache;
  int jobs = 1;
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand, writing a manifest even on failure once the output
/// directory is known. Messages go to `log`, errors to `err`.
int run(const RunOptions& options, std::ostream& log, std::ostream& err);

/// 17 significant digits, `.` decimal separator; NaN becomes an empty field.
std::string csv_number(double v);

/// RFC 4180 table: CRLF line ends, fields quoted only when needed.
class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> header);
  void add(const std::vector<double>& row);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

/// --cache, then REITERATE_CACHE, then the config's `cache`, then <out>/cache.
std::filesystem::path resolve_cache_dir(const std::optional<std::filesystem::path>& flag, const std::string& config_cache,
                                        const std::filesystem::path& out_dir);

}  // namespace reiterate
