#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace tamperkit {

// Runs fn(0..n-1) on up to `jobs` threads; rethrows the lowest-index failure.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// Minimal RFC 4180 CSV: quotes fields containing commas, quotes or newlines.
std::string csv_field(std::string_view value);
std::string csv_row(const std::vector<std::string>& fields);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by name; throws a Parse error if absent.
    std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
// Writes atomically enough for our purposes: creates parent directories, Io error on failure.
void write_text_file(const std::filesystem::path& path, std::string_view text);

// %.12g, the fixed numeric format of every CSV we write.
std::string format_number(double v);

}  // namespace tamperkit
