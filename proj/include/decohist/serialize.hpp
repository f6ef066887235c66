#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace decohist::serialize {

// One double with 17 significant digits: enough for any value to parse back
// bit-for-bit, so repeated runs compare byte-identical.
std::string format_double(double value);

// One CSV data row: the values formatted by format_double, comma-joined,
// newline-terminated.
std::string csv_row(const std::vector<double>& values);

// Writes content to path through a temporary sibling file renamed into
// place: the target either keeps its old content or holds the complete new
// document, never a prefix. Missing parent directories are created.
void atomic_write(const std::filesystem::path& path, const std::string& content);

} // namespace decohist::serialize
