#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace coherent {

/// Formats a double with 17 significant digits, enough for a lossless
/// text round trip of any IEEE-754 binary64 value.
std::string format_double(double v);

/// Writes through a temporary file in the target directory and renames it
/// into place on success, so a failed run never leaves a partial file.
void atomic_write_file(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer);

/// Splits one CSV record. Comma separation without quoting; a trailing
/// carriage return is stripped.
std::vector<std::string> split_csv_line(const std::string& line);

/// Locale-independent double parse of a whole field.
bool parse_double(const std::string& field, double& out);

}  // namespace coherent
