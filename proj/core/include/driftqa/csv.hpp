#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace driftqa::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180-style reader: comma separated, double-quote escaping, CRLF tolerant.
// Throws Error{Io} when the file cannot be opened, Error{EmptyInput} when it
// has no header, and Error{Parse} on ragged rows.
Table read(const std::filesystem::path& path);
Table parse(const std::string& text);

std::string escape(const std::string& field);

// Shortest text that parses back to the identical double.
std::string format_double(double value);

// Strict numeric parse of a whole cell; false on trailing garbage or empty.
bool parse_double(const std::string& text, double& out);

}  // namespace driftqa::csv
