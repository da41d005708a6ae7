#include "driftqa/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "driftqa/error.hpp"

namespace driftqa {

namespace csv {

namespace {

std::vector<std::string> split_record(const std::string& text, std::size_t& pos,
                                      std::size_t line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  while (pos < text.size()) {
    char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          pos += 2;
          continue;
        }
        quoted = false;
        ++pos;
        continue;
      }
      field.push_back(c);
      ++pos;
      continue;
    }
    if (c == '"' && field.empty() && !field_was_quoted) {
      quoted = true;
      field_was_quoted = true;
      ++pos;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
      ++pos;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
      ++pos;
      break;
    } else {
      field.push_back(c);
      ++pos;
    }
  }
  if (quoted) {
    throw Error(ErrorKind::Parse, "unterminated quoted field on line " + std::to_string(line));
  }
  fields.push_back(std::move(field));
  return fields;
}

bool blank(const std::vector<std::string>& rec) { return rec.size() == 1 && rec[0].empty(); }

}  // namespace

Table parse(const std::string& text) {
  Table table;
  std::size_t pos = 0;
  std::size_t line = 1;
  // Skip a UTF-8 byte order mark.
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) pos = 3;
  while (pos < text.size()) {
    auto rec = split_record(text, pos, line);
    if (blank(rec)) {
      ++line;
      continue;
    }
    if (table.header.empty()) {
      table.header = std::move(rec);
    } else {
      if (rec.size() != table.header.size()) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line) + " has " +
                                          std::to_string(rec.size()) + " fields, header has " +
                                          std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(rec));
    }
    ++line;
  }
  if (table.header.empty()) throw Error(ErrorKind::EmptyInput, "CSV has no header row");
  return table;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  if (text.empty()) throw Error(ErrorKind::EmptyInput, path.string() + " is empty");
  return parse(text);
}

std::string escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

bool parse_double(const std::string& text, double& out) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && (text[b] == ' ' || text[b] == '\t')) ++b;
  while (e > b && (text[e - 1] == ' ' || text[e - 1] == '\t')) --e;
  if (b == e) return false;
  const char* first = text.data() + b;
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, text.data() + e, out);
  return ec == std::errc{} && ptr == text.data() + e;
}

}  // namespace csv
}  // namespace driftqa
