#pragma once

#include <string>
#include <vector>

namespace tabrep {

// RFC-4180 parsing: quoted fields, doubled quotes, embedded separators and
// line breaks. Input must be UTF-8; a leading BOM is stripped.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

std::vector<std::vector<std::string>> read_csv_file(const std::string& path);

// Quotes a field only when it contains a comma, quote or line break.
std::string csv_escape(const std::string& field);

std::string csv_join_row(const std::vector<std::string>& fields);

}  // namespace tabrep
