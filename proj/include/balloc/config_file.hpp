#pragma once

#include <string>
#include <utility>
#include <vector>

namespace balloc {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

// Flat key=value text: one key per line, '#' starts a comment, blank lines skipped.
std::vector<ConfigEntry> parse_key_values(const std::string& text);
std::string read_text_file(const std::string& path);

std::vector<std::string> split_list(const std::string& value, char sep = ',');
std::string trim(const std::string& s);
double parse_double(const std::string& s, const std::string& what);
long long parse_int(const std::string& s, const std::string& what);

}  // namespace balloc
