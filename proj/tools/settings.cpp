#include "settings.hpp"

#include <fstream>
#include <sstream>

#include "simlr/error.hpp"
#include "simlr/preprocess.hpp"

namespace simlr::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("--config", "cannot read " + path.string());
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw UsageError("--config", path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return entries;
}

bool is_informational_key(const std::string& key) {
  return key == "command" || key == "version" || key == "wall-clock-seconds" || key == "iterations" ||
         key == "converged" || key == "samples" || key == "dropped-samples" || key.rfind("fit-", 0) == 0;
}

void Manifest::add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }

void Manifest::add(const std::string& key, double value) { add(key, format_real(value)); }

void Manifest::add(const std::string& key, long long value) { add(key, std::to_string(value)); }

void Manifest::add(const std::string& key, const std::vector<std::string>& values) {
  std::string joined;
  for (std::size_t i = 0; i < values.size(); ++i) joined += (i ? "," : "") + values[i];
  add(key, joined);
}

void Manifest::add(const std::string& key, const std::vector<double>& values) {
  std::vector<std::string> text;
  for (double v : values) text.push_back(format_real(v));
  add(key, text);
}

void Manifest::add(const std::string& key, const std::vector<int>& values) {
  std::vector<std::string> text;
  for (int v : values) text.push_back(std::to_string(v));
  add(key, text);
}

void Manifest::write(const std::filesystem::path& path) const {
  std::ostringstream out;
  out << "# simlr run manifest; pass back with --config to rerun\n";
  for (const auto& [key, value] : entries_) out << key << '=' << value << '\n';
  write_text(path, out.str());
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace simlr::cli
