#include "latentface/kv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "latentface/error.hpp"

namespace latentface {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view text, char separator) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(separator, start);
    parts.push_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return parts;
}

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

double parse_double(std::string_view text) {
  const std::string cleaned = trim(text);
  double value = 0.0;
  const auto* begin = cleaned.data();
  const auto* end = begin + cleaned.size();
  // from_chars rejects a leading '+'.
  if (begin != end && *begin == '+') {
    ++begin;
  }
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    throw InvalidArgument("not a number: '" + cleaned + "'");
  }
  return value;
}

long long parse_int(std::string_view text) {
  const std::string cleaned = trim(text);
  long long value = 0;
  const auto result = std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), value);
  if (result.ec != std::errc() || result.ptr != cleaned.data() + cleaned.size()) {
    throw InvalidArgument("not an integer: '" + cleaned + "'");
  }
  return value;
}

KeyValueDocument KeyValueDocument::parse(std::string_view text) {
  KeyValueDocument doc;
  std::istringstream stream{std::string(text)};
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') {
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("line " + std::to_string(line_number) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    if (key.empty()) {
      throw InvalidArgument("line " + std::to_string(line_number) + ": empty key");
    }
    doc.set(key, trim(std::string_view(stripped).substr(eq + 1)));
  }
  return doc;
}

KeyValueDocument KeyValueDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void KeyValueDocument::set(const std::string& key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(key, std::move(value));
}

void KeyValueDocument::set(const std::string& key, double value) { set(key, format_double(value)); }

void KeyValueDocument::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

bool KeyValueDocument::contains(std::string_view key) const { return get(key).has_value(); }

std::optional<std::string> KeyValueDocument::get(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) {
      return v;
    }
  }
  return std::nullopt;
}

std::string KeyValueDocument::require(std::string_view key) const {
  auto value = get(key);
  if (!value) {
    throw InvalidArgument("missing key '" + std::string(key) + "'");
  }
  return *value;
}

double KeyValueDocument::require_double(std::string_view key) const { return parse_double(require(key)); }

long long KeyValueDocument::require_int(std::string_view key) const { return parse_int(require(key)); }

double KeyValueDocument::get_double(std::string_view key, double fallback) const {
  const auto value = get(key);
  return value ? parse_double(*value) : fallback;
}

long long KeyValueDocument::get_int(std::string_view key, long long fallback) const {
  const auto value = get(key);
  return value ? parse_int(*value) : fallback;
}

std::string KeyValueDocument::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

void KeyValueDocument::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << to_string();
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

} // namespace latentface
