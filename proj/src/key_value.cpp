#include "jointud/key_value.hpp"

#include <charconv>
#include <cmath>

namespace jointud {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || p != value.data() + value.size() || value.empty())
    throw ConfigError("invalid value '" + value + "' for key " + key);
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(out)) throw ConfigError("non-finite value for key " + key);
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text, const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  int line_no = 0;
  while (!text.empty()) {
    size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key=value");
    std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, p);
}

void KeyValueSchema::bind(std::string key, int& field) {
  auto set = [&field, key](const std::string& v) { field = parse_number<int>(key, v); };
  bind(std::move(key), set,
       [&field] { return std::to_string(field); });
}

void KeyValueSchema::bind(std::string key, double& field) {
  auto set = [&field, key](const std::string& v) { field = parse_number<double>(key, v); };
  bind(std::move(key), set,
       [&field] { return format_double(field); });
}

void KeyValueSchema::bind(std::string key, std::string& field) {
  bind(std::move(key), [&field](const std::string& v) { field = v; }, [&field] { return field; });
}

void KeyValueSchema::bind(std::string key, std::function<void(const std::string&)> set,
                          std::function<std::string()> get) {
  fields_.push_back({std::move(key), std::move(set), std::move(get)});
}

bool KeyValueSchema::has(std::string_view key) const {
  for (const auto& f : fields_)
    if (f.key == key) return true;
  return false;
}

void KeyValueSchema::set(std::string_view key, const std::string& value) {
  for (auto& f : fields_)
    if (f.key == key) return f.set(value);
  throw ConfigError("unknown configuration key: " + std::string(key));
}

std::string KeyValueSchema::to_text() const {
  std::string out;
  for (const auto& f : fields_) out += f.key + "=" + f.get() + "\n";
  return out;
}

}  // namespace jointud
