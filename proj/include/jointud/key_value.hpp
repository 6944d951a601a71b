#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jointud {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "key = value" lines; blank lines and lines starting with '#' are skipped.
// Errors name `origin` and the line.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text, const std::string& origin);

// Binds config keys to fields so a struct can be set from and printed as flat
// text. Keys print in binding order.
class KeyValueSchema {
 public:
  void bind(std::string key, int& field);
  void bind(std::string key, double& field);
  void bind(std::string key, std::string& field);
  void bind(std::string key, std::function<void(const std::string&)> set, std::function<std::string()> get);

  bool has(std::string_view key) const;
  // Throws ConfigError for unknown keys and unparsable values.
  void set(std::string_view key, const std::string& value);
  std::string to_text() const;

 private:
  struct Field {
    std::string key;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
  };
  std::vector<Field> fields_;
};

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace jointud
