#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace jointud::binary {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
T byteswap_if_big(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

template <typename T>
void write(std::ostream& out, T value) {
  value = byteswap_if_big(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read(std::istream& in, const char* what) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw FormatError(std::string("truncated input while reading ") + what);
  return byteswap_if_big(value);
}

inline void write_floats(std::ostream& out, const float* data, size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(float)));
  } else {
    for (size_t i = 0; i < count; ++i) write(out, data[i]);
  }
}

inline void read_floats(std::istream& in, float* data, size_t count, const char* what) {
  if (!in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(float))))
    throw FormatError(std::string("truncated input while reading ") + what);
  if constexpr (std::endian::native == std::endian::big)
    for (size_t i = 0; i < count; ++i) data[i] = byteswap_if_big(data[i]);
}

inline void write_string(std::ostream& out, const std::string& s) {
  write<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, const char* what) {
  const uint32_t n = read<uint32_t>(in, what);
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw FormatError(std::string("truncated input while reading ") + what);
  return s;
}

}  // namespace jointud::binary
