#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>

#include "hcpi/core/error.hpp"

namespace hcpi::trainer {

/// Shortest round-trip text for a double; identical bits give identical text.
inline std::string format_number(double x) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

/// Append-only CSV writer. A new file gets the header; an existing one must
/// already start with the same header.
class CsvWriter {
 public:
  CsvWriter() = default;
  CsvWriter(const std::filesystem::path& path, std::string_view header) : path_(path) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    if (!fresh) {
      std::ifstream in(path);
      std::string first;
      std::getline(in, first);
      if (first != header) throw ConfigError("csv '" + path.string() + "' has a different header");
    }
    out_.open(path, std::ios::app);
    if (!out_) throw ConfigError("cannot open '" + path.string() + "' for writing");
    if (fresh) out_ << header << '\n';
    out_.flush();
  }

  bool is_open() const { return out_.is_open(); }

  template <typename... Ts>
  void row(const Ts&... values) {
    if (!out_.is_open()) return;
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(values), first = false), ...);
    out_ << '\n';
    out_.flush();
  }

 private:
  template <typename T>
  static std::string cell(const T& v) {
    if constexpr (std::is_same_v<T, bool>) return v ? "1" : "0";
    else if constexpr (std::is_floating_point_v<T>) return format_number(static_cast<double>(v));
    else if constexpr (std::is_integral_v<T>) return std::to_string(v);
    else return std::string(v);
  }

  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace hcpi::trainer
