#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dataless {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

// Maximal runs of ASCII alphanumerics, lowercased.
std::vector<std::string> alnum_words(std::string_view s);

bool starts_with_icase(std::string_view s, std::string_view prefix);

// Lowercase hex SHA-256 of the raw bytes.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

// Shortest decimal that round-trips the double.
std::string format_double(double v);

// Calls fn(object, line_number) for every non-blank line. Lines that are not
// JSON objects raise MalformedRecordError naming the source and line.
void for_each_jsonl(std::istream& in, const std::string& source,
                    const std::function<void(const nlohmann::json&,
                                             std::size_t)>& fn);
void for_each_jsonl_file(const std::string& path,
                         const std::function<void(const nlohmann::json&,
                                                  std::size_t)>& fn);

// Required string member; throws MalformedRecordError when missing or of the
// wrong type.
std::string require_string(const nlohmann::json& obj, const char* key,
                           const std::string& source, std::size_t line);

// Opens `path` for appending, creating missing parent directories.
std::ofstream open_for_append(const std::string& path);

using WarningSink = std::function<void(const std::string&)>;

// Process-wide warning channel; stderr by default. An empty sink restores
// the default.
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

// Deterministic 64-bit generator utilities. std::uniform_int_distribution is
// implementation-defined, so sampling draws from SplitMix64 directly.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace dataless
