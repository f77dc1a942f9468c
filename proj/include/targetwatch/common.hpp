#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tw {

inline constexpr std::string_view kVersion = "0.4.0";

/// Malformed or inconsistent input data (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or out-of-range parameter (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A prerequisite file produced by an earlier step is absent (CLI exit code 2).
class MissingArtifact : public std::runtime_error {
 public:
  explicit MissingArtifact(std::string path)
      : std::runtime_error("missing artifact: " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents, lowercase hex. Throws MissingArtifact when unreadable.
std::string sha256_file(const std::string& path);

}  // namespace tw
