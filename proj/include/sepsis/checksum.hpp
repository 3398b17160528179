#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace sepsis {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_hex(std::span<const double> values);
std::string sha256_file(const std::filesystem::path& path);

// Incremental hasher for digests over many buffers.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view bytes);
  void update(std::span<const double> values);
  std::string hex();

 private:
  void* ctx_;
};

}  // namespace sepsis
