#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sepsis {

// Missing cells are quiet NaNs throughout the library.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

// Base error. Everything the library throws derives from it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that fails a declared contract: bad schema, bad config, bad file
// layout. The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Malformed data file; carries the 1-based line number.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A type invariant was violated at runtime (e.g. non-monotone labels).
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Selects the OpenMP implementation of a kernel or its serial reference.
enum class Execution { parallel, serial };

// Deterministic random streams. Every consumer derives its own engine from
// (run seed, stream name, index) so results never depend on call order or
// scheduling.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

using Rng = std::mt19937_64;
inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
  return Rng(stream_seed(seed, stream, index));
}

// Uniform double in [0,1) built from raw engine bits; unlike
// std::uniform_real_distribution its output is fixed across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}
// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}
// Standard normal via Box-Muller on uniform01.
double standard_normal(Rng& rng);

// Marks round(fraction * size) members of every class (values of `cls`) as
// chosen, picked by a shuffle of each class in index order.
std::vector<bool> stratified_choice(const std::vector<int>& cls, double fraction, Rng& rng);

}  // namespace sepsis
