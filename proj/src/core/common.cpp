#include "sepsis/common.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace sepsis {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index) {
  // FNV-1a over the stream name.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(seed ^ h) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<bool> stratified_choice(const std::vector<int>& cls, double fraction, Rng& rng) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cls.size(); ++i) groups[cls[i]].push_back(i);
  std::vector<bool> chosen(cls.size(), false);
  for (auto& [c, members] : groups) {
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[uniform_index(rng, i)]);
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    for (std::size_t i = 0; i < k && i < members.size(); ++i) chosen[members[i]] = true;
  }
  return chosen;
}

}  // namespace sepsis
