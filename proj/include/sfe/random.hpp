#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sfe {

/// Purpose-split seed derivation: hashes the purpose tag into the master
/// seed (FNV-1a, then a splitmix64 finalizer) so independent consumers of
/// randomness never share streams.
inline uint64_t derive_seed(uint64_t master, std::string_view purpose) {
  uint64_t h = 1469598103934665603ull ^ master;
  for (char c : purpose) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  h += 0x9e3779b97f4a7c15ull;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
  return h ^ (h >> 31);
}

/// Standard-normal draws via Box-Muller on mt19937_64. Kept explicit rather
/// than using std::normal_distribution, whose algorithm is
/// implementation-defined and would break cross-platform reproducibility.
class NormalSampler {
public:
  explicit NormalSampler(uint64_t seed) : engine_(seed) {}

  double draw() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform_();
    } while (u1 <= 0.0);
    const double u2 = uniform_();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

private:
  double uniform_() {
    // 53-bit mantissa uniform in [0, 1).
    return (engine_() >> 11) * 0x1.0p-53;
  }

  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sfe
