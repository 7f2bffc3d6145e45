#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tmc {

// Time grid of the simulated half day (minute 0 is midnight).
inline constexpr int kDayMinutes = 720;
inline constexpr int kIntervalMinutes = 5;
inline constexpr int kIntervals = kDayMinutes / kIntervalMinutes;

inline constexpr double kEulerGamma = 0.57721566490153286061;

// Invalid user input. `field` is a dotted path such as "supply.capacity".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A model function was called outside its mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline int interval_of(double minute) {
  int h = static_cast<int>(minute) / kIntervalMinutes;
  if (h < 0) return 0;
  if (h >= kIntervals) return kIntervals - 1;
  return h;
}

inline double interval_start(int h) { return static_cast<double>(h * kIntervalMinutes); }

// Stable 64-bit FNV-1a, used for stream names and artifact hashes.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

using Rng = std::mt19937_64;

// Independent named stream derived from a master seed.
inline Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t salt = 0) {
  std::uint64_t k = fnv1a(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  return Rng(seq);
}

// Uniform draw in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform draw in (0, 1), safe for logarithms.
inline double uniform_open(Rng& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace tmc
