#pragma once

#include <cstdint>

namespace e2x {

/// Counter-based generator. Every draw is a pure function of
/// (seed, stream, counter), so parallel workers that own disjoint streams
/// reproduce the serial sequence exactly.
///
/// Algorithm (part of the output contract):
///   state   = seed + (stream + 1) * 0xD1B54A32D192ED03
///                  + (counter + 1) * 0x9E3779B97F4A7C15      (mod 2^64)
///   output  = mix64(state)
///   mix64(z): z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
///             z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
///             return z ^ (z >> 31);
/// uniform()        = (output >> 11) * 2^-53               in [0, 1)
/// below(n)         = high 64 bits of (output * n)         in [0, n)
/// bit()            = output >> 63
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() {
    const std::uint64_t state = seed_ + (stream_ + 1) * 0xD1B54A32D192ED03ULL +
                                (counter_ + 1) * 0x9E3779B97F4A7C15ULL;
    ++counter_;
    return mix64(state);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  bool bit() { return (next() >> 63) != 0; }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace e2x
