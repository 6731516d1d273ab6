#pragma once

#include <array>
#include <cstdint>

namespace sdot {

// Counter-free splittable random stream: xoshiro256++ seeded through a
// splitmix64 ladder from a 64-bit key. Child streams are keyed by
// (parent key, tag), independent of how much the parent has been consumed,
// so results never depend on thread scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Derives an independent stream from this stream's key and a tag.
  RngStream child(std::uint64_t tag) const;

  std::uint64_t key() const { return key_; }

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double next_double();

  // Uniform on (0, 1); never returns an endpoint.
  double next_open();

  // Standard normal (Box-Muller, one value cached).
  double next_normal();

 private:
  std::uint64_t key_;
  std::array<std::uint64_t, 4> s_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// splitmix64 step; also used as a mixing finalizer for stream keys.
std::uint64_t splitmix64_next(std::uint64_t& state);

}  // namespace sdot
