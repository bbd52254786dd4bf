#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace npp {

// Counter-based random streams. A draw is a pure function of
// (seed, tag, index, position), so results do not depend on scheduling.

constexpr std::uint64_t stream_tag(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index);

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Standard normal quantile (Wichura, AS241), relative accuracy about 1e-16.
double normal_quantile(double p);

class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index);

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  std::uint64_t below(std::uint64_t bound);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t index_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace npp
