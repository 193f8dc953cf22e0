#include "coupled_dyson/rng.hpp"

#include <cmath>
#include <numbers>

namespace cdyson {
namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

// 53-bit mantissa mapped into (0, 1].
inline double to_unit(std::uint64_t x) {
  return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x64_10(PhiloxCounter x, PhiloxKey k) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, x[0], hi0, lo0);
    mulhilo(kMul1, x[2], hi1, lo1);
    x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
  }
  return x;
}

NormalStream::NormalStream(PhiloxKey key, std::uint64_t step, std::uint64_t tag)
    : key_(key), step_(step), tag_(tag) {}

void NormalStream::refill() {
  const PhiloxCounter out = philox4x64_10({block_++, step_, tag_, 0}, key_);
  if (uniform_mode_) {
    for (int i = 0; i < 4; ++i) buffer_[i] = to_unit(out[i]);
  } else {
    // Box-Muller on two pairs.
    for (int i = 0; i < 4; i += 2) {
      const double r = std::sqrt(-2.0 * std::log(to_unit(out[i])));
      const double theta = 2.0 * std::numbers::pi * to_unit(out[i + 1]);
      buffer_[i] = r * std::cos(theta);
      buffer_[i + 1] = r * std::sin(theta);
    }
  }
  next_ = 0;
}

double NormalStream::normal() {
  if (uniform_mode_) {
    uniform_mode_ = false;
    next_ = 4;
  }
  if (next_ == 4) refill();
  return buffer_[next_++];
}

double NormalStream::uniform() {
  if (!uniform_mode_) {
    uniform_mode_ = true;
    next_ = 4;
  }
  if (next_ == 4) refill();
  return buffer_[next_++];
}

NormalStream SeededRng::at(std::uint64_t step, RngDomain domain,
                           std::uint64_t subkey) const {
  // Domain in the top byte, caller subkey below it.
  const std::uint64_t tag =
      (static_cast<std::uint64_t>(domain) << 56) | (subkey & 0x00FFFFFFFFFFFFFFULL);
  return NormalStream({master_seed, stream_id}, step, tag);
}

}  // namespace cdyson
