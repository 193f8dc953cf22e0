#pragma once

#include <array>
#include <cstdint>

namespace cdyson {

/// Philox4x64-10 counter-based block cipher (Salmon et al., SC'11).
/// Stateless: identical (counter, key) always yields identical output.
using PhiloxCounter = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;

PhiloxCounter philox4x64_10(PhiloxCounter counter, PhiloxKey key) noexcept;

/// Consumers of random numbers get disjoint counter ranges via a domain tag.
enum class RngDomain : std::uint64_t {
  kIncrement = 0,
  kBridge = 1,
  kInitial = 2,
  kSampling = 3,
};

/// Gaussian stream over one (seed, stream, step, domain, subkey) cell.
/// Draws are produced four at a time from successive Philox blocks.
class NormalStream {
 public:
  NormalStream(PhiloxKey key, std::uint64_t step, std::uint64_t tag);

  double normal();
  double uniform();  // in (0, 1]

 private:
  void refill();

  PhiloxKey key_;
  std::uint64_t step_;
  std::uint64_t tag_;
  std::uint64_t block_ = 0;
  std::array<double, 4> buffer_{};
  int next_ = 4;
  bool uniform_mode_ = false;
};

/// Plain-data identity of a random stream; (master_seed, stream_id) keys the
/// cipher, the step index and domain select the counter.
struct SeededRng {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  NormalStream at(std::uint64_t step, RngDomain domain = RngDomain::kIncrement,
                  std::uint64_t subkey = 0) const;
};

}  // namespace cdyson
