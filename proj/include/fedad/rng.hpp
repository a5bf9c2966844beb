#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace fedad {

// Identifies one independent random stream inside an experiment.
// client/round are -1 when not applicable; path holds nested sub-stream indices.
struct StreamLabel {
  std::string purpose;
  std::int64_t client = -1;
  std::int64_t round = -1;
  std::vector<std::uint64_t> path;

  bool operator==(const StreamLabel&) const = default;
};

// Mutable generator obtained from an RngStream. Not shared across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : engine_(key) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller.
  double normal();
  // Uniform integer in [0, n), n > 0, without modulo bias.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

// Immutable description of a stream: (master_seed, label). Generation is a pure
// function of these two values; there is no shared generator state.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, StreamLabel label);
  RngStream(std::uint64_t master_seed, std::string purpose, std::int64_t client = -1,
            std::int64_t round = -1);

  std::uint64_t master_seed() const { return master_seed_; }
  const StreamLabel& label() const { return label_; }
  std::uint64_t key() const { return key_; }

  RngStream child(std::uint64_t index) const;
  Rng generator() const { return Rng(key_); }

 private:
  std::uint64_t master_seed_;
  StreamLabel label_;
  std::uint64_t key_;
};

std::vector<double> rng_draw(const RngStream& stream, std::size_t n);
std::vector<std::size_t> rng_shuffle(const RngStream& stream, std::size_t n);

// In-place Fisher-Yates using an existing generator.
void shuffle_in_place(std::vector<std::size_t>& items, Rng& rng);

}  // namespace fedad
