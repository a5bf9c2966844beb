#include "fedad/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace fedad {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

std::uint64_t hash_label(std::uint64_t seed, const StreamLabel& label) {
  // FNV-1a over the purpose tag, then fold in the numeric fields.
  std::uint64_t tag = 0xcbf29ce484222325ULL;
  for (unsigned char c : label.purpose) {
    tag ^= c;
    tag *= 0x100000001b3ULL;
  }
  std::uint64_t h = mix(splitmix64(seed), tag);
  h = mix(h, static_cast<std::uint64_t>(label.client));
  h = mix(h, static_cast<std::uint64_t>(label.round));
  for (std::uint64_t p : label.path) h = mix(h, p);
  return mix(h, label.path.size());
}

}  // namespace

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

RngStream::RngStream(std::uint64_t master_seed, StreamLabel label)
    : master_seed_(master_seed), label_(std::move(label)), key_(hash_label(master_seed_, label_)) {}

RngStream::RngStream(std::uint64_t master_seed, std::string purpose, std::int64_t client,
                     std::int64_t round)
    : RngStream(master_seed, StreamLabel{std::move(purpose), client, round, {}}) {}

RngStream RngStream::child(std::uint64_t index) const {
  StreamLabel l = label_;
  l.path.push_back(index);
  return RngStream(master_seed_, std::move(l));
}

std::vector<double> rng_draw(const RngStream& stream, std::size_t n) {
  Rng rng = stream.generator();
  std::vector<double> out(n);
  for (auto& v : out) v = rng.uniform();
  return out;
}

void shuffle_in_place(std::vector<std::size_t>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

std::vector<std::size_t> rng_shuffle(const RngStream& stream, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = stream.generator();
  shuffle_in_place(perm, rng);
  return perm;
}

}  // namespace fedad
