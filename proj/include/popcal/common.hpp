#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace popcal {

// Error taxonomy maps onto CLI exit codes: usage=1, data=2, numeric=3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64: pinned bit-for-bit so seeded runs reproduce across builds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Small deterministic RNG. std::mt19937 is portable but the standard
// distributions are not; everything here is fully specified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  // [0, n)
  std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

  // standard normal, Box-Muller
  double normal();

  // derive an independent stream for a sub-task
  Rng fork(std::uint64_t tag) const {
    return Rng(splitmix64(state_ ^ splitmix64(tag + 0x51ed2701)));
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Compensated summation; keeps parallel/serial reductions in agreement.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = sum_ + y;
    c_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

// FNV-1a, used for dataset checksums in run manifests (not cryptographic).
std::uint64_t fnv1a_file(const std::string& path);
std::uint64_t fnv1a_bytes(const void* data, std::size_t len,
                          std::uint64_t seed = 0xcbf29ce484222325ULL);

// Max worker count; honors the POPCAL_THREADS environment variable.
unsigned max_threads();

// Static block partition over [0, n). Deterministic as long as blocks only
// touch disjoint state.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace popcal
