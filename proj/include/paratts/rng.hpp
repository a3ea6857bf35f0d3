#ifndef PARATTS_RNG_HPP_
#define PARATTS_RNG_HPP_

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace paratts {

// splitmix64-style mix used to derive per-component / per-item seeds so that
// parallel order never changes the stream an item sees.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }  // [0,1)
  // inclusive bounds
  int uniform_int(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }
  uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }
  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace paratts

#endif  // PARATTS_RNG_HPP_
