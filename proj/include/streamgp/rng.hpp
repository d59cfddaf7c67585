#ifndef STREAMGP_RNG_HPP
#define STREAMGP_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace streamgp {

/// Deterministic normal/uniform generator. std::mt19937_64 output is fully
/// specified by the standard, and the Box-Muller transform below avoids
/// std::normal_distribution, whose algorithm is implementation-defined;
/// together they make every seeded draw bit-reproducible across toolchains.
class NormalRng {
 public:
  explicit NormalRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace streamgp

#endif  // STREAMGP_RNG_HPP
