#include <doctest.h>

#include <cmath>
#include <vector>

#include "helidiff/rng.hpp"

using namespace helidiff;

TEST_CASE("philox4x32-10 known-answer vectors") {
  // Random123 kat_vectors.
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  std::vector<double> a(5), b(5), c(5), d(5);
  ParticleStream(7, 3, 11).normals(a);
  ParticleStream(7, 3, 11).normals(b);
  ParticleStream(7, 4, 11).normals(c);
  ParticleStream(7, 3, 11, StreamPurpose::initial_condition).normals(d);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a != d);
}

TEST_CASE("normal and uniform moments") {
  const int n = 200000;
  double s1 = 0, s2 = 0, s4 = 0, u1 = 0, u2 = 0;
  double umin = 1, umax = 0;
  for (int p = 0; p < n / 2; ++p) {
    double z[2];
    ParticleStream rs(99, p, 0);
    rs.normals(z);
    for (double v : z) {
      s1 += v;
      s2 += v * v;
      s4 += v * v * v * v;
    }
    ParticleStream us(99, p, 1);
    for (int k = 0; k < 2; ++k) {
      const double u = us.uniform();
      u1 += u;
      u2 += u * u;
      umin = std::min(umin, u);
      umax = std::max(umax, u);
    }
  }
  CHECK(std::abs(s1 / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(s4 / n - 3.0) < 4.0 * std::sqrt(96.0 / n));
  CHECK(std::abs(u1 / n - 0.5) < 4.0 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(u2 / n - 1.0 / 3) < 0.01);
  CHECK(umin > 0.0);
  CHECK(umax < 1.0);
}
