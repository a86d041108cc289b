#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace helidiff {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// What a stream is used for; keeps initialization and step noise disjoint.
enum class StreamPurpose : std::uint32_t { step_noise = 0, initial_condition = 1, aux = 2 };

/// Deterministic random numbers for one (seed, particle, step) triple.
///
/// Counter layout: {purpose << 24 | block, step, particle_lo, particle_hi},
/// key = seed. Each Philox block yields two 53-bit uniforms, or one
/// Box-Muller pair of standard normals.
class ParticleStream {
 public:
  ParticleStream(std::uint64_t seed, std::uint64_t particle, std::uint32_t step,
                 StreamPurpose purpose = StreamPurpose::step_noise);

  /// Uniform in the open interval (0, 1).
  double uniform();
  /// Fills `out` with independent standard normals, two per block.
  void normals(std::span<double> out);

 private:
  PhiloxCounter next_block();

  PhiloxKey key_;
  std::uint32_t purpose_;
  std::uint32_t block_ = 0;
  std::uint32_t step_;
  std::uint64_t particle_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace helidiff
