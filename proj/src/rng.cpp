#include "helidiff/rng.hpp"

#include <cmath>
#include <numbers>

#include "helidiff/errors.hpp"

namespace helidiff {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
constexpr std::uint32_t kMaxBlock = 1u << 24;

// Two 32-bit words -> uniform in (0, 1) with 53 bits of resolution.
double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi >> 5) << 26) | (lo >> 6);
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

ParticleStream::ParticleStream(std::uint64_t seed, std::uint64_t particle, std::uint32_t step, StreamPurpose purpose)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      purpose_(static_cast<std::uint32_t>(purpose)),
      step_(step),
      particle_(particle) {}

PhiloxCounter ParticleStream::next_block() {
  if (block_ >= kMaxBlock) throw ContractViolation("ParticleStream: block counter exhausted");
  const PhiloxCounter ctr{(purpose_ << 24) | block_++, step_, static_cast<std::uint32_t>(particle_),
                          static_cast<std::uint32_t>(particle_ >> 32)};
  return philox4x32_10(ctr, key_);
}

double ParticleStream::uniform() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const auto b = next_block();
  spare_ = to_unit(b[2], b[3]);
  have_spare_ = true;
  return to_unit(b[0], b[1]);
}

void ParticleStream::normals(std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const auto b = next_block();
    const double u1 = to_unit(b[0], b[1]);
    const double u2 = to_unit(b[2], b[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    out[i] = r * std::cos(phi);
    if (i + 1 < out.size()) out[i + 1] = r * std::sin(phi);
  }
}

}  // namespace helidiff
