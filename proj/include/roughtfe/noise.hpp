#pragma once

// Counter-based Gaussian increments. Every increment is a pure function of
// (seed, replicate, step, component), so replications can run in any order
// on any number of workers and different eps values share the same draws.

#include "roughtfe/frac_kernel.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace roughtfe {

// Philox4x32-10 block cipher (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

namespace detail {

// Uniform on the open interval (0, 1) with 53 random bits.
inline double open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t v = (std::uint64_t{hi} << 32) | lo;
  return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

// Standard normal keyed on (seed, replicate, step, component).
// Components 2m and 2m+1 are the Box-Muller pair from one cipher block.
inline double keyed_normal(std::uint64_t seed, std::uint64_t replicate, std::uint64_t step,
                           std::uint32_t component) noexcept {
  const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(step),
                                   static_cast<std::uint32_t>(step >> 32) ^ (component >> 1),
                                   static_cast<std::uint32_t>(replicate),
                                   static_cast<std::uint32_t>(replicate >> 32)};
  const Philox4x32::Key key = {static_cast<std::uint32_t>(seed),
                               static_cast<std::uint32_t>(seed >> 32)};
  const auto out = Philox4x32::apply(ctr, key);
  const double u1 = detail::open_unit(out[0], out[1]);
  const double u2 = detail::open_unit(out[2], out[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  return (component & 1u) ? rad * std::sin(ang) : rad * std::cos(ang);
}

// Brownian increments dB_j over [t_j, t_{j+1}], j = 0..n-1, each component
// N(0, h). Stored step-major.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t replicate, const GridSpec& grid, int r)
      : seed_(seed), replicate_(replicate), grid_(grid), r_(r),
        inc_(grid.steps() * static_cast<std::size_t>(r)) {
    const double sd = std::sqrt(grid.step());
    for (std::size_t j = 0; j < grid.steps(); ++j)
      for (int c = 0; c < r; ++c)
        inc_[j * r + c] = sd * keyed_normal(seed, replicate, j, static_cast<std::uint32_t>(c));
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t replicate() const noexcept { return replicate_; }
  const GridSpec& grid() const noexcept { return grid_; }
  int dim() const noexcept { return r_; }

  double operator()(std::size_t step, int component) const noexcept {
    return inc_[step * r_ + component];
  }
  const std::vector<double>& increments() const noexcept { return inc_; }

  // |sample mean| <= 5 sqrt(h/n) for every component.
  bool passes_sanity() const noexcept {
    const auto n = static_cast<double>(grid_.steps());
    const double bound = 5.0 * std::sqrt(grid_.step() / n);
    for (int c = 0; c < r_; ++c) {
      double m = 0.0;
      for (std::size_t j = 0; j < grid_.steps(); ++j) m += inc_[j * r_ + c];
      if (std::abs(m / n) > bound) return false;
    }
    return true;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t replicate_;
  GridSpec grid_;
  int r_;
  std::vector<double> inc_;
};

}  // namespace roughtfe
