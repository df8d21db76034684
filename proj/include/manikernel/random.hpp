#pragma once

#include <cstdint>
#include <random>

#include "manikernel/grassmann.hpp"
#include "manikernel/matrix_ops.hpp"
#include "manikernel/spd.hpp"

namespace manikernel {

using Rng = std::mt19937_64;

/// Independent stream for sub-task `index` of a run seeded with `seed`.
inline Rng derived_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

inline Matrix random_gaussian(Index rows, Index cols, Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

/// Symmetric matrix with N(0, stddev^2) entries on and above the diagonal.
inline Matrix random_symmetric(Index d, Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix out(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = i; j < d; ++j) out(i, j) = out(j, i) = normal(rng);
  return out;
}

/// Log-normal SPD sample: exp of a Gaussian symmetric matrix.
inline SpdMatrix random_spd(Index d, Rng& rng, double stddev = 1.0) { return spd_exp(random_symmetric(d, rng, stddev)); }

/// Uniformly distributed subspace: orthonormalized Gaussian n x r matrix.
inline GrassmannPoint random_grassmann(Index n, Index r, Rng& rng) {
  return make_grassmann(random_gaussian(n, r, rng));
}

}  // namespace manikernel
