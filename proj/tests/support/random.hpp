#pragma once

#include <random>

#include "hartree/spectral.hpp"

namespace testutil {

inline hartree::CMatrix random_matrix(std::mt19937_64& rng, long rows, long cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  hartree::CMatrix A(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) A(i, j) = {n(rng), n(rng)};
  return A;
}

inline hartree::CMatrix random_hermitian(std::mt19937_64& rng, long n) {
  hartree::CMatrix A = random_matrix(rng, n, n);
  hartree::CMatrix H = 0.5 * (A + A.adjoint());
  return H;
}

inline std::vector<hartree::cd> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<hartree::cd> v(n);
  for (auto& x : v) x = {d(rng), d(rng)};
  return v;
}

}  // namespace testutil
