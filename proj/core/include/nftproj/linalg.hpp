#pragma once

#include <cstddef>
#include <vector>

namespace nftproj {

/// Dense row-major matrix of doubles. Sized for the problems here
/// (hundreds of rows/columns), not a general BLAS replacement.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
  double* row(std::size_t i) { return a.data() + i * cols; }
  const double* row(std::size_t i) const { return a.data() + i * cols; }

  friend bool operator==(const Mat&, const Mat&) = default;
};

struct SymEigenResult {
  std::vector<double> values;  // descending
  Mat vectors;                 // row k = eigenvector for values[k], unit norm
};

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Deterministic: fixed sweep order and a fixed sweep cap, no pivot search.
/// Throws ShapeMismatch on non-square input and NonFinite if the sweep cap
/// is exhausted before off-diagonal mass vanishes.
SymEigenResult sym_eigen(const Mat& m, int max_sweeps = 64);

}  // namespace nftproj
