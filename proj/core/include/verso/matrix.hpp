#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace verso {

// Dense row-major matrix. Plain loops are all the model needs; sizes are
// small enough that cache behaviour, not vectorization, dominates.
template <class Real>
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<Real> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), Real(0)) {}

  Real* row(int r) { return data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols); }
  const Real* row(int r) const {
    return data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
  }
  std::span<Real> row_span(int r) { return {row(r), static_cast<std::size_t>(cols)}; }
  std::span<const Real> row_span(int r) const { return {row(r), static_cast<std::size_t>(cols)}; }

  Real& at(int r, int c) { return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
  Real at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
  }

  std::size_t size() const { return data.size(); }
  void fill(Real v) { std::fill(data.begin(), data.end(), v); }
};

// y += A x
template <class Real>
void matvec_add(const Matrix<Real>& a, std::span<const Real> x, std::span<Real> y) {
  assert(static_cast<int>(x.size()) == a.cols && static_cast<int>(y.size()) == a.rows);
  for (int r = 0; r < a.rows; ++r) {
    const Real* arow = a.row(r);
    Real acc = 0;
    for (int c = 0; c < a.cols; ++c) acc += arow[c] * x[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] += acc;
  }
}

// y += A^T x
template <class Real>
void matvec_transpose_add(const Matrix<Real>& a, std::span<const Real> x, std::span<Real> y) {
  assert(static_cast<int>(x.size()) == a.rows && static_cast<int>(y.size()) == a.cols);
  for (int r = 0; r < a.rows; ++r) {
    const Real xr = x[static_cast<std::size_t>(r)];
    if (xr == Real(0)) continue;
    const Real* arow = a.row(r);
    for (int c = 0; c < a.cols; ++c) y[static_cast<std::size_t>(c)] += arow[c] * xr;
  }
}

// A += u v^T
template <class Real>
void outer_add(Matrix<Real>& a, std::span<const Real> u, std::span<const Real> v) {
  assert(static_cast<int>(u.size()) == a.rows && static_cast<int>(v.size()) == a.cols);
  for (int r = 0; r < a.rows; ++r) {
    const Real ur = u[static_cast<std::size_t>(r)];
    if (ur == Real(0)) continue;
    Real* arow = a.row(r);
    for (int c = 0; c < a.cols; ++c) arow[c] += ur * v[static_cast<std::size_t>(c)];
  }
}

template <class Real>
void axpy(Real alpha, std::span<const Real> x, std::span<Real> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace verso
