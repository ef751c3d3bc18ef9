#pragma once

#include <algorithm>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <umfpack.h>

#include "wgabs/common.hpp"

namespace wgabs {

/// Compressed-column pattern with sorted row indices in every column.
struct CscPattern {
  int n = 0;
  std::vector<int> colptr;
  std::vector<int> rowidx;

  std::size_t nnz() const { return rowidx.size(); }

  /// Position of entry (row, col), or -1 if it is not in the pattern.
  long find(int row, int col) const {
    auto first = rowidx.begin() + colptr[col], last = rowidx.begin() + colptr[col + 1];
    auto it = std::lower_bound(first, last, row);
    if (it == last || *it != row) return -1;
    return static_cast<long>(it - rowidx.begin());
  }
};

/// y = A x for a complex matrix stored on a pattern.
inline CVector csc_multiply(const CscPattern& p, const std::vector<cplx>& values, const CVector& x) {
  CVector y = CVector::Zero(p.n);
  for (int c = 0; c < p.n; ++c) {
    const cplx xc = x[c];
    if (xc == cplx(0.0)) continue;
    for (int k = p.colptr[c]; k < p.colptr[c + 1]; ++k) y[p.rowidx[k]] += values[k] * xc;
  }
  return y;
}

/// Complex LU factorisation backed by UMFPACK.
class ComplexLU {
public:
  ComplexLU() = default;
  ComplexLU(const ComplexLU&) = delete;
  ComplexLU& operator=(const ComplexLU&) = delete;
  ComplexLU(ComplexLU&& o) noexcept { swap(o); }
  ComplexLU& operator=(ComplexLU&& o) noexcept {
    swap(o);
    return *this;
  }
  ~ComplexLU() { release(); }

  void factor(const CscPattern& p, const std::vector<cplx>& values) {
    release();
    n_ = p.n;
    ap_ = p.colptr.data();
    ai_ = p.rowidx.data();
    ax_ = reinterpret_cast<const double*>(values.data());
    double control[UMFPACK_CONTROL], info[UMFPACK_INFO];
    umfpack_zi_defaults(control);
    const double* ax = ax_;
    int status = umfpack_zi_symbolic(p.n, p.n, p.colptr.data(), p.rowidx.data(), ax, nullptr, &symbolic_, control, info);
    require(status == UMFPACK_OK, ErrorKind::solver, "symbolic factorisation failed (status " + std::to_string(status) + ")");
    status = umfpack_zi_numeric(p.colptr.data(), p.rowidx.data(), ax, nullptr, symbolic_, &numeric_, control, info);
    rcond_ = info[UMFPACK_RCOND];
    require(status == UMFPACK_OK, ErrorKind::solver,
            "system is singular or near-singular (status " + std::to_string(status) + ", rcond " +
                std::to_string(rcond_) + "); lambda may be a resonance of the truncated problem");
  }

  CVector solve(const CVector& b) const {
    require(numeric_ != nullptr, ErrorKind::solver, "solve called before factor");
    CVector x(b.size());
    double control[UMFPACK_CONTROL], info[UMFPACK_INFO];
    umfpack_zi_defaults(control);
    control[UMFPACK_IRSTEP] = 2;
    require(b.size() == n_, ErrorKind::solver, "right-hand side has the wrong length");
    int status = umfpack_zi_solve(UMFPACK_A, ap_, ai_, ax_, nullptr,
                                  reinterpret_cast<double*>(x.data()), nullptr,
                                  reinterpret_cast<const double*>(b.data()), nullptr, numeric_, control, info);
    require(status == UMFPACK_OK, ErrorKind::solver, "triangular solve failed (status " + std::to_string(status) + ")");
    return x;
  }

  /// Reciprocal condition estimate reported by UMFPACK (ratio of extreme pivots).
  double rcond() const { return rcond_; }

private:
  void release() {
    if (numeric_) umfpack_zi_free_numeric(&numeric_);
    if (symbolic_) umfpack_zi_free_symbolic(&symbolic_);
    numeric_ = symbolic_ = nullptr;
  }
  void swap(ComplexLU& o) {
    std::swap(symbolic_, o.symbolic_);
    std::swap(numeric_, o.numeric_);
    std::swap(n_, o.n_);
    std::swap(ap_, o.ap_);
    std::swap(ai_, o.ai_);
    std::swap(ax_, o.ax_);
    std::swap(rcond_, o.rcond_);
  }

  void* symbolic_ = nullptr;
  void* numeric_ = nullptr;
  // borrowed; must outlive the factorisation
  int n_ = 0;
  const int* ap_ = nullptr;
  const int* ai_ = nullptr;
  const double* ax_ = nullptr;
  double rcond_ = 0.0;
};

} // namespace wgabs
