#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dpfl {

// Dense LU with partial pivoting for the small Gram systems the coefficient
// oracle solves (n up to a few hundred). Factorization is kept so the
// condition estimate can form the explicit inverse.
class LuFactors {
 public:
  explicit LuFactors(std::vector<double> a, int n) : n_(n), lu_(std::move(a)), piv_(n) {
    if (static_cast<int>(lu_.size()) != n * n) throw std::invalid_argument("LuFactors: bad size");
    for (int i = 0; i < n_; ++i) piv_[i] = i;
    for (int col = 0; col < n_; ++col) {
      int p = col;
      double best = std::abs(at(col, col));
      for (int r = col + 1; r < n_; ++r) {
        const double v = std::abs(at(r, col));
        if (v > best) {
          best = v;
          p = r;
        }
      }
      if (best == 0.0) {
        singular_ = true;
        return;
      }
      if (p != col) {
        for (int c = 0; c < n_; ++c) std::swap(at(p, c), at(col, c));
        std::swap(piv_[p], piv_[col]);
      }
      const double pivot = at(col, col);
      for (int r = col + 1; r < n_; ++r) {
        const double f = at(r, col) / pivot;
        at(r, col) = f;
        for (int c = col + 1; c < n_; ++c) at(r, c) -= f * at(col, c);
      }
    }
  }

  bool singular() const { return singular_; }

  std::vector<double> solve(const std::vector<double>& b) const {
    if (singular_) throw std::runtime_error("LuFactors::solve: singular matrix");
    std::vector<double> x(n_);
    for (int i = 0; i < n_; ++i) x[i] = b[piv_[i]];
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < i; ++j) x[i] -= at(i, j) * x[j];
    for (int i = n_ - 1; i >= 0; --i) {
      for (int j = i + 1; j < n_; ++j) x[i] -= at(i, j) * x[j];
      x[i] /= at(i, i);
    }
    return x;
  }

 private:
  int n_;
  std::vector<double> lu_;
  std::vector<int> piv_;
  bool singular_ = false;

  double& at(int r, int c) { return lu_[static_cast<std::size_t>(r) * n_ + c]; }
  double at(int r, int c) const { return lu_[static_cast<std::size_t>(r) * n_ + c]; }
};

inline double one_norm(const std::vector<double>& a, int n) {
  double best = 0.0;
  for (int c = 0; c < n; ++c) {
    double s = 0.0;
    for (int r = 0; r < n; ++r) s += std::abs(a[static_cast<std::size_t>(r) * n + c]);
    best = std::max(best, s);
  }
  return best;
}

// kappa_1(A) = ||A||_1 ||A^-1||_1 via explicit inverse columns.
inline double condition_number_1(const std::vector<double>& a, int n) {
  LuFactors lu(a, n);
  if (lu.singular()) return std::numeric_limits<double>::infinity();
  std::vector<double> inv(static_cast<std::size_t>(n) * n);
  std::vector<double> e(n, 0.0);
  for (int c = 0; c < n; ++c) {
    e[c] = 1.0;
    auto col = lu.solve(e);
    e[c] = 0.0;
    for (int r = 0; r < n; ++r) inv[static_cast<std::size_t>(r) * n + c] = col[r];
  }
  return one_norm(a, n) * one_norm(inv, n);
}

}  // namespace dpfl
