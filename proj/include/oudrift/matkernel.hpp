#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "oudrift/types.hpp"

namespace oudrift {

/// Full eigenvalue multiset of a real matrix, with the tolerance used to
/// classify values against the imaginary axis.
/// (M + M') / 2 as a fresh matrix (safe against transpose aliasing).
inline Matrix symmetrized(const Matrix& M) { return 0.5 * (M + M.transpose()); }

struct ComplexSpectrum {
  std::vector<std::complex<double>> values;
  double tol_class = 0.0;

  double max_real() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& z : values) m = std::max(m, z.real());
    return m;
  }

  Index count_re_greater(double bound) const {
    return static_cast<Index>(std::count_if(values.begin(), values.end(),
                                            [&](const auto& z) { return z.real() > bound; }));
  }

  /// Smallest real part among eigenvalues with Re > tol; empty when none.
  std::optional<double> min_positive_real(double tol) const {
    std::optional<double> m;
    for (const auto& z : values)
      if (z.real() > tol && (!m || z.real() < *m)) m = z.real();
    return m;
  }
};

/// e^{Mt} via scaling-and-squaring Pade approximation.
/// Refuses inputs whose result could overflow instead of returning Inf.
inline Matrix matexp(const Matrix& M, double t) {
  require_square(M, "matexp");
  require_dim_cap(M, "matexp");
  require_finite(M, "matexp");
  require(std::isfinite(t), "matexp: t must be finite");

  const double norm_mt = (M * t).cwiseAbs().rowwise().sum().maxCoeff();
  const double overflow_cap = 500.0 * std::log(2.0);
  if (norm_mt > overflow_cap)
    throw std::overflow_error("matexp: ||Mt|| = " + std::to_string(norm_mt) +
                              " exceeds representable range (cap " +
                              std::to_string(overflow_cap) + ")");

  Matrix E = (M * t).exp();
  if (!E.allFinite()) throw std::overflow_error("matexp: result overflowed");
  return E;
}

/// All eigenvalues of a real square matrix (with algebraic multiplicity),
/// sorted by (Re, Im) for deterministic comparison.
inline ComplexSpectrum eigenvalues(const Matrix& M, double tol_class = -1.0) {
  require_square(M, "eigenvalues");
  require_dim_cap(M, "eigenvalues");
  require_finite(M, "eigenvalues");

  Eigen::EigenSolver<Matrix> solver(M, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw KernelError("eigenvalues: QR iteration failed to converge");

  ComplexSpectrum spec;
  spec.tol_class = tol_class > 0 ? tol_class : classification_tol(M);
  spec.values.reserve(M.rows());
  for (Index i = 0; i < M.rows(); ++i) spec.values.push_back(solver.eigenvalues()[i]);
  std::sort(spec.values.begin(), spec.values.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return spec;
}

/// Outcome of testing one eigenvalue against a spectral selection rule.
enum class SchurPick { Select, Reject, Boundary };

using SchurSelector = std::function<SchurPick(double re, double im)>;

/// Right half-plane membership is Re > tol; eigenvalues on the axis strip
/// |Re| <= tol belong to the left group, and the band (tol, 2 tol) is
/// ambiguous. The left selector is the exact complement.
inline SchurSelector select_right_halfplane(double tol) {
  return [=](double re, double) {
    if (re <= tol) return SchurPick::Reject;
    if (re >= 2.0 * tol) return SchurPick::Select;
    return SchurPick::Boundary;
  };
}

inline SchurSelector select_left_halfplane(double tol) {
  return [=](double re, double) {
    if (re <= tol) return SchurPick::Select;
    if (re >= 2.0 * tol) return SchurPick::Reject;
    return SchurPick::Boundary;
  };
}

/// Strictly negative real part, Re < -tol; band (-2 tol, -tol) is ambiguous.
inline SchurSelector select_negative_real(double tol) {
  return [=](double re, double) {
    if (re >= -tol) return SchurPick::Reject;
    if (re <= -2.0 * tol) return SchurPick::Select;
    return SchurPick::Boundary;
  };
}

inline SchurSelector select_nonnegative_real(double tol) {
  return [=](double re, double) {
    if (re >= -tol) return SchurPick::Select;
    if (re <= -2.0 * tol) return SchurPick::Reject;
    return SchurPick::Boundary;
  };
}

/// Zero cluster |lambda| <= tol, with the modulus band (tol, 2 tol) ambiguous.
inline SchurSelector select_zero_modulus(double tol) {
  return [=](double re, double im) {
    const double mod = std::hypot(re, im);
    if (mod <= tol) return SchurPick::Select;
    if (mod >= 2.0 * tol) return SchurPick::Reject;
    return SchurPick::Boundary;
  };
}

inline SchurSelector select_nonzero_modulus(double tol) {
  return [=](double re, double im) {
    const double mod = std::hypot(re, im);
    if (mod <= tol) return SchurPick::Reject;
    if (mod >= 2.0 * tol) return SchurPick::Select;
    return SchurPick::Boundary;
  };
}

struct OrderedSchur {
  Matrix Q;  // orthogonal
  Matrix T;  // real quasi-upper-triangular; selected eigenvalues lead
  Index k;   // count of selected eigenvalues
};

namespace detail {

struct SchurBlock {
  Index start;
  Index size;  // 1 or 2
  std::complex<double> eig;
  bool selected = false;
};

inline std::complex<double> block_eigenvalue(const Matrix& T, Index i, Index size) {
  if (size == 1) return {T(i, i), 0.0};
  const double a = T(i, i), b = T(i, i + 1), c = T(i + 1, i), d = T(i + 1, i + 1);
  const double disc = (a - d) * (a - d) + 4.0 * b * c;
  if (disc >= 0.0)  // should not occur for a standardized 2x2 pair block
    return {0.5 * (a + d) + 0.5 * std::sqrt(disc), 0.0};
  return {0.5 * (a + d), 0.5 * std::sqrt(-disc)};
}

inline std::vector<SchurBlock> scan_blocks(const Matrix& T) {
  std::vector<SchurBlock> blocks;
  const Index n = T.rows();
  Index i = 0;
  while (i < n) {
    const Index size = (i + 1 < n && T(i + 1, i) != 0.0) ? 2 : 1;
    blocks.push_back({i, size, block_eigenvalue(T, i, size), false});
    i += size;
  }
  return blocks;
}

// Swaps the adjacent diagonal blocks of sizes (p, q) starting at row i of the
// quasi-triangular T, accumulating the transformation into Q. Direct method:
// solve the small Sylvester equation for the invariant subspace of the
// trailing block, then orthonormalize it to the front.
inline void swap_schur_blocks(Matrix& T, Matrix& Q, Index i, Index p, Index q) {
  const Index n = T.rows();
  const Index m = p + q;
  const Matrix A11 = T.block(i, i, p, p);
  const Matrix A12 = T.block(i, i + p, p, q);
  const Matrix A22 = T.block(i + p, i + p, q, q);

  // A11 X - X A22 = -A12, vectorized column-major.
  Matrix K = Matrix::Zero(p * q, p * q);
  Vector rhs(p * q);
  for (Index col = 0; col < q; ++col) {
    for (Index row = 0; row < p; ++row) {
      const Index idx = col * p + row;
      rhs[idx] = -A12(row, col);
      for (Index l = 0; l < p; ++l) K(idx, col * p + l) += A11(row, l);
      for (Index l = 0; l < q; ++l) K(idx, l * p + row) -= A22(l, col);
    }
  }
  Eigen::PartialPivLU<Matrix> lu(K);
  const Vector x = lu.solve(rhs);
  if (!x.allFinite())
    throw KernelError("ordered_schur: block swap failed (eigenvalues too close to separate)");

  Matrix Z(m, q);
  for (Index col = 0; col < q; ++col)
    for (Index row = 0; row < p; ++row) Z(row, col) = x[col * p + row];
  Z.block(p, 0, q, q) = Matrix::Identity(q, q);

  Eigen::HouseholderQR<Matrix> qr(Z);
  const Matrix G = qr.householderQ() * Matrix::Identity(m, m);

  Matrix blk = G.transpose() * T.block(i, i, m, m) * G;
  const double spill = blk.block(q, 0, p, q).norm();
  if (spill > 1e-8 * (1.0 + T.norm()))
    throw KernelError("ordered_schur: block swap residual too large (ill-separated spectra)");
  blk.block(q, 0, p, q).setZero();

  T.block(i, i, m, m) = blk;
  if (i + m < n) T.block(i, i + m, m, n - i - m) = G.transpose() * T.block(i, i + m, m, n - i - m);
  if (i > 0) T.block(0, i, i, m) = T.block(0, i, i, m) * G;
  Q.middleCols(i, m) = Q.middleCols(i, m) * G;
}

}  // namespace detail

/// Real Schur form with the selected eigenvalues moved into the leading
/// block: M = Q T Q', Q orthogonal, leading k x k block of T carries exactly
/// the selected eigenvalues.
inline OrderedSchur ordered_schur(const Matrix& M, const SchurSelector& select) {
  require_square(M, "ordered_schur");
  require_dim_cap(M, "ordered_schur");
  require_finite(M, "ordered_schur");

  Eigen::RealSchur<Matrix> schur(M);
  if (schur.info() != Eigen::Success)
    throw KernelError("ordered_schur: Schur iteration failed to converge");

  Matrix T = schur.matrixT();
  Matrix Q = schur.matrixU();

  auto blocks = detail::scan_blocks(T);
  for (auto& b : blocks) {
    switch (select(b.eig.real(), b.eig.imag())) {
      case SchurPick::Select:
        b.selected = true;
        break;
      case SchurPick::Reject:
        b.selected = false;
        break;
      case SchurPick::Boundary:
        throw ClassificationAmbiguousError(
            "ordered_schur: eigenvalue (" + std::to_string(b.eig.real()) + ", " +
            std::to_string(b.eig.imag()) + "i) lies within tolerance of the selection boundary");
    }
  }

  // Bubble each selected block to the front, preserving relative order.
  Index k = 0;
  for (std::size_t target = 0; target < blocks.size(); ++target) {
    std::size_t j = target;
    while (j < blocks.size() && !blocks[j].selected) ++j;
    if (j == blocks.size()) break;
    for (; j > target; --j) {
      auto& prev = blocks[j - 1];
      auto& cur = blocks[j];
      detail::swap_schur_blocks(T, Q, prev.start, prev.size, cur.size);
      cur.start = prev.start;
      prev.start = cur.start + cur.size;
      std::swap(prev, cur);
    }
    k += blocks[target].size;
  }

  const double residual = (Q * T * Q.transpose() - M).norm();
  if (residual > 1e-9 * (1.0 + M.norm()))
    throw KernelError("ordered_schur: factorization residual " + std::to_string(residual) +
                      " exceeds contract");
  return {std::move(Q), std::move(T), k};
}

/// Solves F S + S F' + AAt = 0 for the stationary covariance of a stable
/// linear SDE; equals the integral of e^{Fu} AAt e^{F'u} over [0, inf).
/// Kronecker linearization, intended for desk-scale dimensions.
inline Matrix lyapunov_stationary(const Matrix& F, const Matrix& AAt, double tol = -1.0) {
  require_square(F, "lyapunov_stationary");
  require_square(AAt, "lyapunov_stationary");
  require(F.rows() == AAt.rows(), "lyapunov_stationary: dimension mismatch");
  require(F.rows() <= 16, "lyapunov_stationary: Kronecker solve capped at p <= 16");
  require_finite(F, "lyapunov_stationary");
  require_finite(AAt, "lyapunov_stationary");
  if ((AAt - AAt.transpose()).norm() > 1e-9 * (1.0 + AAt.norm()))
    throw std::invalid_argument("lyapunov_stationary: AAt is not symmetric");

  const double tc = tol > 0 ? tol : classification_tol(F);
  const auto spec = eigenvalues(F, tc);
  if (spec.max_real() >= -tc)
    throw std::domain_error("lyapunov_stationary: F is not stable (max Re eigenvalue = " +
                            std::to_string(spec.max_real()) + ")");

  const Index p = F.rows();
  Matrix K = Matrix::Zero(p * p, p * p);
  Vector rhs(p * p);
  const Matrix sym = 0.5 * (AAt + AAt.transpose());
  // vec(F S + S F') = (I (x) F + F (x) I) vec(S), column-major vec.
  for (Index col = 0; col < p; ++col) {
    for (Index row = 0; row < p; ++row) {
      const Index idx = col * p + row;
      rhs[idx] = -sym(row, col);
      for (Index l = 0; l < p; ++l) {
        K(idx, col * p + l) += F(row, l);
        K(idx, l * p + row) += F(col, l);
      }
    }
  }
  const Vector s = Eigen::PartialPivLU<Matrix>(K).solve(rhs);
  Matrix S(p, p);
  for (Index col = 0; col < p; ++col)
    for (Index row = 0; row < p; ++row) S(row, col) = s[col * p + row];
  S = symmetrized(S);

  const double residual = (F * S + S * F.transpose() + sym).norm();
  if (residual > 1e-9 * std::max(1.0, sym.norm()))
    throw KernelError("lyapunov_stationary: residual " + std::to_string(residual) +
                      " exceeds contract");
  return S;
}

/// Transition covariance Q(dt) = integral of e^{Fs} AAt e^{F's} ds over
/// [0, dt], via the augmented block exponential [[-F, AAt], [0, F']].
/// The block exponential is taken at a scaled-down step and extended by the
/// exact doubling identity Q(2t) = Q(t) + e^{Ft} Q(t) e^{F't}; the one-shot
/// block read-off loses all accuracy for non-normal F once ||F dt|| is large.
inline Matrix noise_covariance(const Matrix& F, const Matrix& AAt, double dt) {
  require_square(F, "noise_covariance");
  require_square(AAt, "noise_covariance");
  require(F.rows() == AAt.rows(), "noise_covariance: dimension mismatch");
  require(dt > 0.0 && std::isfinite(dt), "noise_covariance: dt must be positive");
  require_finite(F, "noise_covariance");
  if ((AAt - AAt.transpose()).norm() > 1e-9 * (1.0 + AAt.norm()))
    throw std::invalid_argument("noise_covariance: AAt is not symmetric");

  const Index p = F.rows();
  const Matrix sym = 0.5 * (AAt + AAt.transpose());
  Matrix M = Matrix::Zero(2 * p, 2 * p);
  M.topLeftCorner(p, p) = -F;
  M.topRightCorner(p, p) = sym;
  M.bottomRightCorner(p, p) = F.transpose();

  const double norm = (M * dt).cwiseAbs().rowwise().sum().maxCoeff();
  int doublings = 0;
  double scale = norm;
  while (scale > 2.0 && doublings < 80) {
    scale *= 0.5;
    ++doublings;
  }
  const double h = dt / static_cast<double>(1LL << doublings);

  const Matrix E = matexp(M, h);
  Matrix Q = E.bottomRightCorner(p, p).transpose() * E.topRightCorner(p, p);
  Q = symmetrized(Q);
  Matrix Eh = matexp(F, h);
  for (int j = 0; j < doublings; ++j) {
    Q = Q + Eh * Q * Eh.transpose();
    Q = symmetrized(Q);
    Eh = Eh * Eh;
    if (!Q.allFinite() || !Eh.allFinite())
      throw std::overflow_error("noise_covariance: covariance overflowed at dt = " +
                                std::to_string(dt));
  }
  return Q;
}

struct SymEig {
  Vector values;   // ascending
  Matrix vectors;  // orthogonal, columns matching values
};

/// Eigendecomposition of a symmetric matrix (symmetrized internally).
inline SymEig sym_eig(const Matrix& M) {
  require_square(M, "sym_eig");
  require_dim_cap(M, "sym_eig");
  require_finite(M, "sym_eig");
  if ((M - M.transpose()).norm() > 1e-9 * (1.0 + M.norm()))
    throw std::invalid_argument("sym_eig: matrix is not symmetric within tolerance");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (M + M.transpose()));
  if (solver.info() != Eigen::Success) throw KernelError("sym_eig: iteration failed to converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Numerical rank via singular values with threshold tol * sigma_max.
inline Index numerical_rank(const Matrix& M, double tol = kDefaultRankTol) {
  require_finite(M, "numerical_rank");
  if (M.rows() == 0 || M.cols() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > tol * sv[0]) ++rank;
  return rank;
}

/// Factor L with S = L L' for a symmetric positive semidefinite S.
/// Eigenvalues in [-floor_rel * max(1, lambda_max), 0) are clamped to zero;
/// anything more negative is rejected as indefinite.
inline Matrix psd_sqrt_factor(const Matrix& S, double floor_rel = 1e-12) {
  const SymEig eig = sym_eig(S);
  const double lmax = std::max(eig.values[eig.values.size() - 1], 0.0);
  const double floor = -floor_rel * std::max(1.0, lmax);
  Vector sq(eig.values.size());
  for (Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values[i] < floor)
      throw KernelError("psd_sqrt_factor: matrix is indefinite (lambda_min = " +
                        std::to_string(eig.values[i]) + ")");
    sq[i] = std::sqrt(std::max(eig.values[i], 0.0));
  }
  return eig.vectors * sq.asDiagonal();
}

/// S^{-1/2} for symmetric positive definite S.
inline Matrix sym_inv_sqrt(const Matrix& S, double tol = 1e-13) {
  const SymEig eig = sym_eig(S);
  const double lmax = std::max(eig.values[eig.values.size() - 1], 0.0);
  Vector inv_sq(eig.values.size());
  for (Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values[i] <= tol * std::max(1.0, lmax))
      throw SingularStatisticError("sym_inv_sqrt: matrix numerically singular", eig.values[i]);
    inv_sq[i] = 1.0 / std::sqrt(eig.values[i]);
  }
  return eig.vectors * inv_sq.asDiagonal() * eig.vectors.transpose();
}

/// In-place Cholesky rank-one update: L L' + x x' -> L L'.
inline void cholesky_rank1_update(Matrix& L, Vector x) {
  const Index n = L.rows();
  for (Index k = 0; k < n; ++k) {
    const double r = std::hypot(L(k, k), x[k]);
    const double c = r / L(k, k);
    const double s = x[k] / L(k, k);
    L(k, k) = r;
    for (Index i = k + 1; i < n; ++i) {
      L(i, k) = (L(i, k) + s * x[i]) / c;
      x[i] = c * x[i] - s * L(i, k);
    }
  }
}

}  // namespace oudrift
