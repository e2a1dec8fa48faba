#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace oudrift {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Largest square dimension the dense kernels accept.
inline constexpr Index kMaxDim = 64;

/// Default relative threshold for numerical-rank decisions (SVD cutoff).
inline constexpr double kDefaultRankTol = 1e-8;

/// Half-plane classification tolerance: tol_class = 1e-9 * (1 + ||F||).
inline double classification_tol(const Matrix& F) { return 1e-9 * (1.0 + F.norm()); }

/// Thrown when an eigenvalue sits too close to a selection boundary to
/// classify it into one half plane or the other.
struct ClassificationAmbiguousError : std::runtime_error {
  explicit ClassificationAmbiguousError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when a symmetric statistic that must be invertible is numerically
/// singular; carries the offending smallest eigenvalue.
struct SingularStatisticError : std::runtime_error {
  SingularStatisticError(const std::string& msg, double lmin)
      : std::runtime_error(msg), lambda_min(lmin) {}
  double lambda_min;
};

/// Thrown by iterative kernels that fail to converge or meet their residual
/// contract (QR sweeps, Schur block swaps, indefinite covariances).
struct KernelError : std::runtime_error {
  explicit KernelError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_square(const Matrix& M, const std::string& who) {
  require(M.rows() == M.cols(), who + ": matrix must be square, got " +
                                    std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
}

inline void require_finite(const Matrix& M, const std::string& who) {
  if (!M.allFinite()) throw std::invalid_argument(who + ": matrix has non-finite entries");
}

inline void require_finite(const Vector& v, const std::string& who) {
  if (!v.allFinite()) throw std::invalid_argument(who + ": vector has non-finite entries");
}

inline void require_dim_cap(const Matrix& M, const std::string& who) {
  require(M.rows() <= kMaxDim && M.cols() <= kMaxDim,
          who + ": dimension exceeds supported cap of " + std::to_string(kMaxDim));
}

}  // namespace oudrift
