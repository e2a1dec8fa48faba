#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oudrift/matkernel.hpp"
#include "oudrift/stats.hpp"
#include "oudrift/types.hpp"

namespace oudrift {

/// Controllability-style matrix [A | FA | ... | F^{p-1}A].
inline Matrix controllability_matrix(const Matrix& F, const Matrix& A) {
  require_square(F, "controllability_matrix");
  require(F.rows() == A.rows(), "controllability_matrix: dimension mismatch");
  const Index p = F.rows();
  const Index r = A.cols();
  Matrix K(p, p * r);
  Matrix block = A;
  for (Index k = 0; k < p; ++k) {
    K.middleCols(k * r, r) = block;
    if (k + 1 < p) block = F * block;
  }
  return K;
}

struct RankCheck {
  bool holds;
  Index rank;
};

/// Condition (a): rank [A | FA | ... | F^{p-1}A] = p, decided by singular
/// values above tol * sigma_max.
inline RankCheck check_rank_condition(const Matrix& F, const Matrix& A,
                                      double tol = kDefaultRankTol) {
  const Matrix K = controllability_matrix(F, A);
  const Index rank = numerical_rank(K, tol);
  return {rank == F.rows(), rank};
}

/// Condition (b): eigenvalues with Re > tol are pairwise distinct
/// (separation above tol in complex modulus).
inline bool check_condition_b(const ComplexSpectrum& spectrum, double tol) {
  std::vector<std::complex<double>> right;
  for (const auto& z : spectrum.values)
    if (z.real() > tol) right.push_back(z);
  for (std::size_t i = 0; i < right.size(); ++i)
    for (std::size_t j = i + 1; j < right.size(); ++j)
      if (std::abs(right[i] - right[j]) <= tol) return false;
  return true;
}

/// Condition (b'): the minimal polynomial of F has full degree p, tested as
/// linear independence of {I, F, ..., F^{p-1}} via the rank of their
/// vectorized stack (rows normalized so the power growth of ||F^k|| cannot
/// mask an independent direction).
inline bool check_condition_b_prime(const Matrix& F, double tol = kDefaultRankTol) {
  require_square(F, "check_condition_b_prime");
  require_finite(F, "check_condition_b_prime");
  const Index p = F.rows();
  Matrix stack(p, p * p);
  Matrix power = Matrix::Identity(p, p);
  for (Index k = 0; k < p; ++k) {
    Eigen::Map<const Vector> flat(power.data(), p * p);
    const double norm = flat.norm();
    stack.row(k) = (norm > 0 ? flat.transpose() / norm : flat.transpose());
    if (k + 1 < p) power = F * power;
  }
  return numerical_rank(stack, tol) == p;
}

enum class SpectrumClass { Right, Stable, Imaginary, Zero, LeftMixed, Mixed };

inline std::string to_string(SpectrumClass c) {
  switch (c) {
    case SpectrumClass::Right: return "right";
    case SpectrumClass::Stable: return "stable";
    case SpectrumClass::Imaginary: return "imaginary";
    case SpectrumClass::Zero: return "zero";
    case SpectrumClass::LeftMixed: return "left-mixed";
    case SpectrumClass::Mixed: return "mixed";
  }
  return "?";
}

/// Spectral summary of a drift matrix: half-plane counts, the growth
/// exponents lambda_0 / Lambda_0, and the polynomial-growth indices of the
/// axis part (gamma for the zero block, rho for the imaginary block).
struct SpectrumReport {
  ComplexSpectrum spectrum;
  std::optional<double> lambda0;  // min positive real part, if p0 > 0
  double Lambda0 = 0.0;           // max real part
  Index p0 = 0;                   // eigenvalues with Re > tol
  Index p1 = 0;
  Index rho = 0;    // largest imaginary-pair multiplicity (proxy for block size / 2)
  Index gamma = 0;  // nilpotency index of the zero-eigenvalue block
  SpectrumClass cls = SpectrumClass::Stable;
};

namespace detail {

inline Index zero_block_gamma(const Matrix& F, double tol) {
  const auto restricted = ordered_schur(F, select_zero_modulus(tol));
  const Index pz = restricted.k;
  if (pz == 0) return 0;
  const Matrix N = restricted.T.topLeftCorner(pz, pz);
  const double scale = std::max(1.0, N.norm());
  Matrix power = N;
  for (Index k = 1; k <= pz; ++k) {
    double cap = kDefaultRankTol;
    for (Index i = 0; i < k; ++i) cap *= scale;
    if (power.norm() <= cap) return k;
    power = N * power;
  }
  return pz;
}

inline Index imaginary_block_rho(const ComplexSpectrum& spec, double tol) {
  std::vector<double> freqs;
  for (const auto& z : spec.values)
    if (std::abs(z.real()) <= tol && z.imag() > tol) freqs.push_back(z.imag());
  if (freqs.empty()) return 0;
  std::sort(freqs.begin(), freqs.end());
  const double ctol = 1e-5 * (1.0 + freqs.back());
  Index best = 1, run = 1;
  for (std::size_t i = 1; i < freqs.size(); ++i) {
    run = (freqs[i] - freqs[i - 1] <= ctol) ? run + 1 : 1;
    best = std::max(best, run);
  }
  return best;
}

}  // namespace detail

/// Classifies the spectrum of F against the half-plane trichotomy.
/// Eigenvalues with |Re| <= tol count as left-half-space (the axis cluster
/// belongs with the negative side).
inline SpectrumReport classify(const Matrix& F, double tol = -1.0) {
  require_square(F, "classify");
  const double tc = tol > 0 ? tol : classification_tol(F);
  SpectrumReport rep;
  rep.spectrum = eigenvalues(F, tc);
  rep.Lambda0 = rep.spectrum.max_real();
  rep.p0 = rep.spectrum.count_re_greater(tc);
  rep.p1 = F.rows() - rep.p0;
  rep.lambda0 = rep.spectrum.min_positive_real(tc);

  Index n_neg = 0, n_zero = 0, n_imag = 0;
  for (const auto& z : rep.spectrum.values) {
    if (z.real() < -tc)
      ++n_neg;
    else if (std::abs(z.real()) <= tc)
      (std::abs(z.imag()) <= tc ? n_zero : n_imag)++;
  }

  const Index p = F.rows();
  if (rep.p0 == p)
    rep.cls = SpectrumClass::Right;
  else if (rep.p0 > 0)
    rep.cls = SpectrumClass::Mixed;
  else if (n_neg == p)
    rep.cls = SpectrumClass::Stable;
  else if (n_zero == p)
    rep.cls = SpectrumClass::Zero;
  else if (n_imag == p)
    rep.cls = SpectrumClass::Imaginary;
  else
    rep.cls = SpectrumClass::LeftMixed;

  rep.gamma = (n_zero > 0) ? detail::zero_block_gamma(F, tc) : 0;
  rep.rho = detail::imaginary_block_rho(rep.spectrum, tc);
  return rep;
}

/// The process dY = F Y dt + A dW with starting point Y0.
/// Construction validates the rank condition (a) unless bypassed, so a
/// validated model always admits an invertible information matrix
/// for large horizons.
struct OUModel {
  Matrix F;
  Matrix A;
  Vector Y0;

  static OUModel make(Matrix F, Matrix A, Vector Y0 = Vector(),
                      double rank_tol = kDefaultRankTol) {
    OUModel m = make_unchecked(std::move(F), std::move(A), std::move(Y0));
    const auto rc = check_rank_condition(m.F, m.A, rank_tol);
    if (!rc.holds)
      throw std::invalid_argument("OUModel: rank condition fails (rank " +
                                  std::to_string(rc.rank) + " of " + std::to_string(m.p()) + ")");
    return m;
  }

  /// Skips the rank validation; for degenerate-noise negative tests only.
  static OUModel make_unchecked(Matrix F, Matrix A, Vector Y0 = Vector()) {
    require_square(F, "OUModel");
    require(F.rows() >= 1 && A.cols() >= 1, "OUModel: p and r must be at least 1");
    require(F.rows() == A.rows(), "OUModel: F and A row counts differ");
    require_dim_cap(F, "OUModel");
    require_finite(F, "OUModel");
    require_finite(A, "OUModel");
    if (Y0.size() == 0) Y0 = Vector::Zero(F.rows());
    require(Y0.size() == F.rows(), "OUModel: Y0 dimension mismatch");
    require_finite(Y0, "OUModel");
    return OUModel{std::move(F), std::move(A), std::move(Y0)};
  }

  Index p() const { return F.rows(); }
  Index r() const { return A.cols(); }
  Matrix AAt() const { return A * A.transpose(); }
};

/// Companion-form model of a continuous autoregressive process of order p:
/// scalar observation with drift coefficients alphas = (a_1, ..., a_p) and
/// noise entering the highest derivative only.
inline OUModel car_model(const std::vector<double>& alphas, double sigma) {
  require(!alphas.empty(), "car_model: need at least one coefficient");
  require(sigma > 0.0 && std::isfinite(sigma), "car_model: sigma must be positive");
  const Index p = static_cast<Index>(alphas.size());
  Matrix F = Matrix::Zero(p, p);
  if (p > 1) F.topRightCorner(p - 1, p - 1) = Matrix::Identity(p - 1, p - 1);
  for (Index j = 0; j < p; ++j) F(p - 1, j) = alphas[static_cast<std::size_t>(p - 1 - j)];
  Matrix A = Matrix::Zero(p, 1);
  A(p - 1, 0) = sigma;
  return OUModel::make(std::move(F), std::move(A));
}

/// Invariant-law covariance of a stable model.
inline Matrix stationary_covariance(const OUModel& model, double tol = -1.0) {
  const auto rep = classify(model.F, tol);
  if (rep.cls != SpectrumClass::Stable)
    throw std::domain_error("stationary_covariance: model is not stable (class " +
                            to_string(rep.cls) + ")");
  return lyapunov_stationary(model.F, model.AAt());
}

/// Log-likelihood of the drift F given the sufficient statistics, defined
/// when AA' is nonsingular:
///   L(F) = Tr[F' (AA')^{-1} S] - (1/2) Tr[(AA')^{-1} F C F'].
inline double log_likelihood(const OUModel& model, const SufficientStats& stats) {
  require(stats.p() == model.p(), "log_likelihood: statistics dimension mismatch");
  const Matrix W = model.AAt();
  const auto eig = sym_eig(W);
  if (eig.values[0] <= 1e-12 * std::max(1.0, eig.values[eig.values.size() - 1]))
    throw std::domain_error(
        "log_likelihood: AA' is singular, no explicit likelihood; "
        "the drift estimator itself does not need one");
  Eigen::LLT<Matrix> llt(W);
  const double term1 = (model.F.transpose() * llt.solve(stats.S)).trace();
  const double term2 = 0.5 * llt.solve(model.F * stats.C * model.F.transpose()).trace();
  return term1 - term2;
}

/// Gradient of the log-likelihood in F: (AA')^{-1} (S - F C).
inline Matrix log_likelihood_gradient(const OUModel& model, const SufficientStats& stats) {
  const Matrix W = model.AAt();
  Eigen::LLT<Matrix> llt(W);
  return llt.solve(stats.S - model.F * stats.C);
}

}  // namespace oudrift
