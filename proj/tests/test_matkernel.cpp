#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>

#include "oudrift/matkernel.hpp"
#include "oudrift/rng.hpp"

using namespace oudrift;

namespace {

Matrix random_matrix(CounterRng& rng, Index rows, Index cols, double scale = 1.0) {
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) M(i, j) = scale * rng.next_normal();
  return M;
}

Matrix random_psd(CounterRng& rng, Index p) {
  const Matrix G = random_matrix(rng, p, p);
  return G * G.transpose();
}

// The 5x5 example whose characteristic polynomial is (t-2)^3 (t^2+1).
Matrix example_5x5() {
  Matrix M(5, 5);
  M << 2, -1, 0, 1, 0,
       0, -8, 6, 14, 1,
       0, 10, -4, -14, -1,
       0, -10, 6, 16, 1,
       0, -5, 3, 7, 0;
  return M;
}

std::vector<std::complex<double>> sorted_values(const ComplexSpectrum& s) {
  auto v = s.values;
  std::sort(v.begin(), v.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return v;
}

}  // namespace

TEST_CASE("matexp of the zero matrix is the identity", "[matkernel]") {
  const Matrix E = matexp(Matrix::Zero(2, 2), 5.0);
  CHECK((E - Matrix::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("matexp matches the rotation closed form", "[matkernel]") {
  Matrix F(2, 2);
  F << 0, -1, 1, 0;
  const double half_pi = std::asin(1.0);
  CHECK((matexp(F, half_pi) - F).norm() < 1e-12);

  // I cos(vt) + (F/v) sin(vt) for a batch of angles and frequencies
  CounterRng rng(11);
  for (int i = 0; i < 25; ++i) {
    const double v = 0.2 + 3.0 * rng.next_uniform();
    const double t = -4.0 + 8.0 * rng.next_uniform();
    Matrix Fv(2, 2);
    Fv << 0, -v, v, 0;
    const Matrix closed =
        std::cos(v * t) * Matrix::Identity(2, 2) + std::sin(v * t) / v * Fv;
    CHECK((matexp(Fv, t) - closed).norm() < 1e-12);
  }
}

TEST_CASE("matexp of a nilpotent matrix truncates the series", "[matkernel]") {
  Matrix N(2, 2);
  N << 0, 1, 0, 0;
  Matrix expected(2, 2);
  expected << 1, 3, 0, 1;
  CHECK((matexp(N, 3.0) - expected).norm() < 1e-12);

  Matrix N3 = Matrix::Zero(3, 3);
  N3(0, 1) = 2.0;
  N3(1, 2) = -1.0;
  const double t = 1.7;
  Matrix expect3 = Matrix::Identity(3, 3) + N3 * t + 0.5 * t * t * N3 * N3;
  CHECK((matexp(N3, t) - expect3).norm() < 1e-12);
}

TEST_CASE("matexp refuses overflowing inputs", "[matkernel]") {
  Matrix M = 100.0 * Matrix::Identity(2, 2);
  CHECK_THROWS_AS(matexp(M, 10.0), std::overflow_error);
  CHECK_THROWS_AS(matexp(Matrix::Identity(2, 3), 1.0), std::invalid_argument);
  Matrix bad(1, 1);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(matexp(bad, 1.0), std::invalid_argument);
}

TEST_CASE("matexp semigroup and inverse properties", "[matkernel]") {
  CounterRng rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const Index p = 2 + static_cast<Index>(rng.next_u64() % 5);  // up to 6
    Matrix M = random_matrix(rng, p, p);
    const double s = -2.0 + 4.0 * rng.next_uniform();
    const double t = -2.0 + 4.0 * rng.next_uniform();
    if ((M * (s + t)).norm() > 10.0) M *= 10.0 / (M * (s + t)).norm();

    const Matrix whole = matexp(M, s + t);
    CHECK((matexp(M, s) * matexp(M, t) - whole).norm() <= 1e-9 * std::max(1.0, whole.norm()));

    const Matrix inv = matexp(M, t).partialPivLu().solve(Matrix::Identity(p, p));
    CHECK((inv - matexp(M, -t)).norm() <= 1e-9 * std::max(1.0, matexp(M, -t).norm()));
  }
}

TEST_CASE("eigenvalues of simple matrices", "[matkernel]") {
  Matrix D(2, 2);
  D << 2, 0, 0, -1;
  auto vals = sorted_values(eigenvalues(D));
  CHECK(std::abs(vals[0] - std::complex<double>(-1, 0)) < 1e-12);
  CHECK(std::abs(vals[1] - std::complex<double>(2, 0)) < 1e-12);

  Matrix R(2, 2);
  R << 0, -1, 1, 0;
  vals = sorted_values(eigenvalues(R));
  CHECK(std::abs(vals[0] - std::complex<double>(0, -1)) < 1e-12);
  CHECK(std::abs(vals[1] - std::complex<double>(0, 1)) < 1e-12);
}

TEST_CASE("eigenvalues of the 5x5 example match (t-2)^3 (t^2+1)", "[matkernel]") {
  const auto spec = eigenvalues(example_5x5());
  auto vals = sorted_values(spec);
  const std::vector<std::complex<double>> expected = {
      {0, -1}, {0, 1}, {2, 0}, {2, 0}, {2, 0}};
  REQUIRE(vals.size() == expected.size());
  for (std::size_t i = 0; i < vals.size(); ++i)
    CHECK(std::abs(vals[i] - expected[i]) < 1e-7);

  // conjugate pairing: imaginary parts cancel
  double im_sum = 0.0;
  for (const auto& z : spec.values) im_sum += z.imag();
  CHECK(std::abs(im_sum) < 1e-12 * (1.0 + example_5x5().norm()));
}

TEST_CASE("spectral radius growth rates (log norm asymptotics)", "[matkernel]") {
  CounterRng rng(37);
  const double T = 40.0;
  for (int trial = 0; trial < 6; ++trial) {
    const Index p = 2 + static_cast<Index>(rng.next_u64() % 3);
    Vector eigs(p);
    for (Index i = 0; i < p; ++i) eigs[i] = 0.3 + 1.2 * rng.next_uniform();
    const Matrix S = Matrix::Identity(p, p) + 0.2 * random_matrix(rng, p, p);
    const Matrix F = S * eigs.asDiagonal() * S.inverse();
    const double lambda0 = eigs.minCoeff();
    const double Lambda0 = eigs.maxCoeff();

    const double up = std::log(matexp(F, T).operatorNorm()) / T;
    const double down = std::log(matexp(F, -T).operatorNorm()) / T;
    CHECK(std::abs(up - Lambda0) <= 0.05);
    CHECK(std::abs(down + lambda0) <= 0.05);
  }
}

TEST_CASE("eigenvalue product inequalities for psd sandwiches", "[matkernel]") {
  CounterRng rng(41);
  for (int trial = 0; trial < 120; ++trial) {
    const Index p = 1 + static_cast<Index>(rng.next_u64() % 5);
    const Matrix C = random_psd(rng, p);
    const Matrix A0 = random_matrix(rng, p, p);

    const auto ec = sym_eig(C);
    const auto ea = sym_eig(A0 * A0.transpose());
    const auto es = sym_eig(A0 * C * A0.transpose());
    const double cmin = ec.values[0], cmax = ec.values[p - 1];
    const double amin = ea.values[0], amax = ea.values[p - 1];
    const double smin = es.values[0], smax = es.values[p - 1];
    const double slack = 1e-10 * (1.0 + cmax * amax);

    CHECK(cmax * amax >= smax - slack);
    CHECK(smax >= cmin * amax - slack);
    CHECK(cmax * amin >= smin - slack);
    CHECK(smin >= cmin * amin - slack);
  }
}

TEST_CASE("ordered_schur moves selected eigenvalues to the leading block", "[matkernel]") {
  Matrix D(2, 2);
  D << 1, 0, 0, -1;
  auto res = ordered_schur(D, select_right_halfplane(1e-9));
  CHECK(res.k == 1);
  CHECK(std::abs(res.T(0, 0) - 1.0) < 1e-12);
  CHECK((res.Q * res.T * res.Q.transpose() - D).norm() < 1e-10);

  // empty selection is fine
  Matrix S(2, 2);
  S << -1, 0.3, 0, -2;
  res = ordered_schur(S, select_right_halfplane(1e-9));
  CHECK(res.k == 0);

  // the 5x5 example has three eigenvalues in the right half plane
  const Matrix M = example_5x5();
  res = ordered_schur(M, select_right_halfplane(classification_tol(M)));
  CHECK(res.k == 3);
  CHECK((res.Q * res.Q.transpose() - Matrix::Identity(5, 5)).norm() < 1e-10);
  CHECK((res.Q * res.T * res.Q.transpose() - M).norm() < 1e-9 * M.norm());
  const auto lead = eigenvalues(res.T.topLeftCorner(3, 3));
  for (const auto& z : lead.values) CHECK(std::abs(z - std::complex<double>(2, 0)) < 1e-6);
}

TEST_CASE("ordered_schur preserves the selected multiset", "[matkernel]") {
  CounterRng rng(53);
  for (int trial = 0; trial < 40; ++trial) {
    const Index p = 2 + static_cast<Index>(rng.next_u64() % 5);
    const Matrix M = random_matrix(rng, p, p);
    const auto full = eigenvalues(M);
    const double tol = classification_tol(M);
    bool boundary = false;
    for (const auto& z : full.values)
      if (std::abs(z.real()) > tol && std::abs(z.real()) < 2 * tol) boundary = true;
    if (boundary) continue;

    const auto res = ordered_schur(M, select_right_halfplane(tol));
    CHECK(res.k == full.count_re_greater(tol));
    if (res.k == 0) continue;

    auto selected = sorted_values(eigenvalues(res.T.topLeftCorner(res.k, res.k)));
    std::vector<std::complex<double>> expected;
    for (const auto& z : full.values)
      if (z.real() > tol) expected.push_back(z);
    std::sort(expected.begin(), expected.end(), [](auto a, auto b) {
      return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    REQUIRE(selected.size() == expected.size());
    for (std::size_t i = 0; i < selected.size(); ++i)
      CHECK(std::abs(selected[i] - expected[i]) < 1e-8 * (1.0 + std::abs(expected[i])));
  }
}

TEST_CASE("ordered_schur flags boundary eigenvalues", "[matkernel]") {
  Matrix M = Matrix::Zero(2, 2);
  M(0, 0) = 1.5e-3;
  M(1, 1) = -1.0;
  CHECK_THROWS_AS(ordered_schur(M, select_right_halfplane(1e-3)), ClassificationAmbiguousError);
}

TEST_CASE("stationary Lyapunov solutions", "[matkernel]") {
  CHECK((lyapunov_stationary(-0.5 * Matrix::Identity(2, 2), Matrix::Identity(2, 2)) -
         Matrix::Identity(2, 2)).norm() < 1e-10);

  Matrix F(2, 2);
  F << -1, 0, 0, -2;
  Matrix expected(2, 2);
  expected << 0.5, 0, 0, 0.25;
  CHECK((lyapunov_stationary(F, Matrix::Identity(2, 2)) - expected).norm() < 1e-10);

  CHECK_THROWS_AS(lyapunov_stationary(Matrix::Identity(2, 2), Matrix::Identity(2, 2)),
                  std::domain_error);
}

TEST_CASE("Lyapunov solution matches Simpson quadrature oracle", "[matkernel]") {
  Matrix F(2, 2);
  F << -1, 1, 0, -2;
  const Matrix S = lyapunov_stationary(F, Matrix::Identity(2, 2));

  // independent route: composite Simpson of e^{Fu} e^{F'u} over [0, 40]
  const int n = 4000;
  const double h = 40.0 / n;
  Matrix acc = Matrix::Zero(2, 2);
  for (int i = 0; i <= n; ++i) {
    const double u = i * h;
    const Matrix g = matexp(F, u) * matexp(F.transpose(), u);
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += w * g;
  }
  acc *= h / 3.0;
  CHECK((S - acc).norm() < 1e-8);
  CHECK((F * S + S * F.transpose() + Matrix::Identity(2, 2)).norm() < 1e-9);
}

TEST_CASE("transition noise covariance", "[matkernel]") {
  CHECK((noise_covariance(Matrix::Zero(2, 2), Matrix::Identity(2, 2), 0.25) -
         0.25 * Matrix::Identity(2, 2)).norm() < 1e-13);

  Matrix f(1, 1), one(1, 1);
  f(0, 0) = -1.0;
  one(0, 0) = 1.0;
  const double expected = (1.0 - std::exp(-2.0)) / 2.0;
  CHECK(std::abs(noise_covariance(f, one, 1.0)(0, 0) - expected) < 1e-13);

  Matrix R(2, 2);
  R << 0, -1, 1, 0;
  const double dt = 3.7;
  CHECK((noise_covariance(R, Matrix::Identity(2, 2), dt) - dt * Matrix::Identity(2, 2)).norm() <
        1e-12);

  CHECK_THROWS_AS(noise_covariance(R, Matrix::Identity(2, 2), 0.0), std::invalid_argument);
}

TEST_CASE("noise covariance approaches the stationary solution", "[matkernel]") {
  Matrix F(2, 2);
  F << -1, 1, 0, -2;  // non-normal on purpose
  const Matrix AAt = Matrix::Identity(2, 2);
  const Matrix limit = lyapunov_stationary(F, AAt);
  const double dt = 60.0 / 1.0;  // 60 / |lambda_0|
  CHECK((noise_covariance(F, AAt, dt) - limit).norm() <= 1e-8);

  const Matrix Q = noise_covariance(F, AAt, 0.37);
  CHECK((Q - Q.transpose()).norm() <= 1e-10 * Q.norm());
}

TEST_CASE("symmetric eigendecomposition basics", "[matkernel]") {
  Matrix D(2, 2);
  D << 3, 0, 0, 1;
  auto eig = sym_eig(D);
  CHECK(eig.values[0] == Catch::Approx(1.0));
  CHECK(eig.values[1] == Catch::Approx(3.0));

  const auto id = sym_eig(Matrix::Identity(4, 4));
  for (Index i = 0; i < 4; ++i) CHECK(id.values[i] == Catch::Approx(1.0));
}

TEST_CASE("symmetric eigenvalues match characteristic polynomial roots", "[matkernel]") {
  CounterRng rng(61);
  const Index p = 4;
  Matrix M = random_matrix(rng, p, p);
  M = symmetrized(M);
  const auto eig = sym_eig(M);

  // independent oracle: Faddeev-LeVerrier coefficients + bisection roots
  std::vector<double> coeff(p + 1, 0.0);  // det(xI - M) = sum coeff[k] x^k
  coeff[p] = 1.0;
  // Newton's identities: c_{p-k} = -(1/k) sum_{j=1}^{k} c_{p-k+j} tr(M^j)
  for (Index k = 1; k <= p; ++k) {
    double s = 0.0;
    Matrix Mj = Matrix::Identity(p, p);
    for (Index j = 1; j <= k; ++j) {
      Mj = M * Mj;
      s += coeff[p - k + j] * Mj.trace();
    }
    coeff[p - k] = -s / static_cast<double>(k);
  }
  auto poly = [&](double x) {
    double v = 0.0;
    for (Index k = p; k >= 0; --k) v = v * x + coeff[k];
    return v;
  };
  const double bound = M.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
  std::vector<double> roots;
  const int grid = 20000;
  double prev_x = -bound, prev_v = poly(prev_x);
  for (int i = 1; i <= grid; ++i) {
    const double x = -bound + 2.0 * bound * i / grid;
    const double v = poly(x);
    if (prev_v == 0.0) roots.push_back(prev_x);
    else if (prev_v * v < 0.0) {
      double lo = prev_x, hi = x;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (poly(lo) * poly(mid) <= 0.0 ? hi : lo) = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_x = x;
    prev_v = v;
  }
  REQUIRE(roots.size() == static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) CHECK(eig.values[i] == Catch::Approx(roots[i]).margin(1e-9));
}

TEST_CASE("psd factor and inverse square root", "[matkernel]") {
  CounterRng rng(71);
  const Matrix C = random_psd(rng, 3) + 0.1 * Matrix::Identity(3, 3);
  const Matrix L = psd_sqrt_factor(C);
  CHECK((L * L.transpose() - C).norm() < 1e-12 * C.norm());

  const Matrix W = sym_inv_sqrt(C);
  CHECK((W * C * W - Matrix::Identity(3, 3)).norm() < 1e-11);

  // rank-deficient psd still factors
  Matrix low = Matrix::Zero(2, 2);
  low(1, 1) = 4.0;
  const Matrix L2 = psd_sqrt_factor(low);
  CHECK((L2 * L2.transpose() - low).norm() < 1e-13);
  CHECK_THROWS_AS(sym_inv_sqrt(low), SingularStatisticError);

  Matrix indef(2, 2);
  indef << 1, 0, 0, -0.5;
  CHECK_THROWS_AS(psd_sqrt_factor(indef), KernelError);
}

TEST_CASE("cholesky rank-one update matches refactorization", "[matkernel]") {
  CounterRng rng(83);
  Matrix C = random_psd(rng, 4) + 0.5 * Matrix::Identity(4, 4);
  Matrix L = Eigen::LLT<Matrix>(C).matrixL();
  for (int i = 0; i < 20; ++i) {
    Vector x(4);
    for (Index j = 0; j < 4; ++j) x[j] = rng.next_normal();
    cholesky_rank1_update(L, x);
    C += x * x.transpose();
  }
  Matrix Lref = Eigen::LLT<Matrix>(C).matrixL();
  CHECK((L * L.transpose() - C).norm() < 1e-10 * C.norm());
  CHECK((L - Lref).norm() < 1e-9 * Lref.norm());
}
