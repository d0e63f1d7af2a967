// Copyright (c) blockry contributors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "blockry/kernels.hpp"
#include "oracles.hpp"

using namespace blockry;

namespace {

double reconstruction_error(const QrFactors& qr, const Matrix& a) {
  return (qr.q * qr.r - a).norm();
}

void check_cs_reconstruction(const CsDecomposition& cs, const Matrix& h, double tol) {
  const Index L = h.rows() / 2;
  const Matrix c = cs.cosines.asDiagonal();
  const Matrix s = cs.sines.asDiagonal();
  CHECK((cs.u1 * c * cs.v1.transpose() - h.topLeftCorner(L, L)).norm() <= tol);
  CHECK((cs.u1 * s * cs.v2.transpose() - h.topRightCorner(L, L)).norm() <= tol);
  CHECK((cs.u2 * s * cs.v1.transpose() - h.bottomLeftCorner(L, L)).norm() <= tol);
  CHECK((cs.u2 * c * cs.v2.transpose() + h.bottomRightCorner(L, L)).norm() <= tol);
  for (Index i = 0; i < L; ++i) {
    CHECK(cs.cosines(i) * cs.cosines(i) + cs.sines(i) * cs.sines(i) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cs.angles(i) == doctest::Approx(std::atan2(cs.sines(i), cs.cosines(i))));
  }
  for (Index i = 0; i + 1 < L; ++i) {
    CHECK(cs.cosines(i) <= cs.cosines(i + 1) + 1e-12);
    CHECK(cs.sines(i) + 1e-12 >= cs.sines(i + 1));
  }
  const Matrix eye = Matrix::Identity(L, L);
  CHECK((cs.u1.transpose() * cs.u1 - eye).norm() <= 1e-7);
  CHECK((cs.u2.transpose() * cs.u2 - eye).norm() <= 1e-7);
  CHECK((cs.v1.transpose() * cs.v1 - eye).norm() <= 1e-7);
  CHECK((cs.v2.transpose() * cs.v2 - eye).norm() <= 1e-7);
}

void check_penrose(const Matrix& n_hat, const Matrix& x, double tol) {
  CHECK((n_hat * x * n_hat - n_hat).norm() <= tol);
  CHECK((x * n_hat * x - x).norm() <= tol);
  CHECK(((n_hat * x).transpose() - n_hat * x).norm() <= tol);
  CHECK(((x * n_hat).transpose() - x * n_hat).norm() <= tol);
}

}  // namespace

TEST_CASE("householder_qr identity") {
  const Matrix eye = Matrix::Identity(3, 3);
  const QrFactors qr = householder_qr(eye);
  CHECK(reconstruction_error(qr, eye) <= 1e-12);
  for (Index i = 0; i < 3; ++i) CHECK(std::abs(qr.r(i, i)) == doctest::Approx(1.0));
  CHECK(sign_equivalent(qr.q, eye, 1e-12));
}

TEST_CASE("householder_qr permutation column") {
  Matrix a(2, 1);
  a << 0.0, 1.0;
  const QrFactors qr = householder_qr(a);
  CHECK(std::abs(qr.r(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(qr.q(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(qr.q(0, 0)) <= 1e-14);
}

TEST_CASE("householder_qr random 6x3 against Gram-Schmidt oracle") {
  const Matrix a = oracles::random_matrix(6, 3, 101);
  const QrFactors qr = householder_qr(a);
  CHECK(reconstruction_error(qr, a) <= 1e-12 * a.norm());
  CHECK((qr.q.transpose() * qr.q - Matrix::Identity(6, 6)).norm() <= 1e-12);
  for (Index j = 0; j < 3; ++j) {
    for (Index i = j + 1; i < 6; ++i) CHECK(qr.r(i, j) == 0.0);
  }
  // Column spans agree with the modified Gram-Schmidt factorization. The
  // projector difference resolves span agreement below the reach of
  // cosine-based angles.
  const oracles::MgsQr mgs = oracles::mgs_qr(a);
  const Matrix q1 = qr.q.leftCols(3);
  CHECK((q1 * q1.transpose() - mgs.q * mgs.q.transpose()).norm() <= 1e-10);
  CHECK(principal_angles(q1, mgs.q).maxCoeff() <= 1e-7);
}

TEST_CASE("householder_qr rejects wide input") {
  CHECK_THROWS_AS(householder_qr(Matrix::Zero(2, 3)), contract_error);
}

TEST_CASE("svd diagonal and zero") {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3.0, 2.0, 1.0;
  const SvdFactors f = svd(d);
  CHECK((f.singular_values - Vector(Vector::LinSpaced(3, 3.0, 1.0))).norm() <= 1e-12);

  const SvdFactors z = svd(Matrix::Zero(2, 2));
  CHECK(z.singular_values.maxCoeff() <= 1e-15);
}

TEST_CASE("svd random 5x3 against Jacobi eigenvalue oracle") {
  const Matrix a = oracles::random_matrix(5, 3, 55);
  const SvdFactors f = svd(a);
  CHECK((f.u * f.singular_values.asDiagonal() * f.v.transpose() - a).norm() <=
        1e-11 * a.norm());
  for (Index i = 0; i + 1 < 3; ++i) {
    CHECK(f.singular_values(i) + 1e-14 >= f.singular_values(i + 1));
  }
  const Vector eigs = oracles::jacobi_symmetric_eigenvalues(a.transpose() * a);
  for (Index i = 0; i < 3; ++i) {
    CHECK(f.singular_values(i) * f.singular_values(i) ==
          doctest::Approx(eigs(i)).epsilon(1e-10));
  }
}

TEST_CASE("numerical_rank basics") {
  CHECK(numerical_rank(Matrix::Zero(4, 4)) == 0);
  CHECK(numerical_rank(Matrix::Identity(3, 3)) == 3);
  Matrix c6(2, 2);
  c6 << 0.0, 0.0, -1.0, 0.0;
  CHECK(numerical_rank(c6) == 1);
}

TEST_CASE("numerical_rank invariant under orthogonal multiplication") {
  // Well-separated spectrum so the rank decision is stable.
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    Matrix d = Matrix::Zero(5, 5);
    d.diagonal() << 4.0, 2.0, 1.0, 1e-3, 0.0;
    const Matrix q1 = oracles::random_orthogonal(5, 900 + seed);
    const Matrix q2 = oracles::random_orthogonal(5, 1900 + seed);
    const Matrix a = q1 * d * q2;
    CHECK(numerical_rank(a) == numerical_rank(d));
    CHECK(numerical_rank(a) == 4);
  }
}

TEST_CASE("pinv_structured_upper zero and invertible") {
  CHECK(pinv_structured_upper(Matrix::Zero(3, 3)).norm() == 0.0);

  Matrix r(3, 3);
  r << 2.0, -1.0, 0.5, 0.0, 1.5, 1.0, 0.0, 0.0, -3.0;
  const Matrix x = pinv_structured_upper(r);
  CHECK((x - oracles::back_substitution_inverse(r)).norm() <= 1e-12);
}

TEST_CASE("pinv_structured_upper nilpotent example") {
  Matrix n6(2, 2);
  n6 << 0.0, 1.0, 0.0, 0.0;
  const Matrix x = pinv_structured_upper(n6);
  Matrix expected(2, 2);
  expected << 0.0, 0.0, 1.0, 0.0;
  CHECK((x - expected).norm() <= 1e-14);
  CHECK((x - oracles::pinv(n6)).norm() <= 1e-12);
  check_penrose(n6, x, 1e-10);
}

TEST_CASE("pinv_structured_upper satisfies Penrose identities") {
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    for (Index r = 0; r <= 4; ++r) {
      Matrix n_hat = Matrix::Zero(4, 4);
      const Matrix y2 = oracles::random_matrix(r, 4, 300 + 10 * seed + r);
      // Upper triangular with full row rank.
      for (Index i = 0; i < r; ++i) {
        for (Index j = i; j < 4; ++j) n_hat(i, j) = y2(i, j);
        n_hat(i, i) += (n_hat(i, i) >= 0 ? 2.0 : -2.0);
      }
      const Matrix x = pinv_structured_upper(n_hat);
      check_penrose(n_hat, x, 1e-10);
      for (Index j = r; j < 4; ++j) CHECK(x.col(j).norm() == 0.0);
      CHECK((x - oracles::pinv(n_hat)).norm() <= 1e-9);
    }
  }
}

TEST_CASE("pinv_structured_upper rejects non-triangular input") {
  Matrix bad(2, 2);
  bad << 1.0, 0.0, 1.0, 1.0;
  CHECK_THROWS_AS(pinv_structured_upper(bad), contract_error);
}

TEST_CASE("echelon_qr exposes dependent columns") {
  Matrix u(4, 2);
  u.setZero();
  u(2, 0) = 2.0;  // second column dependent
  const EchelonQr qr = echelon_qr(u, 1e-12);
  CHECK(qr.rank == 1);
  CHECK(qr.dependent_columns == std::vector<Index>{1});
  CHECK((qr.q * qr.r - u).norm() <= 1e-13);
  CHECK(qr.r(0, 0) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("cs_decompose scalar Givens case") {
  Matrix h(2, 2);
  h << 0.6, 0.8, 0.8, -0.6;
  const CsDecomposition cs = cs_decompose(h);
  CHECK(cs.cosines(0) == doctest::Approx(0.6));
  CHECK(cs.sines(0) == doctest::Approx(0.8));
  check_cs_reconstruction(cs, h, 1e-12);
}

TEST_CASE("cs_decompose block swap: total stagnation pattern") {
  const Index L = 3;
  Matrix h = Matrix::Zero(2 * L, 2 * L);
  h.topRightCorner(L, L).setIdentity();
  h.bottomLeftCorner(L, L).setIdentity();
  const CsDecomposition cs = cs_decompose(h);
  CHECK(cs.cosines.maxCoeff() <= 1e-14);
  CHECK(cs.sines.minCoeff() >= 1.0 - 1e-14);
  check_cs_reconstruction(cs, h, 1e-10);
}

TEST_CASE("cs_decompose random orthogonal against SVD oracle") {
  for (std::uint64_t seed : {11u, 12u, 13u, 14u}) {
    const Matrix h = oracles::random_orthogonal(6, seed);
    const CsDecomposition cs = cs_decompose(h);
    check_cs_reconstruction(cs, h, 1e-10);
    // Cosines are the singular values of the (1,1) block.
    Vector sv = Eigen::JacobiSVD<Matrix>(h.topLeftCorner(3, 3)).singularValues();
    for (Index i = 0; i < 3; ++i) {
      CHECK(cs.cosines(i) == doctest::Approx(sv(2 - i)).epsilon(1e-10));
    }
  }
}

TEST_CASE("cs_decompose returns angle pairing with near-degenerate cosines") {
  // Rotation angles close together force the clustered-cosine path.
  const double a1 = 0.3, a2 = 0.3 + 1e-9;
  Matrix h = Matrix::Zero(4, 4);
  h(0, 0) = std::cos(a1);
  h(0, 2) = std::sin(a1);
  h(2, 0) = std::sin(a1);
  h(2, 2) = -std::cos(a1);
  h(1, 1) = std::cos(a2);
  h(1, 3) = std::sin(a2);
  h(3, 1) = std::sin(a2);
  h(3, 3) = -std::cos(a2);
  const CsDecomposition cs = cs_decompose(h);
  check_cs_reconstruction(cs, h, 1e-10);
}

TEST_CASE("cs_decompose near-identity block: tiny sines") {
  // Small rotations drive the sines toward zero (completion path).
  const double a1 = 3e-5, a2 = 1e-8;
  Matrix h = Matrix::Zero(4, 4);
  h(0, 0) = std::cos(a1);
  h(0, 2) = std::sin(a1);
  h(2, 0) = std::sin(a1);
  h(2, 2) = -std::cos(a1);
  h(1, 1) = std::cos(a2);
  h(1, 3) = std::sin(a2);
  h(3, 1) = std::sin(a2);
  h(3, 3) = -std::cos(a2);
  const CsDecomposition cs = cs_decompose(h);
  check_cs_reconstruction(cs, h, 1e-10);
}

TEST_CASE("cs_decompose rejects non-orthogonal input") {
  Matrix h = Matrix::Identity(4, 4);
  h(0, 0) = 2.0;
  CHECK_THROWS_AS(cs_decompose(h), contract_error);
}

TEST_CASE("principal_angles identical and orthogonal subspaces") {
  const Matrix basis = oracles::mgs_qr(oracles::random_matrix(7, 3, 77)).q;
  CHECK(principal_angles(basis, basis).maxCoeff() <= 1e-7);

  Matrix e1 = Matrix::Zero(4, 1), e2 = Matrix::Zero(4, 1);
  e1(0, 0) = 1.0;
  e2(1, 0) = 1.0;
  const Vector angles = principal_angles(e1, e2);
  CHECK(angles(0) == doctest::Approx(std::acos(0.0)));
}

TEST_CASE("principal_angles against grid-search oracle in R^8") {
  const Matrix u = oracles::mgs_qr(oracles::random_matrix(8, 2, 81)).q;
  const Matrix v = oracles::mgs_qr(oracles::random_matrix(8, 2, 82)).q;
  const Vector angles = principal_angles(u, v);
  const Vector brute = oracles::grid_principal_angles_2d(u, v);
  CHECK(std::abs(angles(0) - brute(0)) <= 1e-3);
  CHECK(std::abs(angles(1) - brute(1)) <= 1e-3);
}

TEST_CASE("principal_angles symmetry and right-multiplication invariance") {
  const Matrix u = oracles::mgs_qr(oracles::random_matrix(9, 3, 91)).q;
  const Matrix v = oracles::mgs_qr(oracles::random_matrix(9, 2, 92)).q;
  const Vector a1 = principal_angles(u, v);
  const Vector a2 = principal_angles(v, u);
  CHECK((a1 - a2).cwiseAbs().maxCoeff() <= 1e-12);
  const Matrix rot = oracles::random_orthogonal(3, 93);
  const Vector a3 = principal_angles(u * rot, v);
  CHECK((a1 - a3).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("principal_angles rejects non-orthonormal bases") {
  CHECK_THROWS_AS(principal_angles(2.0 * Matrix::Identity(3, 2), Matrix::Identity(3, 2)),
                  contract_error);
}

TEST_CASE("sign_equivalent") {
  Matrix a(2, 2);
  a << 1.0, 2.0, 3.0, 4.0;
  Matrix flipped = a;
  flipped.row(1) = -flipped.row(1);
  flipped.col(0) = -flipped.col(0);
  CHECK(sign_equivalent(a, flipped, 1e-12));
  Matrix other = a;
  other(0, 1) = -other(0, 1);  // not reachable by row/column flips
  CHECK(!sign_equivalent(a, other, 1e-8));
  CHECK(sign_equivalent(-Matrix::Identity(4, 4), Matrix::Identity(4, 4), 1e-12));
}
