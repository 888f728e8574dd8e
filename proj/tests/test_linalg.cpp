#include "freespec/linalg.hpp"
#include "freespec/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace freespec;
using Catch::Matchers::WithinAbs;

namespace {

CMatrix random_complex(GaussianStream& rng, Eigen::Index n) {
  CMatrix m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = rng.complex_normal();
  return m;
}

}  // namespace

TEST_CASE("imag_part on reference inputs", "[linalg]") {
  CMatrix b = kImag * CMatrix::Identity(2, 2);
  REQUIRE(max_abs(imag_part(b) - CMatrix::Identity(2, 2)) < 1e-15);

  CMatrix herm(2, 2);
  herm << Complex(1, 0), Complex(2, 1), Complex(2, -1), Complex(-3, 0);
  REQUIRE(max_abs(imag_part(herm)) < 1e-15);

  // entrywise oracle: ((b - b*)/2i)_{jk} = (b_{jk} - conj(b_{kj})) / 2i
  CMatrix c(2, 2);
  c << Complex(0, 1), Complex(1, 0), Complex(0, 0), Complex(0, 1);
  CMatrix expected(2, 2);
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k)
      expected(j, k) = (c(j, k) - std::conj(c(k, j))) / Complex(0, 2);
  REQUIRE(max_abs(imag_part(c) - expected) < 1e-15);
}

TEST_CASE("imag_part of the adjoint flips sign", "[linalg]") {
  GaussianStream rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    CMatrix b = random_complex(rng, 4);
    REQUIRE(max_abs(imag_part(b.adjoint()) + imag_part(b)) < 1e-13);
  }
}

TEST_CASE("half-plane membership with certified margin", "[linalg]") {
  auto chk = in_upper_half_plane(kImag * CMatrix::Identity(2, 2), 0.5);
  REQUIRE(chk.inside);
  REQUIRE_THAT(chk.certified_margin, WithinAbs(1.0, 1e-12));

  CMatrix herm(2, 2);
  herm << 1.0, 0.5, 0.5, 2.0;
  REQUIRE_FALSE(in_upper_half_plane(herm).inside);

  CMatrix diag = CMatrix::Zero(2, 2);
  diag(0, 0) = Complex(0, 1);
  diag(1, 1) = Complex(0, 2);
  REQUIRE_THAT(in_upper_half_plane(diag).certified_margin, WithinAbs(1.0, 1e-12));

  REQUIRE_THROWS_AS(certify_half_plane(herm), LinalgError);
}

TEST_CASE("half-plane is stable under conjugation by invertible elements", "[linalg]") {
  GaussianStream rng(12);
  for (int trial = 0; trial < 25; ++trial) {
    CMatrix h = random_complex(rng, 3);
    CMatrix b = 0.5 * (h + h.adjoint()) + Complex(0, 1) * (0.2 + rng.uniform()) *
                                               CMatrix::Identity(3, 3);
    REQUIRE(in_upper_half_plane(b).inside);
    CMatrix c = random_complex(rng, 3) + 3.0 * CMatrix::Identity(3, 3);
    REQUIRE(in_upper_half_plane(c * b * c.adjoint()).inside);
  }
}

TEST_CASE("invert on closed forms and residuals", "[linalg]") {
  REQUIRE(max_abs(invert(CMatrix::Identity(3, 3)) - CMatrix::Identity(3, 3)) < 1e-15);

  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = Complex(0, 4);
  CMatrix expected = CMatrix::Zero(2, 2);
  expected(0, 0) = 0.5;
  expected(1, 1) = Complex(0, -0.25);
  REQUIRE(max_abs(invert(d) - expected) < 1e-15);

  GaussianStream rng(13);
  CMatrix a = random_complex(rng, 5) + 4.0 * CMatrix::Identity(5, 5);
  REQUIRE(op_norm(a * invert(a) - CMatrix::Identity(5, 5)) < 1e-12);
}

TEST_CASE("invert of invert returns the input", "[linalg]") {
  GaussianStream rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    CMatrix a = random_complex(rng, 4) + 3.0 * CMatrix::Identity(4, 4);
    auto rep = invert_with_condition(a);
    REQUIRE(rep.cond_estimate < 1e6);
    REQUIRE(max_abs(invert(rep.inverse) - a) < 1e-10 * std::max(1.0, max_abs(a)));
  }
}

TEST_CASE("singular matrices are flagged, not silently inverted", "[linalg]") {
  CMatrix s(2, 2);
  s << 1.0, 2.0, 2.0, 4.0;
  REQUIRE_THROWS_AS(invert(s), SingularMatrixError);
}

TEST_CASE("min_eig_herm on reference matrices", "[linalg]") {
  REQUIRE_THAT(min_eig_herm(CMatrix::Identity(3, 3)), WithinAbs(1.0, 1e-14));

  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = -1.0;
  d(1, 1) = 3.0;
  REQUIRE_THAT(min_eig_herm(d), WithinAbs(-1.0, 1e-14));

  CMatrix m(2, 2);
  m << 2.0, 1.0, 1.0, 2.0;  // eigenvalues 1 and 3
  REQUIRE_THAT(min_eig_herm(m), WithinAbs(1.0, 1e-13));

  CMatrix bad(2, 2);
  bad << 0.0, 1.0, 0.0, 0.0;
  REQUIRE_THROWS_AS(min_eig_herm(bad), LinalgError);
}

TEST_CASE("kron and matmul agree with dense fallbacks", "[linalg]") {
  GaussianStream rng(15);
  CMatrix a = random_complex(rng, 3), b = random_complex(rng, 2);
  CMatrix k = kron(a, b);
  REQUIRE(k.rows() == 6);
  REQUIRE_THAT(std::abs(k(4, 1) - a(2, 0) * b(0, 1)), WithinAbs(0.0, 1e-15));
  CMatrix c = random_complex(rng, 3);
  REQUIRE(max_abs(matmul(a, c) - a * c) < 1e-13);
}
