#include "freespec/ncpoly.hpp"
#include "freespec/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace freespec;

namespace {

CMatrix random_hermitian(GaussianStream& rng, Eigen::Index n) { return rng.gue(n); }

NCPolynomial random_poly(GaussianStream& rng, int n_vars, int max_degree, int n_terms) {
  std::vector<Monomial> terms;
  for (int t = 0; t < n_terms; ++t) {
    int deg = 1 + static_cast<int>(rng.uniform() * max_degree);
    std::vector<int> word;
    for (int i = 0; i < deg; ++i)
      word.push_back(1 + static_cast<int>(rng.uniform() * n_vars));
    terms.push_back({Complex(std::round(4.0 * rng.normal()) / 2.0,
                             std::round(4.0 * rng.normal()) / 2.0),
                     word});
  }
  return NCPolynomial(n_vars, terms);
}

// independent of evaluate(): per-word running product, no shared helpers
CMatrix naive_evaluate(const NCPolynomial& p, const std::vector<CMatrix>& mats) {
  Eigen::Index d = mats[0].rows();
  CMatrix acc = CMatrix::Zero(d, d);
  for (const Monomial& m : p.terms()) {
    CMatrix prod = CMatrix::Identity(d, d);
    for (int j : m.word) prod = prod * mats[static_cast<std::size_t>(j - 1)];
    acc += m.coeff * prod;
  }
  return acc;
}

}  // namespace

TEST_CASE("parse collects and orders terms canonically", "[ncpoly]") {
  NCPolynomial p = parse_polynomial("x1*x2 + x2*x1", 2);
  REQUIRE(p.terms().size() == 2);
  REQUIRE(p.terms()[0].word == std::vector<int>{1, 2});
  REQUIRE(p.terms()[0].coeff == Complex(1.0));
  REQUIRE(p.terms()[1].word == std::vector<int>{2, 1});

  NCPolynomial sq = parse_polynomial("(x1+x2)^2", 2);
  REQUIRE(sq.terms().size() == 4);
  REQUIRE(sq.terms()[0].word == std::vector<int>{1, 1});
  REQUIRE(sq.terms()[1].word == std::vector<int>{1, 2});
  REQUIRE(sq.terms()[2].word == std::vector<int>{2, 1});
  REQUIRE(sq.terms()[3].word == std::vector<int>{2, 2});

  NCPolynomial deg3 = parse_polynomial("x1*x2*x1 + x2*x3*x2 + x3*x1*x3", 3);
  REQUIRE(deg3.terms().size() == 3);
  for (const Monomial& m : deg3.terms()) REQUIRE(m.word.size() == 3);
  REQUIRE(deg3.degree() == 3);
}

TEST_CASE("two spellings of one polynomial parse identically", "[ncpoly]") {
  REQUIRE(parse_polynomial("(x1+x2)^2", 2) ==
          parse_polynomial("x1^2 + x1*x2 + x2*x1 + x2^2", 2));
  REQUIRE(parse_polynomial("2*x1 - x1", 3) == parse_polynomial("x1", 3));
  REQUIRE(parse_polynomial("x1*(x2+1)", 2) == parse_polynomial("x1*x2 + x1", 2));
  // expansion preserves letter order left to right
  REQUIRE(parse_polynomial("(x1+x2)*(x1-x2)", 2) ==
          parse_polynomial("x1^2 - x1*x2 + x2*x1 - x2^2", 2));
}

TEST_CASE("complex literals and unary minus", "[ncpoly]") {
  NCPolynomial p = parse_polynomial("(2+3i)*x1 - 1i", 1);
  REQUIRE(p.terms().size() == 2);
  REQUIRE(p.terms()[0].coeff == Complex(0.0, -1.0));
  REQUIRE(p.terms()[1].coeff == Complex(2.0, 3.0));
}

TEST_CASE("parse errors carry positions", "[ncpoly]") {
  REQUIRE_THROWS_AS(parse_polynomial("x1 x2", 2), ParseError);
  try {
    parse_polynomial("x1 x2", 2);
  } catch (const ParseError& e) {
    REQUIRE(e.position == 3);
  }
  REQUIRE_THROWS_AS(parse_polynomial("x3 + x1", 2), ParseError);
  REQUIRE_THROWS_AS(parse_polynomial("x1^0", 2), ParseError);
  REQUIRE_THROWS_AS(parse_polynomial("x1^-2", 2), ParseError);
  REQUIRE_THROWS_AS(parse_polynomial("x1*(x2", 2), ParseError);
  REQUIRE_THROWS_AS(parse_polynomial("", 2), ParseError);
  REQUIRE_THROWS_AS(parse_polynomial("x0", 2), ParseError);
}

TEST_CASE("adjoint reverses words and conjugates coefficients", "[ncpoly]") {
  NCPolynomial p(2, {{Complex(1.0), {1, 2}}});
  NCPolynomial q = adjoint(p);
  REQUIRE(q.terms().size() == 1);
  REQUIRE(q.terms()[0].word == std::vector<int>{2, 1});

  NCPolynomial c(1, {{Complex(2.0, 1.0), {1}}});
  REQUIRE(adjoint(c).terms()[0].coeff == Complex(2.0, -1.0));

  NCPolynomial anti = parse_polynomial("x1*x2 + x2*x1", 2);
  REQUIRE(adjoint(anti) == anti);
  REQUIRE(is_selfadjoint(anti));
  REQUIRE_FALSE(is_selfadjoint(parse_polynomial("x1*x2", 2)));
}

TEST_CASE("adjoint is an involution", "[ncpoly]") {
  GaussianStream rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    NCPolynomial p = random_poly(rng, 3, 4, 5);
    REQUIRE(adjoint(adjoint(p)) == p);
  }
}

TEST_CASE("evaluate on hand-checked inputs", "[ncpoly]") {
  CMatrix a(2, 2), b(2, 2);
  a << 1, 0, 0, 0;
  b << 0, 1, 1, 0;

  NCPolynomial x1 = parse_polynomial("x1", 2);
  REQUIRE(max_abs(evaluate(x1, {a, b}) - a) < 1e-15);

  NCPolynomial anti = parse_polynomial("x1*x2 + x2*x1", 2);
  CMatrix expected(2, 2);
  expected << 0, 1, 1, 0;  // AB + BA
  REQUIRE(max_abs(evaluate(anti, {a, b}) - expected) < 1e-15);
}

TEST_CASE("evaluate matches the naive per-word oracle", "[ncpoly]") {
  GaussianStream rng(22);
  for (int trial = 0; trial < 15; ++trial) {
    NCPolynomial p = random_poly(rng, 3, 4, 6);
    std::vector<CMatrix> mats = {random_hermitian(rng, 4), random_hermitian(rng, 4),
                                 random_hermitian(rng, 4)};
    CMatrix lhs = evaluate(p, mats);
    CMatrix rhs = naive_evaluate(p, mats);
    REQUIRE(max_abs(lhs - rhs) <= 1e-12 * std::max(1.0, max_abs(rhs)));
  }
}

TEST_CASE("evaluate is a homomorphism on random inputs", "[ncpoly]") {
  GaussianStream rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    NCPolynomial p = random_poly(rng, 2, 3, 4);
    NCPolynomial q = random_poly(rng, 2, 3, 4);
    std::vector<CMatrix> mats = {random_hermitian(rng, 4), random_hermitian(rng, 4)};
    CMatrix sum = evaluate(p + q, mats);
    CMatrix prod = evaluate(p * q, mats);
    double scale_sum = std::max(1.0, max_abs(sum));
    double scale_prod = std::max(1.0, max_abs(prod));
    REQUIRE(max_abs(sum - (evaluate(p, mats) + evaluate(q, mats))) < 1e-12 * scale_sum);
    REQUIRE(max_abs(prod - evaluate(p, mats) * evaluate(q, mats)) < 1e-12 * scale_prod);
  }
}

TEST_CASE("self-adjoint polynomials evaluate to Hermitian matrices", "[ncpoly]") {
  GaussianStream rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    NCPolynomial q = random_poly(rng, 2, 3, 4);
    NCPolynomial p = q + adjoint(q);
    REQUIRE(is_selfadjoint(p));
    std::vector<CMatrix> mats = {random_hermitian(rng, 4), random_hermitian(rng, 4)};
    CMatrix v = evaluate(p, mats);
    REQUIRE(max_abs(v - v.adjoint()) < 1e-12 * std::max(1.0, max_abs(v)));
  }
}

TEST_CASE("print round-trips through parse", "[ncpoly]") {
  GaussianStream rng(25);
  for (int trial = 0; trial < 30; ++trial) {
    NCPolynomial p = random_poly(rng, 3, 4, 5);
    REQUIRE(parse_polynomial(to_string(p), 3) == p);
  }
  REQUIRE(parse_polynomial(to_string(NCPolynomial::zero(2)), 2) == NCPolynomial::zero(2));
  NCPolynomial edge(2, {{Complex(-1.0), {1, 1, 2}}, {Complex(0.0, -2.5), {}}});
  REQUIRE(parse_polynomial(to_string(edge), 2) == edge);
}

TEST_CASE("evaluate rejects dimension mismatches", "[ncpoly]") {
  NCPolynomial p = parse_polynomial("x1*x2", 2);
  CMatrix a = CMatrix::Identity(2, 2), b = CMatrix::Identity(3, 3);
  REQUIRE_THROWS_AS(evaluate(p, {a, b}), std::invalid_argument);
  REQUIRE_THROWS_AS(evaluate(p, {a}), std::invalid_argument);
}
