#pragma once

// Polynomials in non-commuting variables x1..xn with complex coefficients:
// parsing, canonical form, adjoint, printing, and evaluation on matrices.

#include "freespec/linalg.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace freespec {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, const std::string& message)
      : std::runtime_error("parse error at position " + std::to_string(position) + ": " +
                           message),
        position(position),
        message(message) {}
  std::size_t position;
  std::string message;
};

/// One term: coeff * x_{word[0]} * x_{word[1]} * ... Indices are 1-based.
/// An empty word is the constant term.
struct Monomial {
  Complex coeff;
  std::vector<int> word;
};

namespace detail {

// graded lexicographic: degree first, then index sequence
inline bool word_less(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace detail

class NCPolynomial {
 public:
  NCPolynomial() : n_vars_(0) {}

  NCPolynomial(int n_vars, std::vector<Monomial> terms) : n_vars_(n_vars) {
    if (n_vars < 0) throw std::invalid_argument("NCPolynomial: negative variable count");
    for (const Monomial& m : terms)
      for (int j : m.word)
        if (j < 1 || j > n_vars)
          throw std::invalid_argument("NCPolynomial: variable index out of range");
    std::sort(terms.begin(), terms.end(), [](const Monomial& a, const Monomial& b) {
      return detail::word_less(a.word, b.word);
    });
    for (const Monomial& m : terms) {
      if (!terms_.empty() && terms_.back().word == m.word)
        terms_.back().coeff += m.coeff;
      else
        terms_.push_back(m);
    }
    std::erase_if(terms_, [](const Monomial& m) { return m.coeff == Complex(0.0, 0.0); });
  }

  static NCPolynomial zero(int n_vars) { return NCPolynomial(n_vars, {}); }
  static NCPolynomial constant(int n_vars, Complex c) {
    return NCPolynomial(n_vars, {{c, {}}});
  }
  static NCPolynomial variable(int n_vars, int j) {
    return NCPolynomial(n_vars, {{Complex(1.0, 0.0), {j}}});
  }

  int n_vars() const { return n_vars_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const Monomial& m : terms_) d = std::max<int>(d, static_cast<int>(m.word.size()));
    return d;
  }

  bool operator==(const NCPolynomial& rhs) const {
    if (n_vars_ != rhs.n_vars_ || terms_.size() != rhs.terms_.size()) return false;
    for (std::size_t i = 0; i < terms_.size(); ++i)
      if (terms_[i].word != rhs.terms_[i].word || terms_[i].coeff != rhs.terms_[i].coeff)
        return false;
    return true;
  }

  NCPolynomial operator+(const NCPolynomial& rhs) const {
    check_vars(rhs);
    std::vector<Monomial> all = terms_;
    all.insert(all.end(), rhs.terms_.begin(), rhs.terms_.end());
    return NCPolynomial(n_vars_, std::move(all));
  }

  NCPolynomial operator-(const NCPolynomial& rhs) const { return *this + (rhs * Complex(-1.0)); }

  NCPolynomial operator*(Complex c) const {
    std::vector<Monomial> out = terms_;
    for (Monomial& m : out) m.coeff *= c;
    return NCPolynomial(n_vars_, std::move(out));
  }

  /// Non-commutative product: words concatenate in left-to-right order.
  NCPolynomial operator*(const NCPolynomial& rhs) const {
    check_vars(rhs);
    std::vector<Monomial> out;
    out.reserve(terms_.size() * rhs.terms_.size());
    for (const Monomial& a : terms_)
      for (const Monomial& b : rhs.terms_) {
        Monomial m{a.coeff * b.coeff, a.word};
        m.word.insert(m.word.end(), b.word.begin(), b.word.end());
        out.push_back(std::move(m));
      }
    return NCPolynomial(n_vars_, std::move(out));
  }

  NCPolynomial pow(int k) const {
    if (k < 1) throw std::invalid_argument("pow: exponent must be >= 1");
    NCPolynomial acc = *this;
    for (int i = 1; i < k; ++i) acc = acc * (*this);
    return acc;
  }

 private:
  void check_vars(const NCPolynomial& rhs) const {
    if (n_vars_ != rhs.n_vars_)
      throw std::invalid_argument("NCPolynomial: mixed variable counts");
  }

  int n_vars_;
  std::vector<Monomial> terms_;  // canonical order, nonzero coefficients, unique words
};

inline NCPolynomial operator*(Complex c, const NCPolynomial& p) { return p * c; }

/// Star structure: words reverse, coefficients conjugate.
inline NCPolynomial adjoint(const NCPolynomial& p) {
  std::vector<Monomial> out = p.terms();
  for (Monomial& m : out) {
    m.coeff = std::conj(m.coeff);
    std::reverse(m.word.begin(), m.word.end());
  }
  return NCPolynomial(p.n_vars(), std::move(out));
}

inline bool is_selfadjoint(const NCPolynomial& p, double tol = 1e-12) {
  NCPolynomial q = adjoint(p);
  if (q.terms().size() != p.terms().size()) return false;
  for (std::size_t i = 0; i < p.terms().size(); ++i) {
    const Monomial &a = p.terms()[i], &b = q.terms()[i];
    if (a.word != b.word) return false;
    if (std::abs(a.coeff - b.coeff) > tol * std::max(1.0, std::abs(a.coeff))) return false;
  }
  return true;
}

/// Substitutes mats[j-1] for x_j; products taken in word order.
inline CMatrix evaluate(const NCPolynomial& p, const std::vector<CMatrix>& mats) {
  if (static_cast<int>(mats.size()) != p.n_vars())
    throw std::invalid_argument("evaluate: expected one matrix per variable");
  Eigen::Index d = mats.empty() ? 1 : mats[0].rows();
  for (const CMatrix& m : mats)
    if (m.rows() != d || m.cols() != d)
      throw std::invalid_argument("evaluate: matrices must be square and of equal size");
  CMatrix acc = CMatrix::Zero(d, d);
  for (const Monomial& m : p.terms()) {
    if (m.word.empty()) {
      acc += m.coeff * CMatrix::Identity(d, d);
      continue;
    }
    CMatrix prod = mats[m.word[0] - 1];
    for (std::size_t i = 1; i < m.word.size(); ++i) prod = matmul(prod, mats[m.word[i] - 1]);
    acc += m.coeff * prod;
  }
  return acc;
}

namespace detail {

struct PolyLexer {
  const std::string& text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= text.size();
  }
  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }
};

class PolyParser {
 public:
  PolyParser(const std::string& text, int n_vars) : lex_{text}, n_vars_(n_vars) {}

  NCPolynomial parse() {
    NCPolynomial p = expr();
    if (!lex_.eof())
      throw ParseError(lex_.pos, "unexpected input (missing operator? juxtaposition is not "
                                 "multiplication, use '*')");
    return p;
  }

 private:
  NCPolynomial expr() {
    NCPolynomial acc = term();
    while (!lex_.eof()) {
      char c = lex_.peek();
      if (c == '+') {
        ++lex_.pos;
        acc = acc + term();
      } else if (c == '-') {
        ++lex_.pos;
        acc = acc - term();
      } else {
        break;
      }
    }
    return acc;
  }

  NCPolynomial term() {
    NCPolynomial acc = factor();
    while (!lex_.eof() && lex_.peek() == '*') {
      ++lex_.pos;
      acc = acc * factor();
    }
    return acc;
  }

  NCPolynomial factor() {
    if (lex_.peek() == '-') {
      ++lex_.pos;
      return factor() * Complex(-1.0);
    }
    NCPolynomial base = atom();
    if (!lex_.eof() && lex_.peek() == '^') {
      std::size_t at = lex_.pos;
      ++lex_.pos;
      long k = integer(at);
      if (k < 1) throw ParseError(at, "power must be >= 1");
      base = base.pow(static_cast<int>(k));
    }
    return base;
  }

  NCPolynomial atom() {
    if (lex_.eof()) throw ParseError(lex_.pos, "unexpected end of input");
    char c = lex_.peek();
    std::size_t at = lex_.pos;
    if (c == '(') {
      ++lex_.pos;
      NCPolynomial p = expr();
      if (lex_.eof() || lex_.peek() != ')') throw ParseError(lex_.pos, "expected ')'");
      ++lex_.pos;
      return p;
    }
    if (c == 'x') {
      ++lex_.pos;
      long j = integer(at);
      if (j < 1 || j > n_vars_)
        throw ParseError(at, "variable index out of range (have x1..x" +
                                 std::to_string(n_vars_) + ")");
      return NCPolynomial::variable(n_vars_, static_cast<int>(j));
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number(at);
    throw ParseError(at, std::string("unexpected character '") + c + "'");
  }

  long integer(std::size_t at) {
    lex_.skip_ws();
    // a sign here would belong to an exponent or power; not allowed
    std::size_t start = lex_.pos;
    bool neg = false;
    if (lex_.pos < lex_.text.size() && lex_.text[lex_.pos] == '-') {
      neg = true;
      ++lex_.pos;
    }
    std::size_t digits = lex_.pos;
    while (lex_.pos < lex_.text.size() && std::isdigit(static_cast<unsigned char>(lex_.text[lex_.pos])))
      ++lex_.pos;
    if (lex_.pos == digits) throw ParseError(at, "expected an integer");
    long v = std::stol(lex_.text.substr(start, lex_.pos - start));
    (void)neg;
    return v;
  }

  NCPolynomial number(std::size_t at) {
    std::size_t start = lex_.pos;
    bool seen_digit = false;
    while (lex_.pos < lex_.text.size()) {
      char c = lex_.text[lex_.pos];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        seen_digit = true;
        ++lex_.pos;
      } else if (c == '.') {
        ++lex_.pos;
      } else if ((c == 'e' || c == 'E') && lex_.pos + 1 < lex_.text.size()) {
        char n = lex_.text[lex_.pos + 1];
        if (std::isdigit(static_cast<unsigned char>(n)) || n == '+' || n == '-') {
          lex_.pos += 2;
          while (lex_.pos < lex_.text.size() &&
                 std::isdigit(static_cast<unsigned char>(lex_.text[lex_.pos])))
            ++lex_.pos;
        }
        break;
      } else {
        break;
      }
    }
    if (!seen_digit) throw ParseError(at, "malformed number");
    double v = 0.0;
    try {
      v = std::stod(lex_.text.substr(start, lex_.pos - start));
    } catch (const std::exception&) {
      throw ParseError(at, "malformed number");
    }
    bool imaginary = false;
    if (lex_.pos < lex_.text.size() && lex_.text[lex_.pos] == 'i') {
      imaginary = true;
      ++lex_.pos;
    }
    return NCPolynomial::constant(n_vars_, imaginary ? Complex(0.0, v) : Complex(v, 0.0));
  }

  PolyLexer lex_;
  int n_vars_;
};

inline std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string format_coeff(Complex c) {
  if (c.imag() == 0.0) return format_real(c.real());
  if (c.real() == 0.0) return format_real(c.imag()) + "i";
  std::string im = c.imag() < 0.0 ? " - " + format_real(-c.imag()) : " + " + format_real(c.imag());
  return "(" + format_real(c.real()) + im + "i)";
}

inline std::string format_word(const std::vector<int>& word) {
  std::string out;
  std::size_t i = 0;
  while (i < word.size()) {
    std::size_t run = 1;
    while (i + run < word.size() && word[i + run] == word[i]) ++run;
    if (!out.empty()) out += "*";
    out += "x" + std::to_string(word[i]);
    if (run > 1) out += "^" + std::to_string(run);
    i += run;
  }
  return out;
}

}  // namespace detail

/// Parses the polynomial grammar: variables x1..xn, operators + - *, integer
/// powers ^k (k >= 1), parentheses, numeric literals with an optional trailing
/// 'i'. Multiplication must be explicit; juxtaposition is an error.
inline NCPolynomial parse_polynomial(const std::string& text, int n_vars) {
  return detail::PolyParser(text, n_vars).parse();
}

/// Canonical printer; output parses back to the identical polynomial.
inline std::string to_string(const NCPolynomial& p) {
  if (p.is_zero()) return "0";
  std::string out;
  for (const Monomial& m : p.terms()) {
    std::string term;
    if (m.word.empty()) {
      term = detail::format_coeff(m.coeff);
    } else if (m.coeff == Complex(1.0, 0.0)) {
      term = detail::format_word(m.word);
    } else if (m.coeff == Complex(-1.0, 0.0)) {
      term = "-" + detail::format_word(m.word);
    } else {
      term = detail::format_coeff(m.coeff) + "*" + detail::format_word(m.word);
    }
    if (!out.empty()) out += " + ";
    out += term;
  }
  return out;
}

}  // namespace freespec
