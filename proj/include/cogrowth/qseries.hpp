#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cogrowth/error.hpp"

namespace cogrowth {

using Coefficients = std::vector<mpz_class>;

// Laurent polynomial in q with big-integer coefficients, stored densely over
// [min_exp, max_exp]. Both end coefficients are nonzero; the zero polynomial
// has no storage.
class LaurentPoly {
 public:
  LaurentPoly() = default;
  LaurentPoly(std::initializer_list<std::pair<std::int64_t, long>> terms) {
    for (const auto& [k, c] : terms) add_to(k, mpz_class(c));
  }

  static LaurentPoly constant(const mpz_class& c) { return monomial(0, c); }
  static LaurentPoly monomial(std::int64_t k, const mpz_class& c) {
    LaurentPoly p;
    p.add_to(k, c);
    return p;
  }
  // q + q^{-1}
  static LaurentPoly q_plus_inverse() { return LaurentPoly{{-1, 1}, {1, 1}}; }

  bool is_zero() const noexcept { return c_.empty(); }
  std::int64_t min_exp() const noexcept { return offset_; }
  std::int64_t max_exp() const noexcept {
    return offset_ + static_cast<std::int64_t>(c_.size()) - 1;
  }
  std::size_t span_size() const noexcept { return c_.size(); }

  mpz_class coeff(std::int64_t k) const {
    if (is_zero() || k < min_exp() || k > max_exp()) return 0;
    return c_[static_cast<std::size_t>(k - offset_)];
  }
  // Direct access for dense loops; index 0 is min_exp().
  const std::vector<mpz_class>& dense() const noexcept { return c_; }

  // Nonzero terms in increasing exponent order.
  std::vector<std::pair<std::int64_t, const mpz_class*>> terms() const {
    std::vector<std::pair<std::int64_t, const mpz_class*>> out;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (sgn(c_[i]) != 0) out.emplace_back(offset_ + static_cast<std::int64_t>(i), &c_[i]);
    }
    return out;
  }
  std::size_t nonzero_count() const {
    return static_cast<std::size_t>(
        std::count_if(c_.begin(), c_.end(), [](const mpz_class& v) { return sgn(v) != 0; }));
  }

  void add_to(std::int64_t k, const mpz_class& v) {
    if (sgn(v) == 0) return;
    reserve_range(k, k);
    c_[static_cast<std::size_t>(k - offset_)] += v;
    normalize();
  }
  void set(std::int64_t k, const mpz_class& v) {
    if (sgn(v) == 0 && (is_zero() || k < min_exp() || k > max_exp())) return;
    reserve_range(k, k);
    c_[static_cast<std::size_t>(k - offset_)] = v;
    normalize();
  }

  // Grows storage to cover [lo, hi] without normalizing. Pair with mutable_at
  // and normalize() for bulk accumulation.
  void reserve_range(std::int64_t lo, std::int64_t hi) {
    if (c_.empty()) {
      offset_ = lo;
      c_.resize(static_cast<std::size_t>(hi - lo + 1));
      return;
    }
    if (lo < offset_) {
      c_.insert(c_.begin(), static_cast<std::size_t>(offset_ - lo), mpz_class());
      offset_ = lo;
    }
    if (hi > max_exp()) c_.resize(static_cast<std::size_t>(hi - offset_ + 1));
  }
  mpz_class& mutable_at(std::int64_t k) { return c_[static_cast<std::size_t>(k - offset_)]; }

  // Drops zero coefficients at both ends.
  void normalize() {
    std::size_t lo = 0;
    while (lo < c_.size() && sgn(c_[lo]) == 0) ++lo;
    if (lo == c_.size()) {
      c_.clear();
      offset_ = 0;
      return;
    }
    std::size_t hi = c_.size();
    while (sgn(c_[hi - 1]) == 0) --hi;
    c_.resize(hi);
    if (lo > 0) {
      c_.erase(c_.begin(), c_.begin() + static_cast<std::ptrdiff_t>(lo));
      offset_ += static_cast<std::int64_t>(lo);
    }
  }

  mpz_class sum() const {
    mpz_class s = 0;
    for (const auto& v : c_) s += v;
    return s;
  }

  LaurentPoly& operator+=(const LaurentPoly& o) {
    if (o.is_zero()) return *this;
    reserve_range(o.min_exp(), o.max_exp());
    for (std::size_t i = 0; i < o.c_.size(); ++i) mutable_at(o.offset_ + static_cast<std::int64_t>(i)) += o.c_[i];
    normalize();
    return *this;
  }
  LaurentPoly& operator-=(const LaurentPoly& o) {
    if (o.is_zero()) return *this;
    reserve_range(o.min_exp(), o.max_exp());
    for (std::size_t i = 0; i < o.c_.size(); ++i) mutable_at(o.offset_ + static_cast<std::int64_t>(i)) -= o.c_[i];
    normalize();
    return *this;
  }
  LaurentPoly& operator*=(const mpz_class& s) {
    if (sgn(s) == 0) {
      c_.clear();
      offset_ = 0;
      return *this;
    }
    for (auto& v : c_) v *= s;
    return *this;
  }
  // Multiplies by q^k.
  LaurentPoly shifted(std::int64_t k) const {
    LaurentPoly p = *this;
    if (!p.is_zero()) p.offset_ += k;
    return p;
  }

  friend LaurentPoly operator+(LaurentPoly a, const LaurentPoly& b) { return a += b; }
  friend LaurentPoly operator-(LaurentPoly a, const LaurentPoly& b) { return a -= b; }
  friend bool operator==(const LaurentPoly& a, const LaurentPoly& b) {
    return a.offset_ == b.offset_ && a.c_ == b.c_;
  }

 private:
  std::int64_t offset_ = 0;
  std::vector<mpz_class> c_;
};

// acc += sign * a * b, skipping zero coefficients of either factor.
inline void laurent_mul_accumulate(LaurentPoly& acc, const LaurentPoly& a, const LaurentPoly& b,
                                   int sign = 1) {
  if (a.is_zero() || b.is_zero()) return;
  const auto ta = a.terms();
  const auto tb = b.terms();
  acc.reserve_range(a.min_exp() + b.min_exp(), a.max_exp() + b.max_exp());
  for (const auto& [ea, ca] : ta) {
    for (const auto& [eb, cb] : tb) {
      mpz_class& dst = acc.mutable_at(ea + eb);
      if (sign > 0) {
        mpz_addmul(dst.get_mpz_t(), ca->get_mpz_t(), cb->get_mpz_t());
      } else {
        mpz_submul(dst.get_mpz_t(), ca->get_mpz_t(), cb->get_mpz_t());
      }
    }
  }
  acc.normalize();
}

inline LaurentPoly laurent_mul(const LaurentPoly& p, const LaurentPoly& r) {
  LaurentPoly out;
  laurent_mul_accumulate(out, p, r);
  return out;
}

inline LaurentPoly operator*(const LaurentPoly& a, const LaurentPoly& b) { return laurent_mul(a, b); }

// Phi_{d,e}: keeps exponents divisible by d and rescales k -> (k/d) e.
inline LaurentPoly phi_map(const LaurentPoly& p, std::int64_t d, std::int64_t e) {
  if (d < 1 || e < 1) throw validation_error("phi_map needs d, e >= 1");
  if (d == 1 && e == 1) return p;
  LaurentPoly out;
  if (p.is_zero()) return out;
  auto floor_div = [](std::int64_t a, std::int64_t b) {
    return a / b - ((a % b != 0) && ((a < 0) != (b < 0)) ? 1 : 0);
  };
  auto ceil_div = [&](std::int64_t a, std::int64_t b) { return -floor_div(-a, b); };
  const std::int64_t lo = ceil_div(p.min_exp(), d);
  const std::int64_t hi = floor_div(p.max_exp(), d);
  if (lo > hi) return out;
  out.reserve_range(lo * e, hi * e);
  for (std::int64_t j = lo; j <= hi; ++j) {
    const mpz_class& v = p.dense()[static_cast<std::size_t>(j * d - p.min_exp())];
    if (sgn(v) != 0) out.mutable_at(j * e) = v;
  }
  out.normalize();
  return out;
}

// Truncated power series in z whose coefficients are Laurent polynomials in q.
class QSeries {
 public:
  explicit QSeries(std::size_t n_max = 0) : c_(n_max + 1) {}

  static QSeries one(std::size_t n_max) {
    QSeries s(n_max);
    s.c_[0] = LaurentPoly::constant(1);
    return s;
  }

  std::size_t order() const noexcept { return c_.size() - 1; }
  const LaurentPoly& operator[](std::size_t n) const { return c_[n]; }
  LaurentPoly& operator[](std::size_t n) { return c_[n]; }

  QSeries truncated(std::size_t n_max) const {
    QSeries s(n_max);
    for (std::size_t i = 0; i <= std::min(n_max, order()); ++i) s.c_[i] = c_[i];
    return s;
  }

  friend bool operator==(const QSeries&, const QSeries&) = default;

 private:
  std::vector<LaurentPoly> c_;
};

inline void require_same_order(const QSeries& a, const QSeries& b) {
  if (a.order() != b.order()) throw validation_error("QSeries truncation orders differ");
}

inline QSeries qseries_add(const QSeries& a, const QSeries& b) {
  require_same_order(a, b);
  QSeries out = a;
  for (std::size_t n = 0; n <= a.order(); ++n) out[n] += b[n];
  return out;
}

inline QSeries qseries_sub(const QSeries& a, const QSeries& b) {
  require_same_order(a, b);
  QSeries out = a;
  for (std::size_t n = 0; n <= a.order(); ++n) out[n] -= b[n];
  return out;
}

inline QSeries qseries_mul(const QSeries& a, const QSeries& b) {
  require_same_order(a, b);
  QSeries out(a.order());
  for (std::size_t i = 0; i <= a.order(); ++i) {
    if (a[i].is_zero()) continue;
    for (std::size_t j = 0; i + j <= a.order(); ++j) laurent_mul_accumulate(out[i + j], a[i], b[j]);
  }
  return out;
}

// z^j * p(q) * A, truncated at A's order.
inline QSeries qseries_scale_z(const QSeries& a, std::size_t j, const LaurentPoly& p) {
  QSeries out(a.order());
  for (std::size_t n = 0; n + j <= a.order(); ++n) out[n + j] = laurent_mul(a[n], p);
  return out;
}

inline QSeries qseries_phi(const QSeries& a, std::int64_t d, std::int64_t e) {
  QSeries out(a.order());
  for (std::size_t n = 0; n <= a.order(); ++n) out[n] = phi_map(a[n], d, e);
  return out;
}

inline Coefficients constant_term(const QSeries& s) {
  Coefficients out(s.order() + 1);
  for (std::size_t n = 0; n <= s.order(); ++n) out[n] = s[n].coeff(0);
  return out;
}

// Truncated power series with exact rational coefficients, terms 0..order.
class RatSeries {
 public:
  explicit RatSeries(std::size_t n_max = 0) : c_(n_max + 1) {}
  RatSeries(std::size_t n_max, std::initializer_list<long> poly) : c_(n_max + 1) {
    std::size_t i = 0;
    for (long v : poly) {
      if (i <= n_max) c_[i] = v;
      ++i;
    }
  }
  static RatSeries from_integers(const Coefficients& c, std::size_t n_max) {
    RatSeries s(n_max);
    for (std::size_t i = 0; i <= n_max && i < c.size(); ++i) s.c_[i] = c[i];
    return s;
  }

  std::size_t order() const noexcept { return c_.size() - 1; }
  const mpq_class& operator[](std::size_t n) const { return c_[n]; }
  mpq_class& operator[](std::size_t n) { return c_[n]; }

  std::size_t valuation() const {
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (sgn(c_[i]) != 0) return i;
    }
    return c_.size();
  }

  RatSeries truncated(std::size_t n_max) const {
    RatSeries s(n_max);
    for (std::size_t i = 0; i <= std::min(n_max, order()); ++i) s.c_[i] = c_[i];
    return s;
  }

  // Integer coefficients, or throws if any coefficient is fractional.
  Coefficients to_integers() const {
    Coefficients out(c_.size());
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (c_[i].get_den() != 1) {
        throw validation_error("non-integer coefficient at index " + std::to_string(i));
      }
      out[i] = c_[i].get_num();
    }
    return out;
  }

  friend bool operator==(const RatSeries&, const RatSeries&) = default;

 private:
  std::vector<mpq_class> c_;
};

inline RatSeries rat_add(const RatSeries& a, const RatSeries& b) {
  const std::size_t n = std::min(a.order(), b.order());
  RatSeries out(n);
  for (std::size_t i = 0; i <= n; ++i) out[i] = a[i] + b[i];
  return out;
}

inline RatSeries rat_sub(const RatSeries& a, const RatSeries& b) {
  const std::size_t n = std::min(a.order(), b.order());
  RatSeries out(n);
  for (std::size_t i = 0; i <= n; ++i) out[i] = a[i] - b[i];
  return out;
}

inline RatSeries rat_scale(const RatSeries& a, const mpq_class& s) {
  RatSeries out = a;
  for (std::size_t i = 0; i <= a.order(); ++i) out[i] *= s;
  return out;
}

inline RatSeries rat_mul(const RatSeries& a, const RatSeries& b) {
  const std::size_t n = std::min(a.order(), b.order());
  RatSeries out(n);
  for (std::size_t i = 0; i <= n; ++i) {
    if (sgn(a[i]) == 0) continue;
    for (std::size_t j = 0; i + j <= n; ++j) {
      if (sgn(b[j]) != 0) out[i + j] += a[i] * b[j];
    }
  }
  return out;
}

// A / B. A leading z^v factor of B must also divide A; the quotient then has
// order min(order) - v.
inline RatSeries rat_div(const RatSeries& a, const RatSeries& b) {
  const std::size_t v = b.valuation();
  if (v > b.order()) throw validation_error("rat_div: division by the zero series");
  if (a.valuation() < v) throw validation_error("rat_div: numerator valuation too small");
  const std::size_t n = std::min(a.order(), b.order()) - v;
  RatSeries out(n);
  const mpq_class b0 = b[v];
  for (std::size_t i = 0; i <= n; ++i) {
    mpq_class acc = a[i + v];
    for (std::size_t j = 1; j <= i; ++j) {
      if (sgn(b[j + v]) != 0 && sgn(out[i - j]) != 0) acc -= b[j + v] * out[i - j];
    }
    out[i] = acc / b0;
  }
  return out;
}

inline mpq_class rational_sqrt(const mpq_class& x) {
  if (sgn(x) <= 0) throw validation_error("rat_sqrt: constant term must be positive");
  if (mpz_perfect_square_p(x.get_num_mpz_t()) == 0 || mpz_perfect_square_p(x.get_den_mpz_t()) == 0) {
    throw validation_error("rat_sqrt: constant term is not a rational square");
  }
  mpz_class n;
  mpz_class d;
  mpz_sqrt(n.get_mpz_t(), x.get_num_mpz_t());
  mpz_sqrt(d.get_mpz_t(), x.get_den_mpz_t());
  mpq_class r(n, d);
  r.canonicalize();
  return r;
}

// Square root with positive constant term, by Newton iteration y <- (y + A/y)/2
// with the working precision doubled each round.
inline RatSeries rat_sqrt(const RatSeries& a) {
  if (sgn(a[0]) == 0) throw validation_error("rat_sqrt: zero constant term");
  RatSeries y(0);
  y[0] = rational_sqrt(a[0]);
  std::size_t prec = 0;
  const mpq_class half(1, 2);
  while (prec < a.order()) {
    prec = std::min(a.order(), 2 * prec + 1);
    const RatSeries yp = y.truncated(prec);
    const RatSeries q = rat_div(a.truncated(prec), yp);
    y = rat_scale(rat_add(yp, q), half);
  }
  return y.truncated(a.order());
}

// h(t) = f(t / (1 + (2k-1) t^2)) * (1 - t^2) / (1 + (2k-1) t^2): turns the
// all-words trivial series of a k-generator group into the reduced-words series.
// Expanding (1 + c t^2)^{-(j+1)} = sum_m binom(j+m, m) (-c)^m t^{2m} keeps this O(n^2).
inline RatSeries substitute_reduced(const RatSeries& f, std::size_t k) {
  if (k < 1) throw validation_error("substitute_reduced needs k >= 1");
  const std::size_t n = f.order();
  const mpz_class minus_c = -(2 * static_cast<long>(k) - 1);
  RatSeries g(n);
  for (std::size_t j = 0; j <= n; ++j) {
    if (sgn(f[j]) == 0) continue;
    mpz_class term = 1;  // binom(j+m, m) (-c)^m
    for (std::size_t m = 0; j + 2 * m <= n; ++m) {
      if (m > 0) {
        term *= minus_c * static_cast<unsigned long>(j + m);
        mpz_divexact_ui(term.get_mpz_t(), term.get_mpz_t(), static_cast<unsigned long>(m));
      }
      g[j + 2 * m] += f[j] * term;
    }
  }
  RatSeries h(n);
  for (std::size_t i = 0; i <= n; ++i) h[i] = i >= 2 ? g[i] - g[i - 2] : g[i];
  return h;
}

// Serialization: "n<TAB>value" or "n<TAB>k<TAB>value"; lines starting with '#'
// are headers.
inline void write_coefficients(std::ostream& os, const Coefficients& c,
                               const std::string& header = {}) {
  if (!header.empty()) os << "# " << header << '\n';
  for (std::size_t n = 0; n < c.size(); ++n) os << n << '\t' << c[n].get_str() << '\n';
}

inline void write_laurent_rows(std::ostream& os, const QSeries& s, const std::string& header = {}) {
  if (!header.empty()) os << "# " << header << '\n';
  for (std::size_t n = 0; n <= s.order(); ++n) {
    for (const auto& [k, v] : s[n].terms()) os << n << '\t' << k << '\t' << v->get_str() << '\n';
  }
}

struct CoefficientFile {
  std::vector<std::string> headers;  // without the leading "# "
  Coefficients coefficients;
};

inline CoefficientFile read_coefficients(std::istream& is) {
  CoefficientFile out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      out.headers.push_back(line.size() > 2 && line[1] == ' ' ? line.substr(2) : line.substr(1));
      continue;
    }
    std::istringstream ls(line);
    std::size_t n = 0;
    std::string value;
    if (!(ls >> n >> value)) throw validation_error("malformed coefficient line " + std::to_string(lineno));
    if (n != out.coefficients.size()) {
      throw validation_error("coefficient indices must be consecutive from 0 (line " +
                             std::to_string(lineno) + ")");
    }
    mpz_class v;
    if (v.set_str(value, 10) != 0) throw validation_error("bad integer on line " + std::to_string(lineno));
    out.coefficients.push_back(v);
  }
  return out;
}

inline QSeries read_laurent_rows(std::istream& is, std::size_t n_max) {
  QSeries s(n_max);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::size_t n = 0;
    std::int64_t k = 0;
    std::string value;
    if (!(ls >> n >> k >> value)) throw validation_error("malformed Laurent row line");
    if (n > n_max) continue;
    mpz_class v;
    if (v.set_str(value, 10) != 0) throw validation_error("bad integer in Laurent row");
    s[n].add_to(k, v);
  }
  return s;
}

}  // namespace cogrowth
