#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cogrowth/error.hpp"
#include "cogrowth/qseries.hpp"

namespace cogrowth {

struct BSSpec {
  std::int64_t N = 1;
  std::int64_t M = 1;
  std::size_t n_max = 0;
  std::optional<std::uint64_t> trim_threshold;

  void validate() const {
    if (N < 1 || M < 1) throw validation_error("BS(N,M) needs N, M >= 1");
    if (trim_threshold && *trim_threshold == 0) throw validation_error("trim threshold must be positive");
  }
};

struct BSSeries {
  QSeries L;
  QSeries K;
  QSeries G;
};

namespace detail {

using SparseRow = std::vector<std::pair<std::int64_t, const mpz_class*>>;

// acc += sign * sum_{i+j=n} a_i b_j over cached sparse rows.
inline void convolve_into(LaurentPoly& acc, const std::vector<LaurentPoly>& a,
                          const std::vector<SparseRow>& ta, const std::vector<LaurentPoly>& b,
                          const std::vector<SparseRow>& tb, std::size_t n, int sign) {
  std::int64_t lo = 0;
  std::int64_t hi = -1;
  bool any = false;
  for (std::size_t i = 0; i <= n; ++i) {
    const auto& x = a[i];
    const auto& y = b[n - i];
    if (x.is_zero() || y.is_zero()) continue;
    const std::int64_t l = x.min_exp() + y.min_exp();
    const std::int64_t h = x.max_exp() + y.max_exp();
    if (!any) {
      lo = l;
      hi = h;
      any = true;
    } else {
      lo = std::min(lo, l);
      hi = std::max(hi, h);
    }
  }
  if (!any) return;
  acc.reserve_range(lo, hi);
  for (std::size_t i = 0; i <= n; ++i) {
    for (const auto& [ea, ca] : ta[i]) {
      for (const auto& [eb, cb] : tb[n - i]) {
        mpz_class& dst = acc.mutable_at(ea + eb);
        if (sign > 0) {
          mpz_addmul(dst.get_mpz_t(), ca->get_mpz_t(), cb->get_mpz_t());
        } else {
          mpz_submul(dst.get_mpz_t(), ca->get_mpz_t(), cb->get_mpz_t());
        }
      }
    }
  }
}

// Drops entries with T * g_{n,k} < sum_j g_{n,j}.
inline void trim_row(LaurentPoly& row, std::uint64_t threshold) {
  if (row.is_zero()) return;
  const mpz_class total = row.sum();
  const mpz_class t(static_cast<unsigned long>(threshold));
  for (std::int64_t k = row.min_exp(); k <= row.max_exp(); ++k) {
    mpz_class& v = row.mutable_at(k);
    if (sgn(v) != 0 && t * v < total) v = 0;
  }
  row.normalize();
}

// Multiplies by Q = q + q^{-1}, into acc.
inline void add_times_q(LaurentPoly& acc, const LaurentPoly& p) {
  if (p.is_zero()) return;
  acc.reserve_range(p.min_exp() - 1, p.max_exp() + 1);
  for (std::int64_t k = p.min_exp(); k <= p.max_exp(); ++k) {
    const mpz_class& v = p.dense()[static_cast<std::size_t>(k - p.min_exp())];
    if (sgn(v) == 0) continue;
    acc.mutable_at(k - 1) += v;
    acc.mutable_at(k + 1) += v;
  }
}

}  // namespace detail

using OrderCallback = std::function<void(std::size_t order)>;

// Evaluates the L, K, G system order by order in z. Every right-hand term other
// than 1 carries z or z^2, so the coefficient of z^n only needs rows < n; this
// is the same result as n sweeps of fixed-point iteration from the series 1.
inline BSSeries iterate_bs_system(const BSSpec& spec, const OrderCallback& on_order = {}) {
  spec.validate();
  const std::size_t n_max = spec.n_max;
  const auto N = spec.N;
  const auto M = spec.M;

  std::vector<LaurentPoly> L(n_max + 1), K(n_max + 1), G(n_max + 1);
  std::vector<LaurentPoly> S(n_max + 1);       // Phi_{N,M} L + Phi_{M,N} K
  std::vector<LaurentPoly> pNM_L(n_max + 1);   // Phi_{N,M} L
  std::vector<LaurentPoly> pMN_K(n_max + 1);   // Phi_{M,N} K
  std::vector<LaurentPoly> pNN_L(n_max + 1);   // Phi_{N,N} L
  std::vector<LaurentPoly> pMM_K(n_max + 1);   // Phi_{M,M} K
  std::vector<detail::SparseRow> tL(n_max + 1), tK(n_max + 1), tG(n_max + 1), tS(n_max + 1),
      tNM_L(n_max + 1), tMN_K(n_max + 1), tNN_L(n_max + 1), tMM_K(n_max + 1);

  auto finalize = [&](std::size_t n) {
    if (spec.trim_threshold) {
      detail::trim_row(L[n], *spec.trim_threshold);
      detail::trim_row(K[n], *spec.trim_threshold);
      detail::trim_row(G[n], *spec.trim_threshold);
    }
    pNM_L[n] = phi_map(L[n], N, M);
    pMN_K[n] = phi_map(K[n], M, N);
    pNN_L[n] = phi_map(L[n], N, N);
    pMM_K[n] = phi_map(K[n], M, M);
    S[n] = pNM_L[n] + pMN_K[n];
    tL[n] = L[n].terms();
    tK[n] = K[n].terms();
    tG[n] = G[n].terms();
    tS[n] = S[n].terms();
    tNM_L[n] = pNM_L[n].terms();
    tMN_K[n] = pMN_K[n].terms();
    tNN_L[n] = pNN_L[n].terms();
    tMM_K[n] = pMM_K[n].terms();
    if (on_order) on_order(n);
  };

  L[0] = K[0] = G[0] = LaurentPoly::constant(1);
  finalize(0);
  for (std::size_t n = 1; n <= n_max; ++n) {
    detail::add_times_q(L[n], L[n - 1]);
    detail::add_times_q(K[n], K[n - 1]);
    detail::add_times_q(G[n], G[n - 1]);
    if (n >= 2) {
      const std::size_t m = n - 2;
      detail::convolve_into(L[n], L, tL, S, tS, m, +1);
      detail::convolve_into(L[n], pMN_K, tMN_K, pNN_L, tNN_L, m, -1);
      detail::convolve_into(K[n], K, tK, S, tS, m, +1);
      detail::convolve_into(K[n], pNM_L, tNM_L, pMM_K, tMM_K, m, -1);
      detail::convolve_into(G[n], G, tG, S, tS, m, +1);
    }
    L[n].normalize();
    K[n].normalize();
    G[n].normalize();
    finalize(n);
  }

  BSSeries out{QSeries(n_max), QSeries(n_max), QSeries(n_max)};
  for (std::size_t n = 0; n <= n_max; ++n) {
    out.L[n] = std::move(L[n]);
    out.K[n] = std::move(K[n]);
    out.G[n] = std::move(G[n]);
  }
  return out;
}

namespace detail {

// Small arithmetic layer so the printed polynomials read naturally.
struct Expr {
  QSeries v;
  friend Expr operator+(const Expr& a, const Expr& b) { return {qseries_add(a.v, b.v)}; }
  friend Expr operator-(const Expr& a, const Expr& b) { return {qseries_sub(a.v, b.v)}; }
  friend Expr operator*(const Expr& a, const Expr& b) { return {qseries_mul(a.v, b.v)}; }
  friend Expr operator*(long c, const Expr& a) {
    QSeries out = a.v;
    for (std::size_t n = 0; n <= out.order(); ++n) out[n] *= mpz_class(c);
    return {out};
  }
};

}  // namespace detail

// Left side of the printed algebraic equation for BS(N,N), N in {2,3,4},
// evaluated on G with Q = q + q^{-1}. Zero to order n_max iff G satisfies it.
inline QSeries bs_nn_polynomial_residual(int N, const QSeries& G) {
  using detail::Expr;
  const std::size_t n = G.order();
  const Expr one{QSeries::one(n)};
  QSeries zs(n);
  if (n >= 1) zs[1] = LaurentPoly::constant(1);
  const Expr z{zs};
  QSeries qs(n);
  qs[0] = LaurentPoly::q_plus_inverse();
  const Expr Q{qs};
  const Expr g{G};
  const Expr g2 = g * g;
  const Expr g3 = g2 * g;
  const Expr z2 = z * z;
  const Expr Q2 = Q * Q;

  switch (N) {
    case 2: {
      const Expr r = one + 3 * (z * Q * g) - (one - 4 * z2 - z2 * Q2) * g2 -
                     z * Q * (one - z * Q - 2 * z) * (one - z * Q + 2 * z) * g3;
      return r.v;
    }
    case 3: {
      const Expr g4 = g3 * g;
      const Expr r = one + 4 * (z * Q * g) + (6 * (Q2 * z2) - z2 - one) * g2 +
                     2 * (z * (Q * z + one) * (Q2 * z - Q + 2 * z)) * g3 +
                     z2 * (one - Q) * (one + Q) * (Q * z + 2 * z - one) * (Q * z - 2 * z - one) * g4;
      return r.v;
    }
    case 4: {
      const Expr g4 = g3 * g;
      const Expr g5 = g4 * g;
      const Expr Q3 = Q2 * Q;
      const Expr Q4 = Q2 * Q2;
      const Expr r =
          one + 5 * (g * Q * z) + (10 * (Q2 * z2) - 2 * z2 - one) * g2 +
          z * (10 * (Q3 * z2) - 6 * (Q * z2) - 3 * Q + 4 * z) * g3 +
          z2 * (3 * (Q4 * z2) + 2 * (Q2 * z2) - 3 * Q2 + 8 * (Q * z) - 8 * z2 + 2 * one) * g4 -
          z2 * z * Q * (Q2 - 2 * one) * (Q * z + 2 * z - one) * (Q * z - 2 * z - one) * g5;
      return r.v;
    }
    default:
      throw validation_error("polynomial check is available for N = 2, 3, 4 only");
  }
}

inline bool verify_bs_nn_polynomial(int N, const QSeries& G) {
  const QSeries r = bs_nn_polynomial_residual(N, G);
  for (std::size_t n = 0; n <= r.order(); ++n) {
    if (!r[n].is_zero()) return false;
  }
  return true;
}

// 1 / (1 - X) for X with zero constant term.
inline QSeries qseries_inverse_one_minus(const QSeries& x) {
  if (!x[0].is_zero()) throw validation_error("inverse_one_minus needs X(0) = 0");
  QSeries y = QSeries::one(x.order());
  for (std::size_t n = 1; n <= x.order(); ++n) {
    for (std::size_t i = 1; i <= n; ++i) laurent_mul_accumulate(y[n], x[i], y[n - i]);
  }
  return y;
}

// L(z;q) for BS(1,M) from its continued fraction
//   1/(1 - z(q+q^-1) - z^2/(1 - z(q^M+q^-M) - z^2/(...)))
// cut after `depth` nested levels. Level j first matters at order 2j, so the
// result is exact when 2(depth+1) > n_max. Shallower cuts throw unless
// `allow_truncated` is set.
inline QSeries bs1m_continued_fraction_L(std::int64_t M, std::size_t depth, std::size_t n_max,
                                         bool allow_truncated = false) {
  if (M < 1) throw validation_error("continued fraction needs M >= 1");
  if (!allow_truncated && 2 * (depth + 1) <= n_max) {
    throw validation_error("continued fraction depth " + std::to_string(depth) +
                           " is insufficient for order " + std::to_string(n_max));
  }
  auto power_of_m = [&](std::size_t j) {
    std::int64_t p = 1;
    for (std::size_t i = 0; i < j; ++i) p *= M;
    return p;
  };
  std::optional<QSeries> inner;
  for (std::size_t j = depth + 1; j-- > 0;) {
    const std::size_t ord = n_max >= 2 * j ? n_max - 2 * j : 0;
    const std::int64_t e = power_of_m(j);
    QSeries x(ord);
    if (ord >= 1) x[1] = LaurentPoly{{-e, 1}, {e, 1}};
    if (inner && ord >= 2) {
      for (std::size_t n = 0; n + 2 <= ord && n <= inner->order(); ++n) x[n + 2] += (*inner)[n];
    }
    inner = qseries_inverse_one_minus(x);
  }
  return *inner;
}

// [q^0]G for the free group on k generators, 2(2k-1) / ((2k-2) + 2k sqrt(1 - 4(2k-1) z^2)).
inline Coefficients free_group_series(std::size_t k, std::size_t n_max) {
  if (k < 2) throw validation_error("free_group_series needs k >= 2");
  const long km = 2 * static_cast<long>(k) - 1;
  RatSeries inside(n_max, {1, 0, -4 * km});
  const RatSeries root = rat_sqrt(inside);
  RatSeries den = rat_scale(root, mpq_class(2 * static_cast<long>(k)));
  den[0] += 2 * static_cast<long>(k) - 2;
  RatSeries num(n_max, {2 * km});
  return rat_div(num, den).to_integers();
}

// (1 - sqrt(1 - 12 z^2)) / (6 z^2), the free-group limit of L.
inline RatSeries free_group_L0(std::size_t n_max) {
  const RatSeries root = rat_sqrt(RatSeries(n_max + 2, {1, 0, -12}));
  RatSeries numer = rat_scale(root, mpq_class(-1));
  numer[0] += 1;
  return rat_div(numer, RatSeries(n_max + 2, {0, 0, 6}));
}

inline RatSeries kouksov_closed_form(int which, std::size_t n_max) {
  // A few extra terms cover the valuation lost in the final division.
  const std::size_t n = n_max + 2;
  switch (which) {
    case 1: {
      const RatSeries root = rat_sqrt(RatSeries(n, {1, -2, 1, -6, -8, -18, 9, -54, 81}));
      const RatSeries inner = rat_add(RatSeries(n, {0, -1, 1, -8, 3, -9}),
                                      rat_mul(RatSeries(n, {2, -1, 6}), root));
      const RatSeries numer = rat_mul(RatSeries(n, {1, 1}), inner);
      RatSeries den = RatSeries(n, {2});
      for (const RatSeries& f : {RatSeries(n, {1, -3}), RatSeries(n, {1, 0, 3}), RatSeries(n, {1, 3, 3}),
                                 RatSeries(n, {1, -1, 3})}) {
        den = rat_mul(den, f);
      }
      return rat_div(numer, den).truncated(n_max);
    }
    case 2: {
      const RatSeries root = rat_sqrt(RatSeries(n, {1, -2, -1, -6, 9}));
      const RatSeries numer = rat_mul(RatSeries(n, {1, 1}), rat_add(RatSeries(n, {0, -1}), root));
      const RatSeries den = rat_mul(RatSeries(n, {1, -3}), RatSeries(n, {1, 2, 3}));
      return rat_div(numer, den).truncated(n_max);
    }
    case 3: {
      const RatSeries root = rat_sqrt(RatSeries(n, {1, 0, -22, 0, 25}));
      const RatSeries numer = rat_add(RatSeries(n, {-1, 0, -5}), rat_scale(root, mpq_class(3)));
      const RatSeries den = RatSeries(n, {2, 0, -50});
      return rat_div(numer, den).truncated(n_max);
    }
    default:
      throw validation_error("kouksov_series: which must be 1, 2 or 3");
  }
}

// Reduced trivial-word counts from the closed forms; throws on any fractional
// or negative coefficient.
inline Coefficients kouksov_series(int which, std::size_t n_max) {
  Coefficients c = kouksov_closed_form(which, n_max).to_integers();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (sgn(c[i]) < 0) throw validation_error("negative coefficient at index " + std::to_string(i));
  }
  return c;
}

// All-words series -> reduced-words series using exact rational arithmetic.
inline Coefficients reduced_from_all_words(const Coefficients& all, std::size_t k) {
  if (all.empty()) throw validation_error("empty coefficient sequence");
  return substitute_reduced(RatSeries::from_integers(all, all.size() - 1), k).to_integers();
}

struct GrowthEstimate {
  double mu = 0.0;
  double lambda = 0.0;
  double correction_exponent = -2.0;
  std::optional<double> amplitude;
  std::string method = "ratio+richardson";
  std::vector<std::pair<std::size_t, double>> mu_sequence;  // corrected ratio estimates
  std::size_t terms_used = 0;
};

inline double log_mpz(const mpz_class& v) {
  long e = 0;
  const double m = mpz_get_d_2exp(&e, v.get_mpz_t());
  return std::log(m) + static_cast<double>(e) * std::log(2.0);
}

// lambda = (mu + sqrt(mu^2 - 4(2k-1))) / 2, the root of lambda + (2k-1)/lambda = mu
// that is at least sqrt(2k-1).
inline double mu_to_lambda(double mu, std::size_t k) {
  if (k < 1) throw validation_error("generator count must be >= 1");
  const double c = 2.0 * static_cast<double>(k) - 1.0;
  const double disc = mu * mu - 4.0 * c;
  // Allow rounding right at the bound mu = 2 sqrt(2k-1).
  if (disc < -1e-12 * mu * mu) {
    throw validation_error("mu is below 2 sqrt(2k-1); no cogrowth value corresponds");
  }
  return (mu + std::sqrt(std::max(0.0, disc))) / 2.0;
}

// Ratio method on even-index coefficients assuming g_n ~ A mu^n n^c:
// mu_n^2 = (g_n / g_{n-2}) ((n-2)/n)^c, then two-point Richardson in 1/n^2.
inline GrowthEstimate growth_rate_estimate(const Coefficients& coeffs, double correction_exponent = -2.0,
                                           std::size_t generators = 2) {
  std::vector<std::pair<std::size_t, double>> logs;
  for (std::size_t n = 0; n < coeffs.size(); n += 2) {
    if (sgn(coeffs[n]) > 0) logs.emplace_back(n, log_mpz(coeffs[n]));
  }
  if (logs.size() < 20) throw validation_error("growth_rate_estimate needs >= 20 nonzero even coefficients");
  GrowthEstimate out;
  out.correction_exponent = correction_exponent;
  const double c = correction_exponent;
  for (std::size_t i = 1; i < logs.size(); ++i) {
    const auto [n, lg] = logs[i];
    const auto [p, lp] = logs[i - 1];
    if (n != p + 2 || p == 0) continue;
    const double log_mu2 = lg - lp + c * std::log(static_cast<double>(p) / static_cast<double>(n));
    out.mu_sequence.emplace_back(n, std::exp(0.5 * log_mu2));
  }
  const auto& seq = out.mu_sequence;
  if (seq.size() < 8) throw validation_error("too few consecutive even coefficients");
  // The tail of the corrected ratios must be monotone for extrapolation to mean anything.
  const std::size_t tail = std::max<std::size_t>(5, seq.size() / 4);
  int direction = 0;
  for (std::size_t i = seq.size() - tail + 1; i < seq.size(); ++i) {
    const double d = seq[i].second - seq[i - 1].second;
    if (std::abs(d) <= 1e-13 * seq[i].second) continue;
    const int s = d > 0 ? 1 : -1;
    if (direction == 0) direction = s;
    if (s != direction) throw validation_error("non-monotone ratio sequence; extrapolation refused");
  }
  const auto [n1, m1] = seq[seq.size() - 1];
  const auto [n0, m0] = seq[seq.size() - 2];
  const double a = static_cast<double>(n1) * static_cast<double>(n1);
  const double b = static_cast<double>(n0) * static_cast<double>(n0);
  out.mu = (a * m1 - b * m0) / (a - b);
  out.terms_used = coeffs.size();
  out.lambda = mu_to_lambda(out.mu, generators);
  const auto [nl, ll] = logs.back();
  if (nl > 0) {
    out.amplitude = std::exp(ll - static_cast<double>(nl) * std::log(out.mu) -
                             c * std::log(static_cast<double>(nl)));
  }
  return out;
}

struct SandwichCheck {
  bool holds = true;
  std::int64_t argmax = 0;
};

// g_{n,0} <= sum_k g_{n,k} <= (2n+1) max_k g_{n,k}; also reports argmax_k.
inline SandwichCheck check_sandwich(const LaurentPoly& row, std::size_t n) {
  SandwichCheck out;
  if (row.is_zero()) return out;
  mpz_class best = -1;
  mpz_class total = 0;
  for (std::int64_t k = row.min_exp(); k <= row.max_exp(); ++k) {
    const mpz_class& v = row.dense()[static_cast<std::size_t>(k - row.min_exp())];
    total += v;
    if (v > best || (v == best && std::abs(k) < std::abs(out.argmax))) {
      best = v;
      out.argmax = k;
    }
  }
  out.holds = row.coeff(0) <= total && total <= mpz_class(static_cast<unsigned long>(2 * n + 1)) * best;
  return out;
}

}  // namespace cogrowth
