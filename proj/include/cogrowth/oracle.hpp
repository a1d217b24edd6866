#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "cogrowth/error.hpp"
#include "cogrowth/presentation.hpp"
#include "cogrowth/qseries.hpp"
#include "cogrowth/word.hpp"

namespace cogrowth {

namespace detail {

inline void put_varint(std::string& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<char>((v & 0x7f) | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<char>(v));
}

inline void put_signed(std::string& out, std::int64_t v) {
  put_varint(out, (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63));
}

inline void put_mpz(std::string& out, const mpz_class& v) {
  if (v.fits_slong_p()) {
    out.push_back('s');
    put_signed(out, v.get_si());
  } else {
    out.push_back('z');
    out += v.get_str(16);
    out.push_back(';');
  }
}

}  // namespace detail

// P a^k with P a sequence of syllables a^i b^eps; 0 <= i < N for eps = +1 and
// 0 <= i < M for eps = -1.
struct BSNormalForm {
  struct Syllable {
    std::uint32_t i = 0;
    std::int8_t eps = 1;
    friend bool operator==(const Syllable&, const Syllable&) = default;
  };
  std::vector<Syllable> prefix;
  mpz_class a_exponent = 0;

  friend bool operator==(const BSNormalForm&, const BSNormalForm&) = default;
};

// Right multiplication of a normal form by a letter of BS(N,M) = <a, b | a^N b = b a^M>,
// generator 0 = a, 1 = b. Pushing a^k past b uses a^{N l} b = b a^{M l}; pushing
// past b^{-1} uses a^{M l} b^{-1} = b^{-1} a^{N l}.
inline BSNormalForm bs_nf_mul(BSNormalForm nf, Letter x, std::int64_t N, std::int64_t M) {
  if (x.gen == 0) {
    nf.a_exponent += x.sign;
    return nf;
  }
  const bool up = x.sign > 0;
  const std::int64_t div = up ? N : M;
  const std::int64_t mul = up ? M : N;
  mpz_class l;
  mpz_class r;
  mpz_fdiv_qr_ui(l.get_mpz_t(), r.get_mpz_t(), nf.a_exponent.get_mpz_t(), static_cast<unsigned long>(div));
  const auto i = static_cast<std::uint32_t>(r.get_ui());
  const std::int8_t eps = up ? 1 : -1;
  if (i == 0 && !nf.prefix.empty() && nf.prefix.back().eps == -eps) {
    // a^j b^{-eps} b^{eps} cancels; the a^j residue rejoins the exponent.
    const std::uint32_t j = nf.prefix.back().i;
    nf.prefix.pop_back();
    nf.a_exponent = mpz_class(j) + l * mul;
    return nf;
  }
  nf.prefix.push_back({i, eps});
  nf.a_exponent = l * mul;
  return nf;
}

class BSEvaluator {
 public:
  using Element = BSNormalForm;
  BSEvaluator(std::int64_t n, std::int64_t m) : n_(n), m_(m) {
    if (n < 1 || m < 1) throw validation_error("BS(N,M) needs N, M >= 1");
  }
  std::size_t generators() const { return 2; }
  Element identity() const { return {}; }
  Element multiply(const Element& e, Letter x) const { return bs_nf_mul(e, x, n_, m_); }
  std::string key(const Element& e) const {
    std::string out;
    detail::put_varint(out, e.prefix.size());
    for (const auto& s : e.prefix) detail::put_varint(out, 2 * static_cast<std::uint64_t>(s.i) + (s.eps < 0 ? 1 : 0));
    detail::put_mpz(out, e.a_exponent);
    return out;
  }

 private:
  std::int64_t n_;
  std::int64_t m_;
};

class Z2Evaluator {
 public:
  using Element = std::pair<std::int64_t, std::int64_t>;
  std::size_t generators() const { return 2; }
  Element identity() const { return {0, 0}; }
  Element multiply(Element e, Letter x) const {
    (x.gen == 0 ? e.first : e.second) += x.sign;
    return e;
  }
  std::string key(const Element& e) const {
    std::string out;
    detail::put_signed(out, e.first);
    detail::put_signed(out, e.second);
    return out;
  }
};

class FreeGroupEvaluator {
 public:
  using Element = Word;
  explicit FreeGroupEvaluator(std::size_t k) : k_(k) {}
  std::size_t generators() const { return k_; }
  Element identity() const { return {}; }
  Element multiply(const Element& e, Letter x) const { return concat_reduce(e, Word::from_reduced({x})); }
  std::string key(const Element& e) const {
    std::string out;
    for (const auto& l : e) detail::put_varint(out, l.index());
    return out;
  }

 private:
  std::size_t k_;
};

// Free product of cyclic groups Z_{n_0} * Z_{n_1} * ..., one generator per
// factor. Elements are alternating syllables (factor, exponent mod n).
class CyclicFreeProductEvaluator {
 public:
  using Element = std::vector<std::pair<std::uint32_t, std::uint32_t>>;
  explicit CyclicFreeProductEvaluator(std::vector<std::uint32_t> orders) : orders_(std::move(orders)) {
    for (auto o : orders_) {
      if (o < 2) throw validation_error("cyclic factor orders must be >= 2");
    }
  }
  std::size_t generators() const { return orders_.size(); }
  Element identity() const { return {}; }
  Element multiply(Element e, Letter x) const {
    const std::uint32_t n = orders_.at(x.gen);
    const std::uint32_t step = x.sign > 0 ? 1 : n - 1;
    if (!e.empty() && e.back().first == x.gen) {
      e.back().second = (e.back().second + step) % n;
      if (e.back().second == 0) e.pop_back();
    } else {
      e.emplace_back(x.gen, step);
    }
    return e;
  }
  std::string key(const Element& e) const {
    std::string out;
    for (const auto& [g, p] : e) {
      detail::put_varint(out, g);
      detail::put_varint(out, p);
    }
    return out;
  }

 private:
  std::vector<std::uint32_t> orders_;
};

struct WreathElement {
  std::int64_t cursor = 0;
  std::map<std::int64_t, std::int64_t> support;  // no zero values stored
  friend bool operator==(const WreathElement&, const WreathElement&) = default;
};

// Z wr Z with generator 0 = a (lamp at the cursor) and 1 = t (moves the cursor).
class WreathEvaluator {
 public:
  using Element = WreathElement;
  std::size_t generators() const { return 2; }
  Element identity() const { return {}; }
  Element multiply(Element e, Letter x) const {
    if (x.gen == 1) {
      e.cursor += x.sign;
      return e;
    }
    auto& v = e.support[e.cursor];
    v += x.sign;
    if (v == 0) e.support.erase(e.cursor);
    return e;
  }
  std::string key(const Element& e) const {
    std::string out;
    detail::put_signed(out, e.cursor);
    for (const auto& [pos, val] : e.support) {
      detail::put_signed(out, pos);
      detail::put_signed(out, val);
    }
    return out;
  }
};

using GroupEvaluator =
    std::variant<BSEvaluator, Z2Evaluator, FreeGroupEvaluator, CyclicFreeProductEvaluator, WreathEvaluator>;

class unsupported_group : public validation_error {
 public:
  using validation_error::validation_error;
};

// Evaluator for a builtin presentation, or for any presentation without
// relators (the free group). Thompson and basilica groups have none.
inline GroupEvaluator evaluator_for(const Presentation& p) {
  const auto& b = p.builtin;
  if (b == "bs") return BSEvaluator(p.params.at(0), p.params.at(1));
  if (b == "z2") return Z2Evaluator{};
  if (b == "kouksov1") return CyclicFreeProductEvaluator({2, 3});
  if (b == "kouksov2") return CyclicFreeProductEvaluator({3, 3});
  if (b == "kouksov3") return CyclicFreeProductEvaluator({2, 2, 2});
  if (b == "wreath_zz") return WreathEvaluator{};
  if (p.relators.empty()) return FreeGroupEvaluator(p.rank());
  throw unsupported_group("unsupported: no word-problem oracle for '" +
                          (b.empty() ? p.render() : b) + "'");
}

inline std::size_t evaluator_generators(const GroupEvaluator& ev) {
  return std::visit([](const auto& e) { return e.generators(); }, ev);
}

// Folds a word through the evaluator and compares with the identity key.
inline bool is_trivial(const GroupEvaluator& ev, const Word& w) {
  return std::visit(
      [&](const auto& e) {
        auto x = e.identity();
        for (const auto& l : w) x = e.multiply(x, l);
        return e.key(x) == e.key(e.identity());
      },
      ev);
}

struct OracleOptions {
  bool reduced = false;
  std::size_t memory_budget_bytes = std::size_t{8} << 30;
};

namespace detail {

// Rough per-state footprint: key bytes, hash-node overhead and the element.
inline std::size_t state_bytes(const std::string& key) { return key.capacity() + 160; }

template <class Eval>
Coefficients count_trivial_impl(const Eval& ev, std::size_t n_max, const OracleOptions& opt) {
  using Element = typename Eval::Element;
  const std::size_t k = ev.generators();
  const std::size_t none = 2 * k;  // "no previous letter"
  if (opt.reduced && none >= 0x80) throw validation_error("reduced oracle supports at most 63 generators");
  struct State {
    Element element;
    mpz_class count;
  };
  using Layer = std::unordered_map<std::string, State>;
  auto state_key = [&](const std::string& elem_key, std::size_t last) {
    if (!opt.reduced) return elem_key;
    std::string s = elem_key;
    detail::put_varint(s, last);
    return s;
  };

  const std::string id_key = ev.key(ev.identity());
  Coefficients out(n_max + 1);
  Layer layer;
  layer.emplace(state_key(id_key, none), State{ev.identity(), 1});
  out[0] = 1;
  for (std::size_t n = 1; n <= n_max; ++n) {
    Layer next;
    std::size_t bytes = 0;
    for (const auto& [skey, st] : layer) {
      std::size_t last = none;
      if (opt.reduced) {
        // The varint suffix holds the last letter index, always < 128 here.
        last = static_cast<unsigned char>(skey.back());
      }
      for (std::size_t li = 0; li < 2 * k; ++li) {
        const Letter x = Letter::from_index(li);
        if (opt.reduced && last != none && Letter::from_index(last).cancels(x)) continue;
        Element e = ev.multiply(st.element, x);
        const std::string ek = ev.key(e);
        auto [it, inserted] = next.try_emplace(state_key(ek, li), State{std::move(e), 0});
        it->second.count += st.count;
        if (inserted) {
          bytes += state_bytes(it->first);
          if (bytes > opt.memory_budget_bytes) {
            throw budget_exceeded("oracle memory budget exceeded while building layer " +
                                      std::to_string(n),
                                  n - 1);
          }
        }
      }
    }
    mpz_class at_identity = 0;
    if (opt.reduced) {
      for (std::size_t li = 0; li <= 2 * k; ++li) {
        auto it = next.find(state_key(id_key, li));
        if (it != next.end()) at_identity += it->second.count;
      }
    } else {
      auto it = next.find(id_key);
      if (it != next.end()) at_identity = it->second.count;
    }
    out[n] = at_identity;
    layer = std::move(next);
  }
  return out;
}

template <class Eval>
void enumerate_impl(const Eval& ev, std::size_t n_max, std::vector<Word>& out,
                    std::vector<Letter>& stack, const typename Eval::Element& e, const std::string& id_key,
                    std::size_t& budget) {
  if (ev.key(e) == id_key) {
    if (out.size() >= budget) throw budget_exceeded("enumeration exceeds the word budget", stack.size());
    out.push_back(Word::from_reduced(stack));
  }
  if (stack.size() == n_max) return;
  for (std::size_t li = 0; li < 2 * ev.generators(); ++li) {
    const Letter x = Letter::from_index(li);
    if (!stack.empty() && stack.back().cancels(x)) continue;
    stack.push_back(x);
    enumerate_impl(ev, n_max, out, stack, ev.multiply(e, x), id_key, budget);
    stack.pop_back();
  }
}

}  // namespace detail

// Number of (reduced or unrestricted) words of each length 0..n_max that
// evaluate to the identity, by layered dynamic programming over group elements.
inline Coefficients count_trivial_words(const GroupEvaluator& ev, std::size_t n_max,
                                        const OracleOptions& opt = {}) {
  return std::visit([&](const auto& e) { return detail::count_trivial_impl(e, n_max, opt); }, ev);
}

inline Coefficients count_trivial_words(const GroupEvaluator& ev, std::size_t n_max, bool reduced) {
  OracleOptions opt;
  opt.reduced = reduced;
  return count_trivial_words(ev, n_max, opt);
}

// Explicit freely reduced trivial words of length <= n_max, by depth-first
// search, sorted by length then letters.
inline std::vector<Word> enumerate_trivial_words(const GroupEvaluator& ev, std::size_t n_max,
                                                 std::size_t max_words = 50'000'000) {
  std::vector<Word> out;
  std::visit(
      [&](const auto& e) {
        std::vector<Letter> stack;
        const std::string id_key = e.key(e.identity());
        detail::enumerate_impl(e, n_max, out, stack, e.identity(), id_key, max_words);
      },
      ev);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cogrowth
