#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "cogrowth/error.hpp"

namespace cogrowth {

// A signed generator a_i^{+1} or a_i^{-1}.
struct Letter {
  std::uint32_t gen = 0;
  std::int8_t sign = 1;

  constexpr Letter inverse() const noexcept {
    return Letter{gen, static_cast<std::int8_t>(-sign)};
  }
  constexpr bool cancels(const Letter& other) const noexcept {
    return gen == other.gen && sign == -other.sign;
  }
  // Position in the 2k-letter alphabet: a_0, a_0^{-1}, a_1, a_1^{-1}, ...
  constexpr std::size_t index() const noexcept {
    return 2 * static_cast<std::size_t>(gen) + (sign < 0 ? 1 : 0);
  }
  static constexpr Letter from_index(std::size_t i) noexcept {
    return Letter{static_cast<std::uint32_t>(i / 2),
                  static_cast<std::int8_t>(i % 2 == 0 ? 1 : -1)};
  }

  friend constexpr auto operator<=>(const Letter&, const Letter&) = default;
};

inline constexpr Letter gen(std::uint32_t g) { return Letter{g, 1}; }
inline constexpr Letter inv(std::uint32_t g) { return Letter{g, -1}; }

class Word;
Word free_reduce(std::span<const Letter> raw);

// A freely reduced word. Every constructor path goes through free reduction,
// so a Word never holds an adjacent inverse pair.
class Word {
 public:
  using const_iterator = std::vector<Letter>::const_iterator;

  Word() = default;
  Word(std::initializer_list<Letter> letters)
      : Word(free_reduce(std::span<const Letter>(letters.begin(), letters.size()))) {}

  // Caller guarantees `letters` is already freely reduced.
  static Word from_reduced(std::vector<Letter> letters) {
    Word w;
    w.letters_ = std::move(letters);
    return w;
  }

  std::size_t size() const noexcept { return letters_.size(); }
  bool empty() const noexcept { return letters_.empty(); }
  const Letter& operator[](std::size_t i) const { return letters_[i]; }
  const Letter& front() const { return letters_.front(); }
  const Letter& back() const { return letters_.back(); }
  const_iterator begin() const noexcept { return letters_.begin(); }
  const_iterator end() const noexcept { return letters_.end(); }
  std::span<const Letter> letters() const noexcept { return letters_; }

  std::size_t max_generator() const noexcept {
    std::size_t m = 0;
    for (const auto& l : letters_) m = std::max<std::size_t>(m, l.gen + 1);
    return m;
  }

  friend bool operator==(const Word&, const Word&) = default;
  friend auto operator<=>(const Word& a, const Word& b) {
    if (a.size() != b.size()) return a.size() <=> b.size();
    return a.letters_ <=> b.letters_;
  }

 private:
  std::vector<Letter> letters_;
};

// Stack-based free reduction; the result does not depend on cancellation order.
inline Word free_reduce(std::span<const Letter> raw) {
  std::vector<Letter> out;
  out.reserve(raw.size());
  for (const auto& l : raw) {
    if (!out.empty() && out.back().cancels(l)) {
      out.pop_back();
    } else {
      out.push_back(l);
    }
  }
  return Word::from_reduced(std::move(out));
}

// Free-group product. Cancellation only happens at the seam.
inline Word concat_reduce(const Word& u, const Word& v) {
  std::size_t cut = 0;
  const std::size_t limit = std::min(u.size(), v.size());
  while (cut < limit && u[u.size() - 1 - cut].cancels(v[cut])) ++cut;
  std::vector<Letter> out;
  out.reserve(u.size() + v.size() - 2 * cut);
  out.insert(out.end(), u.begin(), u.end() - static_cast<std::ptrdiff_t>(cut));
  out.insert(out.end(), v.begin() + static_cast<std::ptrdiff_t>(cut), v.end());
  return Word::from_reduced(std::move(out));
}

inline Word concat_reduce(std::initializer_list<Word> parts) {
  Word acc;
  for (const auto& p : parts) acc = concat_reduce(acc, p);
  return acc;
}

inline Word invert(const Word& w) {
  std::vector<Letter> out;
  out.reserve(w.size());
  for (auto it = w.letters().rbegin(); it != w.letters().rend(); ++it) {
    out.push_back(it->inverse());
  }
  return Word::from_reduced(std::move(out));
}

inline Word power(const Word& w, long long exponent) {
  const Word base = exponent < 0 ? invert(w) : w;
  Word acc;
  for (long long i = 0; i < (exponent < 0 ? -exponent : exponent); ++i) {
    acc = concat_reduce(acc, base);
  }
  return acc;
}

// u v u^{-1} v^{-1}
inline Word commutator(const Word& u, const Word& v) {
  return concat_reduce({u, v, invert(u), invert(v)});
}

// x w x^{-1}, freely reduced. Only the two ends can cancel.
inline Word conjugate_letter(const Word& w, Letter x) {
  const Letter xi = x.inverse();
  const auto n = w.size();
  if (n == 0) return w;
  const bool left = w.front() == xi;
  const bool right = w.back() == x;
  // left && right forces n >= 3 because w is reduced.
  std::vector<Letter> out;
  out.reserve(n + 2);
  if (!left) out.push_back(x);
  out.insert(out.end(), w.begin() + (left ? 1 : 0),
             w.end() - (right ? 1 : 0));
  if (!right) out.push_back(xi);
  return Word::from_reduced(std::move(out));
}

inline bool is_cyclically_reduced(const Word& w) {
  return w.size() < 2 || !w.front().cancels(w.back());
}

// Strips matching first/last inverse pairs; the result is a conjugate of w.
inline Word cyclic_reduce(const Word& w) {
  std::size_t lo = 0;
  std::size_t hi = w.size();
  while (hi - lo >= 2 && w[lo].cancels(w[hi - 1])) {
    ++lo;
    --hi;
  }
  return Word::from_reduced(
      std::vector<Letter>(w.begin() + static_cast<std::ptrdiff_t>(lo),
                          w.begin() + static_cast<std::ptrdiff_t>(hi)));
}

inline Word rotate(const Word& w, std::size_t shift) {
  if (w.empty()) return w;
  shift %= w.size();
  std::vector<Letter> out(w.begin(), w.end());
  std::rotate(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(shift), out.end());
  return Word::from_reduced(std::move(out));
}

// All distinct rotations of a cyclically reduced word, sorted.
inline std::vector<Word> cyclic_permutations(const Word& w) {
  if (!is_cyclically_reduced(w)) {
    throw validation_error("cyclic_permutations: word is not cyclically reduced");
  }
  if (w.empty()) return {w};
  std::vector<Word> out;
  out.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out.push_back(rotate(w, i));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Caret-power rendering, e.g. "a^2 b a^-2 b^-1". The empty word renders as "1".
inline std::string render(const Word& w, std::span<const std::string> names) {
  if (w.empty()) return "1";
  std::string out;
  std::size_t i = 0;
  while (i < w.size()) {
    std::size_t j = i;
    while (j < w.size() && w[j] == w[i]) ++j;
    const long long run = static_cast<long long>(j - i) * w[i].sign;
    if (!out.empty()) out += ' ';
    out += w[i].gen < names.size() ? names[w[i].gen] : ("x" + std::to_string(w[i].gen));
    if (run != 1) out += "^" + std::to_string(run);
    i = j;
  }
  return out;
}

struct WordHash {
  std::size_t operator()(const Word& w) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (const auto& l : w) {
      h ^= l.index() + 1;
      h *= 1099511628211ull;
    }
    return h;
  }
};

}  // namespace cogrowth
