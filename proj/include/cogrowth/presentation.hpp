#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cogrowth/error.hpp"
#include "cogrowth/random.hpp"
#include "cogrowth/word.hpp"

namespace cogrowth {

enum class InfiniteFamily { none, wreath_zz };

struct Presentation {
  std::vector<std::string> generators;
  std::vector<Word> relators;
  InfiniteFamily family = InfiniteFamily::none;
  // Set by builtin_presentation; selects the oracle evaluator.
  std::string builtin;
  std::vector<int> params;

  std::size_t rank() const noexcept { return generators.size(); }

  std::optional<std::uint32_t> generator_index(std::string_view name) const {
    for (std::size_t i = 0; i < generators.size(); ++i) {
      if (generators[i] == name) return static_cast<std::uint32_t>(i);
    }
    return std::nullopt;
  }

  std::string render_word(const Word& w) const { return cogrowth::render(w, generators); }

  std::string render() const {
    std::string out = "<";
    for (std::size_t i = 0; i < generators.size(); ++i) {
      if (i) out += ",";
      out += generators[i];
    }
    out += " | ";
    for (std::size_t i = 0; i < relators.size(); ++i) {
      if (i) out += ", ";
      out += render_word(relators[i]);
    }
    out += ">";
    return out;
  }

  friend bool operator==(const Presentation& a, const Presentation& b) {
    return a.generators == b.generators && a.relators == b.relators && a.family == b.family;
  }
};

namespace detail {

class PresentationParser {
 public:
  PresentationParser(std::string_view text, std::vector<std::string>* warnings)
      : text_(text), warnings_(warnings) {}

  Presentation parse() {
    expect('<');
    parse_generators();
    expect('|');
    skip_ws();
    if (peek() != '>') {
      parse_relator();
      while (accept(',')) parse_relator();
    }
    expect('>');
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters after '>'");
    return std::move(result_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw validation_error("presentation parse error at offset " + std::to_string(pos_) +
                           ": " + msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  bool accept(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) {
      const char got = peek();
      fail(std::string("expected '") + c + "' but found " +
           (got == '\0' ? std::string("end of input") : std::string("'") + got + "'"));
    }
  }

  static bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  std::string identifier() {
    if (!ident_start(peek())) fail("expected identifier");
    const std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  long long integer() {
    skip_ws();
    bool neg = false;
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
      neg = text_[pos_] == '-';
      ++pos_;
    }
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      fail("expected integer exponent");
    }
    long long v = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      v = v * 10 + (text_[pos_] - '0');
      if (v > 1'000'000) fail("exponent too large");
      ++pos_;
    }
    return neg ? -v : v;
  }

  void parse_generators() {
    do {
      auto name = identifier();
      if (std::find(result_.generators.begin(), result_.generators.end(), name) !=
          result_.generators.end()) {
        fail("duplicate generator name '" + name + "'");
      }
      result_.generators.push_back(std::move(name));
    } while (accept(','));
  }

  static bool word_terminator(char c) {
    return c == ',' || c == '|' || c == '>' || c == ')' || c == ']' || c == '=' || c == '\0';
  }

  Word parse_word() {
    Word acc;
    bool any = false;
    while (!word_terminator(peek())) {
      if (any) accept('*');
      acc = concat_reduce(acc, parse_term());
      any = true;
    }
    if (!any) fail("expected a word");
    return acc;
  }

  Word parse_term() {
    Word atom = parse_atom();
    if (accept('^')) return power(atom, integer());
    return atom;
  }

  Word parse_atom() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      Word w = parse_word();
      expect(')');
      return w;
    }
    if (c == '[') {
      ++pos_;
      Word u = parse_word();
      expect(',');
      Word v = parse_word();
      expect(']');
      return commutator(u, v);
    }
    if (c == '1') {
      ++pos_;
      return Word{};
    }
    if (ident_start(c)) {
      const std::size_t at = pos_;
      const auto name = identifier();
      const auto idx = result_.generator_index(name);
      if (!idx) {
        pos_ = at;
        fail("unknown identifier '" + name + "'");
      }
      return Word::from_reduced({gen(*idx)});
    }
    if (c == '\0') fail("unbalanced delimiters: unexpected end of input");
    fail(std::string("unexpected character '") + c + "'");
  }

  void parse_relator() {
    const std::size_t at = pos_;
    Word lhs = parse_word();
    if (accept('=')) {
      Word rhs = parse_word();
      lhs = concat_reduce(lhs, invert(rhs));
    }
    Word rel = cyclic_reduce(lhs);
    if (rel.empty()) {
      pos_ = at;
      fail("relator is empty after reduction");
    }
    if (rel.size() != lhs.size() && warnings_) {
      warnings_->push_back("relator " + render(lhs, result_.generators) +
                           " was cyclically reduced to " + render(rel, result_.generators));
    }
    result_.relators.push_back(std::move(rel));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<std::string>* warnings_;
  Presentation result_;
};

}  // namespace detail

// Grammar: '<' gens '|' rels '>'. A relation "u = v" becomes the relator u v^{-1}.
// Relators are freely and then cyclically reduced.
inline Presentation parse_presentation(std::string_view text,
                                       std::vector<std::string>* warnings = nullptr) {
  return detail::PresentationParser(text, warnings).parse();
}

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {
      "bs",         "z2",         "kouksov1",   "kouksov2", "kouksov3", "thompson1",
      "thompson2",  "thompson3",  "basilica_a", "basilica_b", "wreath_zz"};
  return names;
}

inline Presentation builtin_presentation(std::string_view name, std::span<const int> params = {}) {
  auto fixed = [&](std::string_view text) {
    if (!params.empty()) {
      throw validation_error("group '" + std::string(name) + "' takes no parameters");
    }
    return parse_presentation(text);
  };

  Presentation p;
  if (name == "bs") {
    if (params.size() != 2) throw validation_error("group 'bs' needs two parameters N M");
    const int n = params[0];
    const int m = params[1];
    if (n < 1 || m < 1) throw validation_error("bs(N,M) needs N, M >= 1");
    p = parse_presentation("<a,b | a^" + std::to_string(n) + " b a^-" + std::to_string(m) +
                           " b^-1>");
  } else if (name == "z2") {
    p = fixed("<a,b | [a,b]>");
  } else if (name == "kouksov1") {
    p = fixed("<a,b | a^2, b^3>");
  } else if (name == "kouksov2") {
    p = fixed("<a,b | a^3, b^3>");
  } else if (name == "kouksov3") {
    p = fixed("<a,b,c | a^2, b^2, c^2>");
  } else if (name == "thompson1") {
    p = fixed("<a,b | [a*b^-1, a^-1*b*a], [a*b^-1, a^-2*b*a^2]>");
  } else if (name == "thompson2") {
    p = fixed("<a,b,c,d | c = a^-1 b a, d = a^-1 c a, [a b^-1, c], [a b^-1, d]>");
  } else if (name == "thompson3") {
    p = fixed("<a,b,c,d,e | c = a^-1 b a, d = a^-1 c a, e = a b^-1, [e,c], [e,d]>");
  } else if (name == "basilica_a") {
    // x^y is read as y^{-1} x y.
    p = fixed("<a,b,t | [a,t^-1] = b, t^-2 a t^2 = a a, [[b,a],a] = 1>");
  } else if (name == "basilica_b") {
    p = fixed("<a,b,t | t^-1 a t = b, t^-1 b t = a^2, b^-1 a b a^-1 b^-1 a^-1 b a = 1>");
  } else if (name == "wreath_zz") {
    // The representative relator [a, t a t^-1]; the sampler draws from the whole family.
    p = fixed("<a,t | [a, t a t^-1]>");
    p.family = InfiniteFamily::wreath_zz;
  } else {
    throw validation_error("unknown group '" + std::string(name) + "'");
  }
  p.builtin = std::string(name);
  p.params.assign(params.begin(), params.end());
  return p;
}

// S: every relator, its inverse, and all their rotations; sorted and deduplicated.
class RelatorSet {
 public:
  RelatorSet() = default;
  explicit RelatorSet(std::vector<Word> elements) : elements_(std::move(elements)) {
    std::sort(elements_.begin(), elements_.end());
    elements_.erase(std::unique(elements_.begin(), elements_.end()), elements_.end());
  }

  const std::vector<Word>& elements() const noexcept { return elements_; }
  std::size_t size() const noexcept { return elements_.size(); }
  bool contains(const Word& w) const {
    return std::binary_search(elements_.begin(), elements_.end(), w);
  }

 private:
  std::vector<Word> elements_;
};

inline RelatorSet build_relator_closure(const Presentation& p) {
  std::vector<Word> all;
  for (const auto& r : p.relators) {
    for (auto& w : cyclic_permutations(r)) all.push_back(std::move(w));
    for (auto& w : cyclic_permutations(invert(r))) all.push_back(std::move(w));
  }
  return RelatorSet(std::move(all));
}

// Cyclically reduced form of [t^i a t^-i, t^j a t^-j]; depends only on d = j - i.
inline Word wreath_relator(int d, std::uint32_t a, std::uint32_t t) {
  const Word x = Word::from_reduced({gen(a)});
  const Word td = power(Word::from_reduced({gen(t)}), d);
  return cyclic_reduce(commutator(x, concat_reduce({td, x, invert(td)})));
}

// The law P(R) on S used by insertion moves.
//
// Finite mode is uniform on the closure. The wreath family draws offsets i != j
// with weight theta^{|i|+|j|} (|i|, |j| <= max_offset), forms the cyclically
// reduced commutator, inverts it with probability 1/2, and applies a uniform
// rotation. Both steps preserve P(R) = P(R^{-1}).
class RelatorSampler {
 public:
  static RelatorSampler uniform(RelatorSet set) {
    if (set.size() == 0) throw validation_error("relator set is empty");
    RelatorSampler s;
    s.set_ = std::move(set);
    return s;
  }

  static RelatorSampler wreath_family(double theta, int max_offset, std::uint32_t a,
                                      std::uint32_t t) {
    if (!(theta > 0.0 && theta < 1.0)) throw validation_error("theta must lie in (0,1)");
    if (max_offset < 1) throw validation_error("max offset must be >= 1");
    RelatorSampler s;
    s.family_ = true;
    s.theta_ = theta;
    s.max_offset_ = max_offset;
    s.a_ = a;
    s.t_ = t;
    double acc = 0.0;
    for (int i = -max_offset; i <= max_offset; ++i) {
      acc += std::pow(theta, std::abs(i));
      s.offset_cdf_.push_back(acc);
    }
    for (auto& c : s.offset_cdf_) c /= acc;
    return s;
  }

  static RelatorSampler for_presentation(const Presentation& p, double theta = 0.5,
                                         int max_offset = 64) {
    if (p.family == InfiniteFamily::wreath_zz) {
      return wreath_family(theta, max_offset, *p.generator_index("a"), *p.generator_index("t"));
    }
    return uniform(build_relator_closure(p));
  }

  bool finite() const noexcept { return !family_; }
  const RelatorSet& relators() const noexcept { return set_; }

  Word sample(Rng& rng) const {
    if (!family_) return set_.elements()[rng.below(set_.size())];
    int i, j;
    do {
      i = draw_offset(rng);
      j = draw_offset(rng);
    } while (i == j);
    Word r = wreath_relator(j - i, a_, t_);
    if (rng.bernoulli(0.5)) r = invert(r);
    return rotate(r, rng.below(r.size()));
  }

  // Exact P(R) under this law (0 outside the support).
  double probability(const Word& r) const {
    if (!family_) return set_.contains(r) ? 1.0 / static_cast<double>(set_.size()) : 0.0;
    double total = 0.0;
    double hit = 0.0;
    for (int i = -max_offset_; i <= max_offset_; ++i) {
      for (int j = -max_offset_; j <= max_offset_; ++j) {
        if (i == j) continue;
        total += std::pow(theta_, std::abs(i) + std::abs(j));
      }
    }
    for (int d = -2 * max_offset_; d <= 2 * max_offset_; ++d) {
      if (d == 0) continue;
      const Word c = wreath_relator(d, a_, t_);
      if (c.size() != r.size()) continue;
      double weight = 0.0;
      for (int i = -max_offset_; i <= max_offset_; ++i) {
        const int j = i + d;
        if (j < -max_offset_ || j > max_offset_) continue;
        weight += std::pow(theta_, std::abs(i) + std::abs(j));
      }
      const Word ci = invert(c);
      std::size_t matches = 0;
      for (std::size_t s = 0; s < c.size(); ++s) {
        if (rotate(c, s) == r) ++matches;
        if (rotate(ci, s) == r) ++matches;
      }
      hit += weight / total * 0.5 * static_cast<double>(matches) / static_cast<double>(c.size());
    }
    return hit;
  }

 private:
  int draw_offset(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(offset_cdf_.begin(), offset_cdf_.end(), u);
    const auto k = std::min<std::ptrdiff_t>(it - offset_cdf_.begin(),
                                             static_cast<std::ptrdiff_t>(offset_cdf_.size()) - 1);
    return static_cast<int>(k) - max_offset_;
  }

  RelatorSet set_;
  bool family_ = false;
  double theta_ = 0.5;
  int max_offset_ = 64;
  std::uint32_t a_ = 0;
  std::uint32_t t_ = 1;
  std::vector<double> offset_cdf_;
};

}  // namespace cogrowth
