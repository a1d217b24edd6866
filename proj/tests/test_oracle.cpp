#include <gtest/gtest.h>

#include <set>

#include "cogrowth/engine.hpp"
#include "cogrowth/oracle.hpp"

using namespace cogrowth;

namespace {

const Letter a = gen(0), A = inv(0), b = gen(1), B = inv(1);

Word random_word(Rng& rng, std::size_t rank, std::size_t max_len) {
  std::vector<Letter> raw;
  const auto len = rng.below(max_len + 1);
  for (std::size_t i = 0; i < len; ++i) raw.push_back(Letter::from_index(rng.below(2 * rank)));
  return free_reduce(raw);
}

BSNormalForm fold(const Word& w, std::int64_t n, std::int64_t m) {
  BSNormalForm nf;
  for (const auto& l : w) nf = bs_nf_mul(nf, l, n, m);
  return nf;
}

}  // namespace

TEST(NormalForm, Examples) {
  const auto x = bs_nf_mul({}, a, 2, 2);
  EXPECT_TRUE(x.prefix.empty());
  EXPECT_EQ(x.a_exponent, 1);

  BSNormalForm k2;
  k2.a_exponent = 2;
  const auto y = bs_nf_mul(k2, b, 2, 2);
  ASSERT_EQ(y.prefix.size(), 1u);
  EXPECT_EQ(y.prefix[0].i, 0u);
  EXPECT_EQ(y.prefix[0].eps, 1);
  EXPECT_EQ(y.a_exponent, 2);

  BSNormalForm k1;
  k1.a_exponent = 1;
  const auto z = bs_nf_mul(k1, b, 2, 2);
  ASSERT_EQ(z.prefix.size(), 1u);
  EXPECT_EQ(z.prefix[0].i, 1u);
  EXPECT_EQ(z.a_exponent, 0);

  // a^N b = b a^M in BS(2,3).
  EXPECT_EQ(fold(Word::from_reduced({a, a, b}), 2, 3), fold(Word::from_reduced({b, a, a, a}), 2, 3));
  // Negative exponents use floor division: a^-1 b = a b a^-3 in BS(2,3).
  const auto neg = fold(Word::from_reduced({A, b}), 2, 3);
  ASSERT_EQ(neg.prefix.size(), 1u);
  EXPECT_EQ(neg.prefix[0].i, 1u);
  EXPECT_EQ(neg.a_exponent, -3);
}

TEST(NormalForm, WordTimesInverseIsIdentity) {
  Rng rng(1);
  for (auto [n, m] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 3}, {3, 2}, {3, 5}}) {
    for (int trial = 0; trial < 20000; ++trial) {
      const Word w = random_word(rng, 2, 30);
      EXPECT_EQ(fold(concat_reduce(w, invert(w)), n, m), BSNormalForm{});
      // Folding without free reduction gives the same element.
      BSNormalForm nf;
      for (const auto& l : w) nf = bs_nf_mul(nf, l, n, m);
      for (auto it = w.end(); it != w.begin();) nf = bs_nf_mul(nf, (--it)->inverse(), n, m);
      ASSERT_EQ(nf, BSNormalForm{});
    }
  }
}

TEST(NormalForm, BS11AgreesWithZ2) {
  Rng rng(2);
  const BSEvaluator bs(1, 1);
  const Z2Evaluator z2;
  for (int trial = 0; trial < 100000; ++trial) {
    const Word w = random_word(rng, 2, 30);
    const Word v = random_word(rng, 2, 30);
    auto ew = z2.identity();
    auto ev = z2.identity();
    for (const auto& l : w) ew = z2.multiply(ew, l);
    for (const auto& l : v) ev = z2.multiply(ev, l);
    const bool same_z2 = ew == ev;
    const bool same_bs = bs.key(fold(w, 1, 1)) == bs.key(fold(v, 1, 1));
    ASSERT_EQ(same_z2, same_bs);
    if (trial % 4 == 0) {
      // Equal elements: compare w against a shuffled word with the same letter counts.
      std::vector<Letter> letters(w.begin(), w.end());
      std::reverse(letters.begin(), letters.end());
      const Word r = free_reduce(letters);
      ASSERT_EQ(bs.key(fold(w, 1, 1)), bs.key(fold(r, 1, 1)));
    }
  }
}

TEST(Evaluators, RelatorsAreTrivial) {
  std::vector<Presentation> ps;
  for (const char* name : {"z2", "kouksov1", "kouksov2", "kouksov3", "wreath_zz"}) ps.push_back(builtin_presentation(name));
  for (auto [n, m] : std::vector<std::pair<int, int>>{{1, 1}, {2, 3}, {3, 3}, {1, 4}}) {
    ps.push_back(builtin_presentation("bs", std::vector<int>{n, m}));
  }
  for (const auto& p : ps) {
    const auto ev = evaluator_for(p);
    for (const auto& r : p.relators) {
      EXPECT_TRUE(is_trivial(ev, r)) << p.render();
      for (const auto& c : cyclic_permutations(cyclic_reduce(r))) EXPECT_TRUE(is_trivial(ev, c));
      EXPECT_TRUE(is_trivial(ev, invert(r)));
    }
  }
  const auto wreath = evaluator_for(builtin_presentation("wreath_zz"));
  for (int d = 1; d <= 6; ++d) EXPECT_TRUE(is_trivial(wreath, wreath_relator(d, 0, 1))) << d;
  EXPECT_FALSE(is_trivial(wreath, Word::from_reduced({a})));
  const auto free = evaluator_for(parse_presentation("<x,y | >"));
  EXPECT_TRUE(is_trivial(free, Word{}));
  EXPECT_FALSE(is_trivial(free, Word::from_reduced({a, b, A, B})));
}

TEST(Evaluators, UnsupportedGroups) {
  for (const char* name : {"thompson1", "basilica_a"}) {
    try {
      evaluator_for(builtin_presentation(name));
      FAIL() << name;
    } catch (const unsupported_group& e) {
      EXPECT_EQ(std::string(e.what()).rfind("unsupported", 0), 0u);
    }
  }
}

TEST(Evaluators, CyclicProductValidation) {
  EXPECT_THROW(CyclicFreeProductEvaluator({2, 1}), validation_error);
  EXPECT_THROW(BSEvaluator(0, 2), validation_error);
}

TEST(Counts, Examples) {
  const auto free = count_trivial_words(FreeGroupEvaluator(2), 8, true);
  EXPECT_EQ(free[0], 1);
  for (std::size_t n = 1; n <= 8; ++n) EXPECT_EQ(free[n], 0);
  EXPECT_EQ(count_trivial_words(Z2Evaluator{}, 4, true)[4], 8);
  EXPECT_EQ(count_trivial_words(BSEvaluator(2, 2), 6, false), (Coefficients{1, 0, 4, 0, 28, 0, 244}));
  EXPECT_EQ(count_trivial_words(Z2Evaluator{}, 0, false), (Coefficients{1}));
}

TEST(Counts, EngineAgreement) {
  for (auto [n, m] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 2}, {2, 3}, {3, 3}}) {
    const auto oracle = count_trivial_words(BSEvaluator(n, m), 12, false);
    EXPECT_EQ(oracle, constant_term(iterate_bs_system({n, m, 12, std::nullopt}).G)) << n << "," << m;
  }
}

TEST(Counts, ReducedFromAllWordsZ2) {
  const auto all = count_trivial_words(Z2Evaluator{}, 12, false);
  EXPECT_EQ(reduced_from_all_words(all, 2), count_trivial_words(Z2Evaluator{}, 12, true));
}

TEST(Counts, BudgetReportsLayer) {
  OracleOptions opt;
  opt.memory_budget_bytes = 200000;
  try {
    count_trivial_words(FreeGroupEvaluator(2), 12, opt);
    FAIL();
  } catch (const budget_exceeded& e) {
    EXPECT_GT(e.layer_reached(), 0u);
    EXPECT_LT(e.layer_reached(), 12u);
  }
}

TEST(Enumerate, Examples) {
  const auto z2 = enumerate_trivial_words(Z2Evaluator{}, 4);
  std::size_t four = 0;
  for (const auto& w : z2) {
    if (w.size() == 4) {
      ++four;
      EXPECT_TRUE(is_cyclically_reduced(w));
    }
  }
  EXPECT_EQ(four, 8u);

  const auto k1 = enumerate_trivial_words(CyclicFreeProductEvaluator({2, 3}), 2);
  std::set<Word> two;
  for (const auto& w : k1) {
    if (w.size() == 2) two.insert(w);
  }
  EXPECT_EQ(two, (std::set<Word>{Word::from_reduced({a, a}), Word::from_reduced({A, A})}));

  for (const auto& ev : {GroupEvaluator(Z2Evaluator{}), GroupEvaluator(WreathEvaluator{})}) {
    const auto zero = enumerate_trivial_words(ev, 0);
    ASSERT_EQ(zero.size(), 1u);
    EXPECT_TRUE(zero[0].empty());
  }
}

TEST(Enumerate, SizesMatchCounts) {
  for (const auto& ev : {GroupEvaluator(Z2Evaluator{}), GroupEvaluator(CyclicFreeProductEvaluator({2, 2, 2})),
                         GroupEvaluator(BSEvaluator(2, 3)), GroupEvaluator(WreathEvaluator{})}) {
    const auto words = enumerate_trivial_words(ev, 10);
    const auto counts = count_trivial_words(ev, 10, true);
    std::vector<mpz_class> by_len(11, 0);
    for (const auto& w : words) {
      by_len[w.size()] += 1;
      EXPECT_TRUE(is_trivial(ev, w));
    }
    EXPECT_EQ(by_len, counts);
    EXPECT_TRUE(std::is_sorted(words.begin(), words.end()));
    EXPECT_EQ(std::set<Word>(words.begin(), words.end()).size(), words.size());
  }
}
