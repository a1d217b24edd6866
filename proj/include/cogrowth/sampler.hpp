#pragma once

#include <algorithm>
#include <barrier>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "cogrowth/error.hpp"
#include "cogrowth/presentation.hpp"
#include "cogrowth/random.hpp"
#include "cogrowth/word.hpp"

namespace cogrowth {

struct SamplerConfig {
  double alpha = 1.0;
  double beta = 0.1;
  double p_c = 0.5;
  std::uint64_t seed = 1;
  std::size_t iterations_per_block = 1000;
  std::size_t num_blocks = 100;

  void validate() const {
    if (!(p_c > 0.0 && p_c < 1.0)) throw validation_error("p_c must lie in (0,1)");
    if (!(beta > 0.0)) throw validation_error("beta must be positive");
    if (!std::isfinite(alpha)) throw validation_error("alpha must be finite");
    if (iterations_per_block == 0) throw validation_error("iterations per block must be >= 1");
    if (num_blocks == 0) throw validation_error("number of blocks must be >= 1");
  }
};

struct MoveCounters {
  std::uint64_t conj_proposed = 0;
  std::uint64_t conj_accepted = 0;
  std::uint64_t ins_proposed = 0;
  std::uint64_t ins_invalid = 0;
  std::uint64_t ins_accepted = 0;
  // Insertions that were valid but lost the Metropolis draw.
  std::uint64_t ins_rejected = 0;
};

struct ChainState {
  Word current;
  std::uint64_t step_count = 0;
  MoveCounters counters;
};

struct Proposal {
  Word candidate;
  double accept_prob = 1.0;
};

// min{1, ((to+1)/(from+1))^{exponent} * beta^{to-from}}, evaluated in log space.
inline double metropolis_ratio(std::size_t from, std::size_t to, double exponent, double beta) {
  if (from == to) return 1.0;
  const double log_r = exponent * std::log((static_cast<double>(to) + 1.0) /
                                           (static_cast<double>(from) + 1.0)) +
                       (static_cast<double>(to) - static_cast<double>(from)) * std::log(beta);
  return log_r >= 0.0 ? 1.0 : std::exp(log_r);
}

inline double conjugation_acceptance(std::size_t from, std::size_t to, double alpha, double beta) {
  return metropolis_ratio(from, to, 1.0 + alpha, beta);
}

// The 1/(|w|+1) position choice supplies the missing power, hence exponent alpha.
inline double insertion_acceptance(std::size_t from, std::size_t to, double alpha, double beta) {
  return metropolis_ratio(from, to, alpha, beta);
}

inline Proposal propose_conjugation(const Word& w, Letter x, double alpha, double beta) {
  Word c = conjugate_letter(w, x);
  const double p = conjugation_acceptance(w.size(), c.size(), alpha, beta);
  return {std::move(c), p};
}

inline Proposal propose_conjugation(const Word& w, Rng& rng, std::size_t generators, double alpha,
                                    double beta) {
  return propose_conjugation(w, Letter::from_index(rng.below(2 * generators)), alpha, beta);
}

// Left-insertion of r at position m (w = u v with |u| = m).
//
// r first cancels against the end of u. The move is invalid if what remains
// cancels against v, or if the length drops below |w| - |r|. Both conditions
// reduce to one test on the right seam, because a reduced u'|v seam that
// survives a full cancellation of r leaves exactly |w| - |r| letters.
inline std::optional<Word> propose_left_insertion(const Word& w, const Word& r, std::size_t m) {
  if (m > w.size()) throw validation_error("insertion position out of range");
  std::size_t left = 0;
  while (left < r.size() && left < m && w[m - 1 - left].cancels(r[left])) ++left;
  const std::size_t keep_u = m - left;
  if (m < w.size()) {
    if (left < r.size()) {
      if (r.back().cancels(w[m])) return std::nullopt;
    } else if (keep_u > 0 && w[keep_u - 1].cancels(w[m])) {
      return std::nullopt;
    }
  }
  std::vector<Letter> out;
  out.reserve(w.size() + r.size() - 2 * left);
  out.insert(out.end(), w.begin(), w.begin() + static_cast<std::ptrdiff_t>(keep_u));
  out.insert(out.end(), r.begin() + static_cast<std::ptrdiff_t>(left), r.end());
  out.insert(out.end(), w.begin() + static_cast<std::ptrdiff_t>(m), w.end());
  return Word::from_reduced(std::move(out));
}

inline void metropolis_step(ChainState& state, const SamplerConfig& cfg,
                            const RelatorSampler& relators, std::size_t generators, Rng& rng) {
  ++state.step_count;
  auto& cnt = state.counters;
  const Word& w = state.current;
  if (rng.uniform() < cfg.p_c) {
    ++cnt.conj_proposed;
    auto prop = propose_conjugation(w, rng, generators, cfg.alpha, cfg.beta);
    if (prop.accept_prob >= 1.0 || rng.uniform() < prop.accept_prob) {
      ++cnt.conj_accepted;
      state.current = std::move(prop.candidate);
    }
    return;
  }
  ++cnt.ins_proposed;
  const Word r = relators.sample(rng);
  const std::size_t m = rng.below(w.size() + 1);
  auto cand = propose_left_insertion(w, r, m);
  if (!cand) {
    ++cnt.ins_invalid;
    return;
  }
  const double p = insertion_acceptance(w.size(), cand->size(), cfg.alpha, cfg.beta);
  if (p >= 1.0 || rng.uniform() < p) {
    ++cnt.ins_accepted;
    state.current = std::move(*cand);
  } else {
    ++cnt.ins_rejected;
  }
}

// Per-block sums of the ratio-estimator observables
//   f1 = |w| / (|w|+1)^{1+alpha},  f2 = 1 / (|w|+1)^{1+alpha}
// over the non-empty states visited.
struct BlockSums {
  double sum_f1 = 0.0;
  double sum_f2 = 0.0;
  double sum_len = 0.0;
  double sum_len2 = 0.0;
  std::uint64_t count = 0;
  std::uint64_t accept_conj = 0;
  std::uint64_t accept_ins = 0;
  std::uint64_t swaps_accepted = 0;

  friend bool operator==(const BlockSums&, const BlockSums&) = default;
};

struct ObservableSeries {
  double beta = 0.0;
  double alpha = 0.0;
  std::vector<BlockSums> blocks;
  // Steps that sat on the empty word, excluded from the sums above.
  std::uint64_t empty_visits = 0;

  friend bool operator==(const ObservableSeries&, const ObservableSeries&) = default;
};

namespace detail {

class WeightTable {
 public:
  explicit WeightTable(double alpha) : alpha_(alpha) {}
  double f2(std::size_t n) {
    while (table_.size() <= n) {
      table_.push_back(std::exp(-(1.0 + alpha_) * std::log(static_cast<double>(table_.size()) + 1.0)));
    }
    return table_[n];
  }

 private:
  double alpha_;
  std::vector<double> table_;
};

struct Chain {
  ChainState state;
  SamplerConfig cfg;
  Rng rng;
  WeightTable weights;
  ObservableSeries series;

  Chain(const Word& w0, const SamplerConfig& c, std::uint64_t stream)
      : rng(c.seed, stream), weights(c.alpha) {
    state.current = w0;
    cfg = c;
    series.beta = c.beta;
    series.alpha = c.alpha;
    series.blocks.resize(c.num_blocks);
  }

  void record(std::size_t block) {
    const std::size_t n = state.current.size();
    if (n == 0) {
      ++series.empty_visits;
      return;
    }
    auto& b = series.blocks[block];
    const double f2 = weights.f2(n);
    const double len = static_cast<double>(n);
    b.sum_f1 += len * f2;
    b.sum_f2 += f2;
    b.sum_len += len;
    b.sum_len2 += len * len;
    ++b.count;
  }

  void advance(std::size_t steps, std::size_t block, const RelatorSampler& rel,
               std::size_t generators) {
    auto& b = series.blocks[block];
    for (std::size_t s = 0; s < steps; ++s) {
      const auto before = state.counters;
      metropolis_step(state, cfg, rel, generators, rng);
      b.accept_conj += state.counters.conj_accepted - before.conj_accepted;
      b.accept_ins += state.counters.ins_accepted - before.ins_accepted;
      record(block);
    }
  }
};

inline Word initial_word(const Presentation& p, const std::optional<Word>& w0) {
  if (w0) return *w0;
  if (p.relators.empty()) throw validation_error("presentation has no relators to start from");
  return p.relators.front();
}

}  // namespace detail

// Runs num_blocks * iterations_per_block steps from w0 (default: the first relator).
// Deterministic in cfg.seed.
inline ObservableSeries run_chain(const SamplerConfig& cfg, const Presentation& p,
                                  const std::optional<Word>& w0 = std::nullopt,
                                  double theta = 0.5) {
  cfg.validate();
  const auto rel = RelatorSampler::for_presentation(p, theta);
  detail::Chain chain(detail::initial_word(p, w0), cfg, 0);
  for (std::size_t b = 0; b < cfg.num_blocks; ++b) {
    chain.advance(cfg.iterations_per_block, b, rel, p.rank());
  }
  return chain.series;
}

struct TemperingConfig {
  std::vector<double> ladder;
  std::size_t swap_interval = 100;
  // Physical parallelism only; results do not depend on it.
  unsigned threads = 1;

  void validate() const {
    if (ladder.empty()) throw validation_error("ladder is empty");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      if (!(ladder[i] > 0.0)) throw validation_error("ladder values must be positive");
      if (i > 0 && !(ladder[i] > ladder[i - 1])) {
        throw validation_error("ladder must be strictly increasing");
      }
    }
    if (swap_interval == 0) throw validation_error("swap interval must be >= 1");
  }
};

// Replica-exchange acceptance for swapping states of lengths n_lo (at beta_lo)
// and n_hi (at beta_hi): the (|w|+1)^{1+alpha} factors cancel.
inline double swap_acceptance(std::size_t n_lo, std::size_t n_hi, double beta_lo, double beta_hi) {
  const double log_r = (static_cast<double>(n_lo) - static_cast<double>(n_hi)) *
                       std::log(beta_hi / beta_lo);
  return log_r >= 0.0 ? 1.0 : std::exp(log_r);
}

// One chain per ladder rung. Chains advance swap_interval steps, then adjacent
// pairs (i, i+1) are offered a swap in increasing i. Chain i uses random stream i;
// the swap sweep uses stream m. swaps_accepted is booked on the lower rung.
inline std::vector<ObservableSeries> run_tempered(const TemperingConfig& t,
                                                  const SamplerConfig& shared,
                                                  const Presentation& p,
                                                  const std::optional<Word>& w0 = std::nullopt,
                                                  double theta = 0.5) {
  t.validate();
  shared.validate();
  const auto rel = RelatorSampler::for_presentation(p, theta);
  const Word start = detail::initial_word(p, w0);
  const std::size_t m = t.ladder.size();

  std::vector<detail::Chain> chains;
  chains.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    SamplerConfig c = shared;
    c.beta = t.ladder[i];
    chains.emplace_back(start, c, i);
  }
  Rng swap_rng(shared.seed, m);

  const std::size_t ipb = shared.iterations_per_block;
  const std::size_t total = ipb * shared.num_blocks;
  std::size_t done = 0;

  auto sweep = [&] {
    const std::size_t block = (done - 1) / ipb;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      auto& lo = chains[i];
      auto& hi = chains[i + 1];
      const double a = swap_acceptance(lo.state.current.size(), hi.state.current.size(),
                                       t.ladder[i], t.ladder[i + 1]);
      if (a >= 1.0 || swap_rng.uniform() < a) {
        std::swap(lo.state.current, hi.state.current);
        ++lo.series.blocks[block].swaps_accepted;
      }
    }
  };

  // Steps until the next swap sweep or block boundary, whichever comes first.
  auto segment = [&] {
    const std::size_t to_swap = t.swap_interval - done % t.swap_interval;
    const std::size_t to_block = ipb - done % ipb;
    return std::min({to_swap, to_block, total - done});
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(t.threads, static_cast<unsigned>(m)));
  if (workers == 1) {
    while (done < total) {
      const std::size_t len = segment();
      const std::size_t block = done / ipb;
      for (auto& c : chains) c.advance(len, block, rel, p.rank());
      done += len;
      if (done % t.swap_interval == 0 && m > 1) sweep();
    }
  } else {
    std::size_t len = segment();
    std::size_t block = 0;
    auto on_barrier = [&]() noexcept {
      done += len;
      if (done % t.swap_interval == 0 && m > 1) sweep();
      if (done < total) {
        len = segment();
        block = done / ipb;
      }
    };
    std::barrier sync(static_cast<std::ptrdiff_t>(workers), on_barrier);
    auto work = [&](unsigned id) {
      while (done < total) {
        for (std::size_t i = id; i < m; i += workers) chains[i].advance(len, block, rel, p.rank());
        sync.arrive_and_wait();
      }
    };
    std::vector<std::jthread> pool;
    for (unsigned id = 1; id < workers; ++id) pool.emplace_back(work, id);
    work(0);
  }

  std::vector<ObservableSeries> out;
  out.reserve(m);
  for (auto& c : chains) out.push_back(std::move(c.series));
  return out;
}

}  // namespace cogrowth
