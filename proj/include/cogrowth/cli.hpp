#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogrowth/engine.hpp"
#include "cogrowth/error.hpp"
#include "cogrowth/oracle.hpp"
#include "cogrowth/presentation.hpp"
#include "cogrowth/qseries.hpp"
#include "cogrowth/sampler.hpp"
#include "cogrowth/stats.hpp"

// Command implementations behind the cogrowth executable. Each command takes
// a validated option record and writes to caller-supplied streams, so tests can
// drive them without touching the filesystem.
namespace cogrowth::cli {

using nlohmann::ordered_json;

// Shortest decimal form that round-trips a double.
inline std::string format_double(double v) {
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline ordered_json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

// "start:end:count" with gaps shrinking geometrically toward `end` (the last
// gap is a quarter of the first), or an explicit comma-separated list.
inline std::vector<double> parse_ladder(const std::string& spec) {
  std::vector<double> out;
  auto parse_num = [&](const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw validation_error("invalid ladder value '" + s + "'");
    }
    if (pos != s.size()) throw validation_error("invalid ladder value '" + s + "'");
    return v;
  };
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw validation_error("ladder range must be start:end:count");
    const double start = parse_num(parts[0]);
    const double end = parse_num(parts[1]);
    const double cnt = parse_num(parts[2]);
    if (cnt < 1 || cnt != std::floor(cnt)) throw validation_error("ladder count must be a positive integer");
    const auto count = static_cast<std::size_t>(cnt);
    if (count == 1) {
      out.push_back(start);
    } else {
      const std::size_t gaps = count - 1;
      const double ratio = gaps > 1 ? std::pow(0.25, 1.0 / static_cast<double>(gaps - 1)) : 1.0;
      double total = 0.0;
      for (std::size_t i = 0; i < gaps; ++i) total += std::pow(ratio, static_cast<double>(i));
      double acc = 0.0;
      out.push_back(start);
      for (std::size_t i = 0; i + 1 < gaps; ++i) {
        acc += std::pow(ratio, static_cast<double>(i));
        out.push_back(start + (end - start) * acc / total);
      }
      out.push_back(end);
    }
  } else {
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) out.push_back(parse_num(item));
    }
  }
  TemperingConfig t;
  t.ladder = out;
  t.validate();
  return out;
}

struct GroupChoice {
  std::string group;
  std::optional<int> n;
  std::optional<int> m;
  std::string presentation_file;
};

inline Presentation resolve_presentation(const GroupChoice& g) {
  if (!g.presentation_file.empty()) {
    if (!g.group.empty()) throw validation_error("give either --group or --presentation, not both");
    std::ifstream in(g.presentation_file);
    if (!in) throw validation_error("cannot read presentation file '" + g.presentation_file + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    std::vector<std::string> warnings;
    Presentation p = parse_presentation(buf.str(), &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    return p;
  }
  if (g.group.empty()) throw validation_error("one of --group or --presentation is required");
  if (g.group == "bs") {
    if (!g.n || !g.m) throw validation_error("group bs needs --n and --m");
    const std::vector<int> params{*g.n, *g.m};
    return builtin_presentation("bs", params);
  }
  if (g.n || g.m) throw validation_error("--n/--m apply only to group bs");
  return builtin_presentation(g.group);
}

inline ordered_json group_json(const GroupChoice& g, const Presentation& p) {
  ordered_json j;
  if (!g.presentation_file.empty()) {
    j["presentation_file"] = g.presentation_file;
  } else {
    j["group"] = g.group;
    if (g.n) j["n"] = *g.n;
    if (g.m) j["m"] = *g.m;
  }
  j["presentation"] = p.render();
  j["generators"] = p.rank();
  return j;
}

// ---------------------------------------------------------------- series

struct SeriesOptions {
  std::string group = "bs";
  int n = 1;
  int m = 1;
  std::size_t terms = 20;
  std::optional<std::uint64_t> trim;
  std::optional<double> correction_exponent;

  void validate() const {
    if (group != "bs") throw validation_error("series supports --group bs only");
    if (n < 1 || m < 1) throw validation_error("BS(N,M) needs N, M >= 1");
    if (terms < 1) throw validation_error("--terms must be >= 1");
    if (trim && *trim == 0) throw validation_error("--trim must be positive");
  }
  // Z^2 has the known n^{-1} correction; the other groups use the conjectured n^{-2}.
  double correction() const {
    return correction_exponent.value_or(n == 1 && m == 1 ? -1.0 : -2.0);
  }
  ordered_json config() const {
    ordered_json j;
    j["command"] = "series";
    j["group"] = group;
    j["n"] = n;
    j["m"] = m;
    j["terms"] = terms;
    j["trim"] = trim ? ordered_json(*trim) : ordered_json(nullptr);
    j["correction_exponent"] = correction();
    j["kind"] = "unreduced";
    return j;
  }
};

struct SeriesResult {
  Coefficients coefficients;
  ordered_json growth;
};

inline SeriesResult cmd_series(const SeriesOptions& opt, std::ostream& coeff_out, std::ostream& growth_out,
                               std::ostream& log = std::cerr) {
  opt.validate();
  BSSpec spec{opt.n, opt.m, opt.terms, opt.trim};
  const auto series = iterate_bs_system(spec, [&](std::size_t k) {
    if (k > 0 && k % 50 == 0) log << "series: order " << k << " of " << opt.terms << '\n';
  });
  SeriesResult res;
  res.coefficients = constant_term(series.G);
  write_coefficients(coeff_out, res.coefficients, opt.config().dump());

  ordered_json g;
  g["N"] = opt.n;
  g["M"] = opt.m;
  g["terms"] = opt.terms;
  g["correction_exponent"] = opt.correction();
  try {
    const auto est = growth_rate_estimate(res.coefficients, opt.correction(), 2);
    g["mu"] = json_number(est.mu);
    g["lambda"] = json_number(est.lambda);
    g["amplitude"] = est.amplitude ? json_number(*est.amplitude) : ordered_json(nullptr);
  } catch (const validation_error& e) {
    g["mu"] = nullptr;
    g["lambda"] = nullptr;
    g["amplitude"] = nullptr;
    g["error"] = e.what();
  }
  growth_out << g.dump(2) << '\n';
  res.growth = g;
  return res;
}

// ---------------------------------------------------------------- sample

struct SampleOptions {
  GroupChoice group;
  double alpha = 1.0;
  std::string ladder = "0.05:0.30:20";
  double p_c = 0.5;
  std::size_t iters = 100000;
  std::size_t blocks = 100;
  std::uint64_t seed = 1;
  double theta = 0.5;
  std::size_t swap_interval = 100;
  unsigned threads = 1;

  ordered_json config(const Presentation& p, const std::vector<double>& ladder_values) const {
    ordered_json j;
    j["command"] = "sample";
    j.update(group_json(group, p));
    j["alpha"] = alpha;
    j["ladder"] = ladder;
    j["betas"] = ladder_values;
    j["p_c"] = p_c;
    j["iters"] = iters;
    j["blocks"] = blocks;
    j["seed"] = seed;
    j["theta"] = theta;
    j["swap_interval"] = swap_interval;
    return j;
  }
};

inline std::vector<ObservableSeries> cmd_sample(const SampleOptions& opt, std::ostream& out,
                                                std::ostream& log = std::cerr) {
  const Presentation p = resolve_presentation(opt.group);
  const auto betas = parse_ladder(opt.ladder);
  if (!(opt.theta > 0.0 && opt.theta < 1.0)) throw validation_error("--theta must lie in (0,1)");
  SamplerConfig cfg;
  cfg.alpha = opt.alpha;
  cfg.beta = betas.front();
  cfg.p_c = opt.p_c;
  cfg.seed = opt.seed;
  cfg.iterations_per_block = opt.iters;
  cfg.num_blocks = opt.blocks;
  cfg.validate();
  TemperingConfig t;
  t.ladder = betas;
  t.swap_interval = opt.swap_interval;
  t.threads = opt.threads;
  t.validate();

  log << "sample: " << p.render() << ", " << betas.size() << " rungs, "
      << opt.iters * opt.blocks << " steps per rung\n";
  const auto series = run_tempered(t, cfg, p, std::nullopt, opt.theta);

  out << "# " << opt.config(p, betas).dump() << '\n';
  out << "beta,alpha,block,sum_f1,sum_f2,sum_len,sum_len2,count,accept_conj,accept_ins,swaps_accepted\n";
  for (const auto& s : series) {
    for (std::size_t b = 0; b < s.blocks.size(); ++b) {
      const auto& x = s.blocks[b];
      out << format_double(s.beta) << ',' << format_double(s.alpha) << ',' << b << ','
          << format_double(x.sum_f1) << ',' << format_double(x.sum_f2) << ','
          << format_double(x.sum_len) << ',' << format_double(x.sum_len2) << ',' << x.count << ','
          << x.accept_conj << ',' << x.accept_ins << ',' << x.swaps_accepted << '\n';
    }
  }
  return series;
}

struct SampleTable {
  ordered_json config;  // null when the file has no header
  std::vector<ObservableSeries> series;  // grouped by (alpha, beta), in file order
};

inline SampleTable read_samples(std::istream& in) {
  SampleTable t;
  std::string line;
  bool have_columns = false;
  std::map<std::pair<double, double>, std::size_t> index;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (t.config.is_null()) {
        try {
          t.config = ordered_json::parse(line.substr(1));
        } catch (const std::exception&) {
          // Non-JSON comments are allowed.
        }
      }
      continue;
    }
    if (!have_columns) {
      if (line.rfind("beta,alpha,block", 0) != 0) throw validation_error("samples CSV: missing column header");
      have_columns = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 11) throw validation_error("samples CSV: line " + std::to_string(lineno) + " has " +
                                               std::to_string(f.size()) + " fields");
    try {
      const double beta = std::stod(f[0]);
      const double alpha = std::stod(f[1]);
      auto [it, fresh] = index.try_emplace({alpha, beta}, t.series.size());
      if (fresh) {
        ObservableSeries s;
        s.beta = beta;
        s.alpha = alpha;
        t.series.push_back(s);
      }
      BlockSums b;
      b.sum_f1 = std::stod(f[3]);
      b.sum_f2 = std::stod(f[4]);
      b.sum_len = std::stod(f[5]);
      b.sum_len2 = std::stod(f[6]);
      b.count = std::stoull(f[7]);
      b.accept_conj = std::stoull(f[8]);
      b.accept_ins = std::stoull(f[9]);
      b.swaps_accepted = std::stoull(f[10]);
      t.series[it->second].blocks.push_back(b);
    } catch (const std::logic_error&) {
      throw validation_error("samples CSV: malformed number on line " + std::to_string(lineno));
    }
  }
  if (!have_columns) throw validation_error("samples CSV: no data");
  return t;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOptions {
  int degree = 1;
  std::optional<std::size_t> generators;  // default: from the samples header
  std::optional<double> fit_min_beta;
  std::optional<double> fit_max_beta;
  // Weight each point by 1/sigma^2 of its reciprocal stderr. With B blocks the
  // relative error of a stderr is about 1/sqrt(2(B-1)), so sigma is proportional to y.
  bool weighted = false;
};

struct RungSummary {
  double beta = 0.0;
  double alpha = 0.0;
  BlockEstimate estimate;
  double recip_stderr = 0.0;
};

struct AnalyzeResult {
  std::vector<RungSummary> rungs;
  AnalysisResult fit;
  AmenabilityReport report;
  std::vector<std::pair<double, AnalysisResult>> per_alpha;
  ordered_json summary;
};

inline double point_weight(const RungSummary& r) {
  const double b = static_cast<double>(r.estimate.num_blocks);
  return b > 1.0 ? 2.0 * (b - 1.0) / (r.recip_stderr * r.recip_stderr) : 1.0;
}

// Points used for the intercept fit: by default the rungs from the peak of the
// reciprocal stderr up to the largest beta, where it should be decreasing.
inline std::vector<FitPoint> select_fit_points(const std::vector<RungSummary>& rungs,
                                               const AnalyzeOptions& opt) {
  std::vector<FitPoint> pts;
  if (opt.fit_min_beta || opt.fit_max_beta) {
    for (const auto& r : rungs) {
      if (opt.fit_min_beta && r.beta < *opt.fit_min_beta) continue;
      if (opt.fit_max_beta && r.beta > *opt.fit_max_beta) continue;
      pts.push_back({r.beta, r.recip_stderr, point_weight(r)});
    }
    return pts;
  }
  // Rungs with zero stderr (the chain never left one length) carry no
  // information about the error growth and are skipped here.
  std::size_t peak = 0;
  while (peak + 1 < rungs.size() && !std::isfinite(rungs[peak].recip_stderr)) ++peak;
  for (std::size_t i = peak + 1; i < rungs.size(); ++i) {
    if (std::isfinite(rungs[i].recip_stderr) && rungs[i].recip_stderr > rungs[peak].recip_stderr) peak = i;
  }
  const std::size_t need = static_cast<std::size_t>(opt.degree) + 2;
  if (rungs.size() - peak < need) peak = rungs.size() >= need ? rungs.size() - need : 0;
  for (std::size_t i = peak; i < rungs.size(); ++i) {
    pts.push_back({rungs[i].beta, rungs[i].recip_stderr, point_weight(rungs[i])});
  }
  return pts;
}

inline AnalyzeResult cmd_analyze(std::istream& samples, const AnalyzeOptions& opt, std::ostream& csv_out,
                                 std::ostream& json_out) {
  if (opt.degree != 1 && opt.degree != 2) throw validation_error("--degree must be 1 or 2");
  const SampleTable table = read_samples(samples);
  std::size_t k = 0;
  if (opt.generators) {
    k = *opt.generators;
  } else if (table.config.is_object() && table.config.contains("generators")) {
    k = table.config["generators"].get<std::size_t>();
  } else {
    throw validation_error("generator count unknown: pass --k");
  }

  AnalyzeResult res;
  std::map<double, std::vector<RungSummary>> by_alpha;
  for (const auto& s : table.series) {
    RungSummary r;
    r.beta = s.beta;
    r.alpha = s.alpha;
    r.estimate = ratio_estimator(s);
    r.recip_stderr = r.estimate.stderr > 0.0 ? 1.0 / r.estimate.stderr : std::numeric_limits<double>::infinity();
    res.rungs.push_back(r);
    by_alpha[s.alpha].push_back(r);
  }

  // An alpha column is appended only when the samples mix several alphas.
  const bool multi = by_alpha.size() > 1;
  csv_out << "beta,mean_len,stderr,recip_stderr" << (multi ? ",alpha" : "") << '\n';
  for (const auto& r : res.rungs) {
    csv_out << format_double(r.beta) << ',' << format_double(r.estimate.mean) << ','
            << format_double(r.estimate.stderr) << ',' << format_double(r.recip_stderr);
    if (multi) csv_out << ',' << format_double(r.alpha);
    csv_out << '\n';
  }

  ordered_json fits = ordered_json::array();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (auto& [alpha, rungs] : by_alpha) {
    std::sort(rungs.begin(), rungs.end(), [](const auto& a, const auto& b) { return a.beta < b.beta; });
    if (rungs.size() < static_cast<std::size_t>(opt.degree) + 2) {
      throw validation_error("need at least " + std::to_string(opt.degree + 2) + " beta rungs for a degree-" +
                             std::to_string(opt.degree) + " fit");
    }
    const auto pts = select_fit_points(rungs, opt);
    for (const auto& pt : pts) {
      if (!std::isfinite(pt.value)) {
        throw validation_error("rung beta=" + format_double(pt.beta) + " has zero stderr; cannot fit");
      }
    }
    AnalysisResult fit = intercept_extrapolate(pts, opt.degree, opt.weighted);
    fit.generators = k;
    fit.threshold = 1.0 / (2.0 * static_cast<double>(k) - 1.0);
    lo = std::min(lo, fit.beta_c_estimate);
    hi = std::max(hi, fit.beta_c_estimate);
    ordered_json f;
    f["alpha"] = alpha;
    f["beta_c"] = json_number(fit.beta_c_estimate);
    f["uncertainty"] = json_number(fit.beta_c_uncertainty);
    f["residual"] = json_number(fit.residual);
    f["fit_points"] = pts.size();
    f["fit_beta_min"] = pts.front().beta;
    fits.push_back(f);
    res.per_alpha.emplace_back(alpha, fit);
  }

  // Across several alphas the reported beta_c is the mean, and the spread is
  // reported alongside rather than folded into any error bar.
  AnalysisResult combined = res.per_alpha.front().second;
  if (res.per_alpha.size() > 1) {
    double s = 0.0;
    for (const auto& [a, f] : res.per_alpha) s += f.beta_c_estimate;
    combined.beta_c_estimate = s / static_cast<double>(res.per_alpha.size());
  }
  res.fit = combined;
  res.report = amenability_report(combined, k);

  ordered_json j;
  j["beta_c"] = json_number(combined.beta_c_estimate);
  j["degree"] = opt.degree;
  j["weighted"] = opt.weighted;
  j["residual"] = json_number(combined.residual);
  j["threshold"] = res.report.threshold;
  j["verdict"] = res.report.verdict;
  j["uncertainty"] = json_number(combined.beta_c_uncertainty);
  j["generators"] = k;
  j["spread"] = json_number(hi - lo);
  j["fits"] = fits;
  json_out << j.dump(2) << '\n';
  res.summary = j;
  return res;
}

// ---------------------------------------------------------------- oracle

struct OracleCliOptions {
  GroupChoice group;
  std::size_t max_len = 10;
  bool reduced = false;
  double memory_gb = 8.0;
};

inline Coefficients cmd_oracle(const OracleCliOptions& opt, std::ostream& out) {
  const Presentation p = resolve_presentation(opt.group);
  const GroupEvaluator ev = evaluator_for(p);
  if (!(opt.memory_gb > 0.0)) throw validation_error("--memory-gb must be positive");
  OracleOptions o;
  o.reduced = opt.reduced;
  o.memory_budget_bytes = static_cast<std::size_t>(opt.memory_gb * 1024.0 * 1024.0 * 1024.0);
  const Coefficients c = count_trivial_words(ev, opt.max_len, o);
  ordered_json j;
  j["command"] = "oracle";
  j.update(group_json(opt.group, p));
  j["max_len"] = opt.max_len;
  j["kind"] = opt.reduced ? "reduced" : "unreduced";
  write_coefficients(out, c, j.dump());
  return c;
}

// ---------------------------------------------------------------- exact

struct ExactOptions {
  std::string family;
  std::size_t terms = 12;
};

inline Coefficients cmd_exact(const ExactOptions& opt, std::ostream& out) {
  Coefficients c;
  std::string kind = "reduced";
  if (opt.family == "kouksov1") {
    c = kouksov_series(1, opt.terms);
  } else if (opt.family == "kouksov2") {
    c = kouksov_series(2, opt.terms);
  } else if (opt.family == "kouksov3") {
    c = kouksov_series(3, opt.terms);
  } else if (opt.family == "free2") {
    c = free_group_series(2, opt.terms);
    kind = "unreduced";
  } else if (opt.family == "bs11_reduced") {
    c = reduced_from_all_words(constant_term(iterate_bs_system({1, 1, opt.terms, std::nullopt}).G), 2);
  } else {
    throw validation_error("unknown family '" + opt.family +
                           "' (expected kouksov1, kouksov2, kouksov3, free2, bs11_reduced)");
  }
  ordered_json j;
  j["command"] = "exact";
  j["family"] = opt.family;
  j["terms"] = opt.terms;
  j["kind"] = kind;
  write_coefficients(out, c, j.dump());
  return c;
}

}  // namespace cogrowth::cli
