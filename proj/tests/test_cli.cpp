#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "cogrowth/cli.hpp"

using namespace cogrowth;
using cogrowth::cli::ordered_json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(COGROWTH_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

Coefficients parse_coefficients(const std::string& text) {
  std::istringstream is(text);
  return read_coefficients(is).coefficients;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cogrowth_test_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(Ladder, RangeAndList) {
  const auto l = cli::parse_ladder("0.05:0.30:20");
  ASSERT_EQ(l.size(), 20u);
  EXPECT_DOUBLE_EQ(l.front(), 0.05);
  EXPECT_DOUBLE_EQ(l.back(), 0.30);
  const double first_gap = l[1] - l[0];
  const double last_gap = l[19] - l[18];
  EXPECT_NEAR(last_gap / first_gap, 0.25, 1e-12);
  for (std::size_t i = 2; i < l.size(); ++i) EXPECT_LT(l[i] - l[i - 1], l[i - 1] - l[i - 2]);
  EXPECT_EQ(cli::parse_ladder("0.1,0.2,0.25"), (std::vector<double>{0.1, 0.2, 0.25}));
  EXPECT_EQ(cli::parse_ladder("0.2:0.3:1"), (std::vector<double>{0.2}));
  EXPECT_EQ(cli::parse_ladder("0.1:0.3:2"), (std::vector<double>{0.1, 0.3}));
  for (const char* bad : {"0.3:0.1:5", "0.1:0.2", "0.1:0.2:0", "0.1:0.2:2.5", "x", "0.2,0.1", ""}) {
    EXPECT_THROW(cli::parse_ladder(bad), validation_error) << bad;
  }
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 3.792765039, 1e-300, 12345.678}) {
    EXPECT_EQ(std::stod(cli::format_double(v)), v);
  }
  EXPECT_EQ(cli::format_double(0.5), "0.5");
}

TEST(Series, Z2Coefficients) {
  cli::SeriesOptions opt;
  opt.n = 1;
  opt.m = 1;
  opt.terms = 20;
  std::ostringstream coeffs, growth, log;
  const auto res = cli::cmd_series(opt, coeffs, growth, log);
  const auto c = parse_coefficients(coeffs.str());
  ASSERT_EQ(c.size(), 21u);
  EXPECT_EQ(c[2], 4);
  EXPECT_EQ(c[4], 36);
  EXPECT_EQ(c[20], mpz_class("34134779536"));
  const auto header = ordered_json::parse(coeffs.str().substr(2, coeffs.str().find('\n') - 2));
  EXPECT_EQ(header["n"], 1);
  EXPECT_EQ(header["terms"], 20);
  const auto g = ordered_json::parse(growth.str());
  for (const char* key : {"N", "M", "terms", "correction_exponent", "mu", "lambda", "amplitude"}) {
    EXPECT_TRUE(g.contains(key)) << key;
  }
  EXPECT_EQ(g["correction_exponent"], -1.0);
}

TEST(Series, GrowthJsonOnLongerRun) {
  cli::SeriesOptions opt;
  opt.n = 2;
  opt.m = 2;
  opt.terms = 80;
  std::ostringstream coeffs, growth, log;
  const auto res = cli::cmd_series(opt, coeffs, growth, log);
  ASSERT_TRUE(res.growth["mu"].is_number());
  EXPECT_NEAR(res.growth["mu"].get<double>(), 3.7928, 0.02);
  EXPECT_NEAR(res.growth["lambda"].get<double>(), mu_to_lambda(res.growth["mu"].get<double>(), 2), 1e-12);
}

TEST(Series, TrimmedRunAndValidation) {
  cli::SeriesOptions opt;
  opt.n = 2;
  opt.m = 3;
  opt.terms = 30;
  opt.trim = 4096;
  std::ostringstream coeffs, growth, log;
  const auto res = cli::cmd_series(opt, coeffs, growth, log);
  EXPECT_EQ(res.coefficients.size(), 31u);
  EXPECT_NE(coeffs.str().find("\"trim\":4096"), std::string::npos);
  opt.n = 0;
  EXPECT_THROW(cli::cmd_series(opt, coeffs, growth, log), validation_error);
}

TEST(Sample, DeterministicCsvWithConfigHeader) {
  cli::SampleOptions opt;
  opt.group.group = "z2";
  opt.ladder = "0.05:0.32:5";
  opt.iters = 500;
  opt.blocks = 6;
  opt.seed = 7;
  std::ostringstream a, b, log;
  cli::cmd_sample(opt, a, log);
  cli::cmd_sample(opt, b, log);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream lines(a.str());
  std::string header, columns, first;
  std::getline(lines, header);
  std::getline(lines, columns);
  std::getline(lines, first);
  ASSERT_EQ(header.rfind("# ", 0), 0u);
  const auto cfg = ordered_json::parse(header.substr(2));
  EXPECT_EQ(cfg["seed"], 7);
  EXPECT_EQ(cfg["generators"], 2);
  EXPECT_EQ(columns, "beta,alpha,block,sum_f1,sum_f2,sum_len,sum_len2,count,accept_conj,accept_ins,swaps_accepted");
  std::istringstream again(a.str());
  const auto table = cli::read_samples(again);
  ASSERT_EQ(table.series.size(), 5u);
  for (const auto& s : table.series) EXPECT_EQ(s.blocks.size(), 6u);
}

TEST(Sample, HeaderReproducesRun) {
  cli::SampleOptions opt;
  opt.group.group = "bs";
  opt.group.n = 2;
  opt.group.m = 3;
  opt.ladder = "0.1,0.2";
  opt.iters = 300;
  opt.blocks = 4;
  opt.seed = 11;
  std::ostringstream a, log;
  cli::cmd_sample(opt, a, log);
  std::istringstream in(a.str());
  const auto cfg = cli::read_samples(in).config;
  cli::SampleOptions again;
  again.group.group = cfg["group"].get<std::string>();
  again.group.n = cfg["n"].get<int>();
  again.group.m = cfg["m"].get<int>();
  again.alpha = cfg["alpha"].get<double>();
  again.ladder = cfg["ladder"].get<std::string>();
  again.p_c = cfg["p_c"].get<double>();
  again.iters = cfg["iters"].get<std::size_t>();
  again.blocks = cfg["blocks"].get<std::size_t>();
  again.seed = cfg["seed"].get<std::uint64_t>();
  again.theta = cfg["theta"].get<double>();
  again.swap_interval = cfg["swap_interval"].get<std::size_t>();
  std::ostringstream b;
  cli::cmd_sample(again, b, log);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Sample, ThompsonAndWreathRun) {
  for (const char* g : {"thompson1", "thompson2", "thompson3", "wreath_zz", "basilica_a"}) {
    cli::SampleOptions opt;
    opt.group.group = g;
    opt.alpha = 2.0;
    opt.ladder = "0.1,0.2";
    opt.iters = 200;
    opt.blocks = 3;
    std::ostringstream out, log;
    EXPECT_NO_THROW(cli::cmd_sample(opt, out, log)) << g;
  }
}

TEST(Sample, Errors) {
  cli::SampleOptions opt;
  opt.group.group = "z2";
  opt.ladder = "0.3,0.1";
  std::ostringstream out, log;
  EXPECT_THROW(cli::cmd_sample(opt, out, log), validation_error);
  opt.ladder = "0.1";
  opt.group.presentation_file = "/nonexistent/file.txt";
  opt.group.group.clear();
  EXPECT_THROW(cli::cmd_sample(opt, out, log), validation_error);
  opt.group.presentation_file.clear();
  EXPECT_THROW(cli::cmd_sample(opt, out, log), validation_error);
}

TEST(Sample, PresentationFile) {
  const auto path = temp_path("pres.txt");
  {
    std::ofstream f(path);
    f << "<x, y | x y x^-1 y^-1>\n";
  }
  cli::SampleOptions opt;
  opt.group.presentation_file = path.string();
  opt.ladder = "0.1,0.2";
  opt.iters = 100;
  opt.blocks = 2;
  std::ostringstream out, log;
  EXPECT_NO_THROW(cli::cmd_sample(opt, out, log));
  std::filesystem::remove(path);
}

namespace {

// Synthetic samples CSV whose per-rung reciprocal stderr lies on y = 50 (0.4 - beta).
std::string synthetic_samples(const std::vector<double>& betas, const std::vector<double>& alphas) {
  std::ostringstream os;
  os << "# {\"generators\":2}\n";
  os << "beta,alpha,block,sum_f1,sum_f2,sum_len,sum_len2,count,accept_conj,accept_ins,swaps_accepted\n";
  for (double alpha : alphas) {
    for (double beta : betas) {
      // Two blocks with means mu +- d give a jackknife stderr of exactly d.
      const double target = 1.0 / (50.0 * (0.4 - beta));
      const double mean = 4.0 + 10.0 * beta;
      for (int blk = 0; blk < 2; ++blk) {
        const double m = blk == 0 ? mean - target : mean + target;
        os << cli::format_double(beta) << ',' << cli::format_double(alpha) << ',' << blk << ','
           << cli::format_double(m) << ",1,0,0,1,0,0,0\n";
      }
    }
  }
  return os.str();
}

}  // namespace

TEST(Analyze, SyntheticLineGivesExactIntercept) {
  std::istringstream in(synthetic_samples({0.1, 0.15, 0.2, 0.25, 0.3}, {1.0}));
  std::ostringstream csv, json;
  cli::AnalyzeOptions opt;
  const auto res = cli::cmd_analyze(in, opt, csv, json);
  EXPECT_NEAR(res.fit.beta_c_estimate, 0.4, 1e-9);
  const auto j = ordered_json::parse(json.str());
  for (const char* key : {"beta_c", "degree", "residual", "threshold", "verdict"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_NE(j["verdict"].get<std::string>().find("not amenable"), std::string::npos);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "beta,mean_len,stderr,recip_stderr");
}

TEST(Analyze, MultipleAlphasReportSpread) {
  std::istringstream in(synthetic_samples({0.1, 0.15, 0.2, 0.25, 0.3}, {0.0, 1.0}));
  std::ostringstream csv, json;
  const auto res = cli::cmd_analyze(in, {}, csv, json);
  EXPECT_EQ(res.per_alpha.size(), 2u);
  const auto j = ordered_json::parse(json.str());
  EXPECT_NEAR(j["spread"].get<double>(), 0.0, 1e-9);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "beta,mean_len,stderr,recip_stderr,alpha");
}

TEST(Analyze, Errors) {
  std::ostringstream csv, json;
  std::istringstream single(synthetic_samples({0.2}, {1.0}));
  EXPECT_THROW(cli::cmd_analyze(single, {}, csv, json), validation_error);
  std::istringstream junk("hello\n");
  EXPECT_THROW(cli::cmd_analyze(junk, {}, csv, json), validation_error);
  cli::AnalyzeOptions deg3;
  deg3.degree = 3;
  std::istringstream ok(synthetic_samples({0.1, 0.15, 0.2, 0.25, 0.3}, {1.0}));
  EXPECT_THROW(cli::cmd_analyze(ok, deg3, csv, json), validation_error);
}

TEST(Analyze, Z2MeansMatchExact) {
  cli::SampleOptions opt;
  opt.group.group = "z2";
  opt.ladder = "0.1,0.15,0.2,0.25";
  opt.iters = 20000;
  opt.blocks = 40;
  opt.seed = 3;
  std::ostringstream samples, log;
  cli::cmd_sample(opt, samples, log);
  std::istringstream in(samples.str());
  std::ostringstream csv, json;
  cli::AnalyzeOptions aopt;
  aopt.fit_min_beta = 0.1;
  const auto res = cli::cmd_analyze(in, aopt, csv, json);
  Coefficients all(401, 0);
  for (unsigned m = 0; 2 * m <= 400; ++m) {
    mpz_class b;
    mpz_bin_uiui(b.get_mpz_t(), 2 * m, m);
    all[2 * m] = b * b;
  }
  std::vector<double> d;
  for (const auto& v : reduced_from_all_words(all, 2)) d.push_back(v.get_d());
  for (const auto& r : res.rungs) {
    const double exact = exact_canonical_mean(d, r.beta, -1.0);
    EXPECT_LE(std::abs(r.estimate.mean - exact), 3.0 * r.estimate.stderr) << r.beta;
  }
}

TEST(Oracle, CoefficientFiles) {
  cli::OracleCliOptions opt;
  opt.group.group = "bs";
  opt.group.n = 2;
  opt.group.m = 2;
  opt.max_len = 10;
  std::ostringstream out;
  EXPECT_EQ(cli::cmd_oracle(opt, out), constant_term(iterate_bs_system({2, 2, 10, std::nullopt}).G));
  EXPECT_EQ(out.str().substr(out.str().find('\n') + 1, 16), "0\t1\n1\t0\n2\t4\n3\t0\n");
  EXPECT_NE(out.str().find("\"kind\":\"unreduced\""), std::string::npos);

  cli::OracleCliOptions k3;
  k3.group.group = "kouksov3";
  k3.max_len = 8;
  k3.reduced = true;
  std::ostringstream out3;
  const auto c = cli::cmd_oracle(k3, out3);
  EXPECT_EQ(c[2], 6);
  EXPECT_EQ(c[4], 78);
  EXPECT_NE(out3.str().find("\"kind\":\"reduced\""), std::string::npos);

  cli::OracleCliOptions f;
  f.group.group = "thompson1";
  EXPECT_THROW(cli::cmd_oracle(f, out), unsupported_group);
}

TEST(Exact, Families) {
  std::ostringstream out;
  EXPECT_EQ(cli::cmd_exact({"free2", 6}, out), (Coefficients{1, 0, 4, 0, 28, 0, 232}));
  const auto k3 = cli::cmd_exact({"kouksov3", 12}, out);
  EXPECT_EQ(k3, count_trivial_words(evaluator_for(builtin_presentation("kouksov3")), 12, true));
  std::ostringstream zero;
  cli::cmd_exact({"kouksov1", 0}, zero);
  EXPECT_EQ(zero.str().substr(zero.str().find('\n') + 1), "0\t1\n");
  const auto z2 = cli::cmd_exact({"bs11_reduced", 8}, out);
  EXPECT_EQ(z2[4], 8);
  EXPECT_THROW(cli::cmd_exact({"nope", 4}, out), validation_error);
}

TEST(Binary, ExitCodesAndOutputs) {
  auto r = run_cli("series --n 1 --m 1 --terms 20");
  EXPECT_EQ(r.exit_code, 0);
  const auto c = parse_coefficients(r.out);
  ASSERT_EQ(c.size(), 21u);
  EXPECT_EQ(c[4], 36);

  EXPECT_EQ(run_cli("series --n 0 --m 1").exit_code, 2);
  EXPECT_EQ(run_cli("series --n 1").exit_code, 2);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 2);
  EXPECT_EQ(run_cli("--help").exit_code, 0);

  r = run_cli("oracle --group bs --n 2 --m 2 --max-len 10");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(parse_coefficients(r.out)[6], 244);
  EXPECT_EQ(run_cli("oracle --group thompson1 --max-len 4").exit_code, 2);
  EXPECT_EQ(run_cli("oracle --group bs --n 2 --m 3 --max-len 40 --memory-gb 0.0001").exit_code, 3);

  r = run_cli("exact --family kouksov1 --terms 0");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(parse_coefficients(r.out), (Coefficients{1}));
  EXPECT_EQ(run_cli("exact --family nope").exit_code, 2);
}

TEST(Binary, SampleThenAnalyze) {
  const auto samples = temp_path("samples.csv");
  const auto summary = temp_path("summary.json");
  const std::string args = "sample --group z2 --alpha 1 --ladder 0.05:0.32:6 --iters 2000 --blocks 20 --seed 7 --out " +
                           samples.string();
  ASSERT_EQ(run_cli(args).exit_code, 0);
  std::ifstream f(samples);
  std::stringstream first;
  first << f.rdbuf();
  ASSERT_EQ(run_cli(args).exit_code, 0);
  std::ifstream g(samples);
  std::stringstream second;
  second << g.rdbuf();
  EXPECT_EQ(first.str(), second.str());

  const auto r = run_cli("analyze " + samples.string() + " --summary " + summary.string());
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out.rfind("beta,mean_len,stderr,recip_stderr", 0), 0u);
  std::ifstream s(summary);
  const auto j = ordered_json::parse(s);
  EXPECT_TRUE(j.contains("verdict"));
  EXPECT_EQ(run_cli("analyze /nonexistent.csv").exit_code, 2);
  std::filesystem::remove(samples);
  std::filesystem::remove(summary);
}
