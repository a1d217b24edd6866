#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cogrowth/cli.hpp"

namespace {

using namespace cogrowth;

// Opens `path` for writing, or returns std::cout when the path is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw validation_error("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void add_group_options(CLI::App* cmd, cli::GroupChoice& g, bool allow_presentation) {
  cmd->add_option("--group", g.group, "builtin group name");
  cmd->add_option("--n", g.n, "BS parameter N");
  cmd->add_option("--m", g.m, "BS parameter M");
  if (allow_presentation) {
    cmd->add_option("--presentation", g.presentation_file, "file holding a presentation <gens | relators>");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cogrowth series, oracle counts and Metropolis sampling of trivial words"};
  app.require_subcommand(1);

  cli::SeriesOptions series;
  std::string series_out;
  std::string growth_out;
  std::optional<std::uint64_t> trim;
  std::optional<double> correction;
  auto* s = app.add_subcommand("series", "[q^0]G coefficients for BS(N,M) and a growth estimate");
  s->add_option("--group", series.group, "group family (bs)")->default_val("bs");
  s->add_option("--n", series.n, "N")->required();
  s->add_option("--m", series.m, "M")->required();
  s->add_option("--terms", series.terms, "largest n computed (inclusive)")->default_val(20);
  s->add_option("--trim", trim, "magnitude trimming threshold T (e.g. 4096)");
  s->add_option("--correction", correction, "power-law correction exponent c in g_n ~ A mu^n n^c");
  s->add_option("--out", series_out, "coefficient file (default stdout)");
  s->add_option("--growth-out", growth_out, "growth JSON file (default stderr)");

  cli::SampleOptions sample;
  std::string sample_out;
  auto* sm = app.add_subcommand("sample", "tempered Metropolis sampling over a beta ladder");
  add_group_options(sm, sample.group, true);
  sm->add_option("--alpha", sample.alpha, "distribution exponent alpha")->default_val(1.0);
  sm->add_option("--ladder", sample.ladder, "start:end:count or comma list")->default_val("0.05:0.30:20");
  sm->add_option("--pc", sample.p_c, "conjugation probability")->default_val(0.5);
  sm->add_option("--iters", sample.iters, "iterations per block")->default_val(100000);
  sm->add_option("--blocks", sample.blocks, "blocks per rung")->default_val(100);
  sm->add_option("--seed", sample.seed, "random seed")->default_val(1);
  sm->add_option("--theta", sample.theta, "decay of the wreath relator family")->default_val(0.5);
  sm->add_option("--swap-interval", sample.swap_interval, "steps between swap sweeps")->default_val(100);
  sm->add_option("--threads", sample.threads, "worker threads")->default_val(1);
  sm->add_option("--out", sample_out, "samples CSV (default stdout)");

  cli::OracleCliOptions oracle;
  std::string oracle_out;
  auto* o = app.add_subcommand("oracle", "brute-force trivial-word counts");
  add_group_options(o, oracle.group, false);
  o->add_option("--max-len", oracle.max_len, "largest word length")->default_val(10);
  o->add_flag("--reduced", oracle.reduced, "count freely reduced words only");
  o->add_option("--memory-gb", oracle.memory_gb, "memory budget in GiB")->default_val(8.0);
  o->add_option("--out", oracle_out, "coefficient file (default stdout)");

  cli::AnalyzeOptions analyze;
  std::string samples_in;
  std::string analysis_out;
  std::string summary_out;
  auto* a = app.add_subcommand("analyze", "canonical means, reciprocal-error extrapolation, amenability signal");
  a->add_option("samples", samples_in, "samples CSV from 'sample'")->required();
  a->add_option("--degree", analyze.degree, "fit degree 1 or 2")->default_val(1);
  a->add_option("--k", analyze.generators, "generator count (default: from the samples header)");
  a->add_option("--fit-min-beta", analyze.fit_min_beta, "smallest beta used in the fit");
  a->add_option("--fit-max-beta", analyze.fit_max_beta, "largest beta used in the fit");
  a->add_flag("--weighted", analyze.weighted, "weight fit points by their estimated uncertainty");
  a->add_option("--out", analysis_out, "analysis CSV (default stdout)");
  a->add_option("--summary", summary_out, "summary JSON (default stderr)");

  cli::ExactOptions exact;
  std::string exact_out;
  auto* e = app.add_subcommand("exact", "closed-form series expansions");
  e->add_option("--family", exact.family, "kouksov1|kouksov2|kouksov3|free2|bs11_reduced")->required();
  e->add_option("--terms", exact.terms, "largest n (inclusive)")->default_val(12);
  e->add_option("--out", exact_out, "coefficient file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (s->parsed()) {
      series.trim = trim;
      series.correction_exponent = correction;
      Output out(series_out);
      if (growth_out.empty()) {
        cli::cmd_series(series, out.stream(), std::cerr);
      } else {
        Output g(growth_out);
        cli::cmd_series(series, out.stream(), g.stream());
      }
    } else if (sm->parsed()) {
      Output out(sample_out);
      cli::cmd_sample(sample, out.stream());
    } else if (o->parsed()) {
      Output out(oracle_out);
      cli::cmd_oracle(oracle, out.stream());
    } else if (a->parsed()) {
      std::ifstream in(samples_in);
      if (!in) throw validation_error("cannot read samples file '" + samples_in + "'");
      Output out(analysis_out);
      if (summary_out.empty()) {
        cli::cmd_analyze(in, analyze, out.stream(), std::cerr);
      } else {
        Output sum(summary_out);
        cli::cmd_analyze(in, analyze, out.stream(), sum.stream());
      }
    } else if (e->parsed()) {
      Output out(exact_out);
      cli::cmd_exact(exact, out.stream());
    }
  } catch (const budget_exceeded& err) {
    std::cerr << "error: " << err.what() << " (completed through length " << err.layer_reached() << ")\n";
    return 3;
  } catch (const validation_error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}
