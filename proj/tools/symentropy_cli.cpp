// Batch front end: loads a law (builtin name or mixture JSON file), runs one
// verification command and writes a JSON or CSV report.
//
// Exit status: 0 when every verdict is in the class the command expects,
// 1 on a verdict failure, 2 on configuration or input errors.

#include <cstdint>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "symentropy/symentropy.hpp"

namespace se = symentropy;

namespace {

struct RunConfig {
  std::string law;
  std::uint64_t seed = 7;
  std::size_t samples = 200000;
  double tol_sigma = 3.0;
  std::string format = "json";
  std::string out;
  std::size_t resolution = 90;
  std::size_t k = 2;
  std::size_t n = 0;  // 0: taken from the law
  std::string method = "hadamard";
  std::size_t nodes = 64;
  std::vector<double> direction;
  double rho = se::kCounterexampleRho;

  se::Budget budget() const { return {samples, seed, tol_sigma}; }
};

constexpr int kExitVerdict = 1;
constexpr int kExitConfig = 2;

se::GaussianMixture load_law(const std::string& spec, const std::string& fallback) {
  const std::string name = spec.empty() ? fallback : spec;
  if (name.empty()) throw se::Error(se::ErrorCode::ParseError, "law: required for this command");
  if (name.rfind("builtin:", 0) == 0) return se::builtin_law(name);
  return se::mixture_from_json(se::read_file(name));
}

bool symmetric_ok(se::Verdict v) {
  return v == se::Verdict::holds || v == se::Verdict::holds_with_equality;
}

void header(se::JsonWriter& w, const std::string& command, const RunConfig& cfg,
            const std::string& law_name) {
  w.field("command", command).field("law", law_name);
  w.field("seed", static_cast<std::size_t>(cfg.seed)).key("budget");
  se::write_budget(w, cfg.budget());
}

void emit(const RunConfig& cfg, const std::string& content) {
  if (cfg.out.empty()) {
    std::cout << content;
  } else {
    se::atomic_write(cfg.out, content);
  }
}

int cmd_verify(const RunConfig& cfg) {
  const auto law = load_law(cfg.law, "");
  const auto b = cfg.budget();
  std::vector<se::InequalityReport> reports;
  reports.push_back(se::verify_main(law, b));
  reports.push_back(se::verify_fisher_lemma(law, b));
  if (!cfg.direction.empty()) {
    se::Vector a = Eigen::Map<const se::Vector>(cfg.direction.data(),
                                                static_cast<Eigen::Index>(cfg.direction.size()));
    reports.push_back(se::verify_directional(law, a, b));
  }
  se::JsonWriter w;
  w.begin_object();
  header(w, "verify", cfg, cfg.law);
  w.key("reports").begin_array();
  bool ok = true;
  for (const auto& r : reports) {
    se::write_report(w, r);
    ok = ok && symmetric_ok(r.verdict);
  }
  w.end_array().field("passed", ok).end_object();
  emit(cfg, w.str());
  return ok ? 0 : kExitVerdict;
}

int cmd_equality_demo(const RunConfig& cfg) {
  const std::string name = cfg.law.empty() ? "builtin:bimodal" : cfg.law;
  const auto base = load_law(name, "");
  const auto rep = se::equality_demo_n2(base, cfg.budget());
  se::JsonWriter w;
  w.begin_object();
  header(w, "equality-demo", cfg, name);
  w.key("report");
  se::write_report(w, rep.main);
  w.key("z_independence")
      .begin_object()
      .field("max_abs_mixed_partial", rep.z_independence.max_abs)
      .field("effective_tol", rep.z_independence.effective_tol)
      .field("probes", rep.z_independence.probe_count)
      .field("independent", rep.z_independence.verdict)
      .end_object();
  w.field("z_symmetric", rep.z_symmetric).field("passed", rep.passed).end_object();
  emit(cfg, w.str());
  return rep.passed ? 0 : kExitVerdict;
}

int cmd_probe(const RunConfig& cfg) {
  const auto law = load_law(cfg.law, "");
  const auto rep = se::gaussianity_probe(law, cfg.budget());
  se::JsonWriter w;
  w.begin_object();
  header(w, "probe", cfg, cfg.law);
  w.key("main");
  se::write_report(w, rep.main);
  w.key("bases").begin_array();
  for (const auto& b : rep.bases) {
    w.begin_object()
        .field("basis", b.basis)
        .field("max_abs_mixed_partial", b.mixed_partial.max_abs)
        .field("effective_tol", b.mixed_partial.effective_tol)
        .field("independent", b.mixed_partial.verdict)
        .key("cross_terms")
        .begin_array();
    for (const auto& ct : b.cross_terms) {
      w.begin_object()
          .field("j", ct.j)
          .field("value", ct.estimate.value)
          .field("stderr", ct.estimate.std_error)
          .field("z", ct.z)
          .field("zero", ct.zero)
          .end_object();
    }
    w.end_array().end_object();
  }
  w.end_array()
      .field("independence_failures", rep.independence_failures)
      .field("all_checks_pass", rep.all_checks_pass)
      .end_object();
  emit(cfg, w.str());
  // The independence results are evidence only; the exit status follows the
  // inequality verdict.
  return symmetric_ok(rep.main.verdict) ? 0 : kExitVerdict;
}

int cmd_kdim(const RunConfig& cfg) {
  const auto law = load_law(cfg.law, "");
  const std::size_t n = cfg.n == 0 ? law.dim() : cfg.n;
  if (n != law.dim()) {
    throw se::Error(se::ErrorCode::DimensionMismatch,
                    "n: must equal the law dimension " + std::to_string(law.dim()) + ", got " +
                        std::to_string(n));
  }
  const auto method =
      cfg.method == "hadamard" ? se::ProjectionMethod::hadamard : se::ProjectionMethod::frequency_pairs;
  const auto A = se::balanced_projection(cfg.k, n, method);
  const auto r = se::verify_kdim(law, A.matrix, cfg.budget());
  se::JsonWriter w;
  w.begin_object();
  header(w, "kdim", cfg, cfg.law);
  w.field("k", cfg.k).field("n", n).field("method", cfg.method).key("projection");
  se::write_matrix(w, A.matrix);
  w.key("report");
  se::write_report(w, r);
  w.field("passed", symmetric_ok(r.verdict)).end_object();
  emit(cfg, w.str());
  return symmetric_ok(r.verdict) ? 0 : kExitVerdict;
}

int cmd_debruijn(const RunConfig& cfg) {
  const auto law = load_law(cfg.law, "");
  const auto res = se::debruijn_analysis(law, cfg.samples, cfg.seed, {cfg.nodes, true});
  if (cfg.format == "csv") {
    emit(cfg, res.path.to_csv());
    return 0;
  }
  se::JsonWriter w;
  w.begin_object();
  header(w, "debruijn", cfg, cfg.law);
  w.field("nodes", cfg.nodes).key("estimate");
  se::write_estimate(w, res.estimate);
  w.field("mc_stderr", res.mc_std_error)
      .field("quadrature_stderr", res.quadrature_std_error)
      .field("half_rule_value", res.half_rule_value)
      .field("law_fingerprint", se::law_fingerprint(law))
      .key("path")
      .begin_array();
  for (std::size_t i = 0; i < res.path.times.size(); ++i) {
    w.begin_object()
        .field("t", res.path.times[i])
        .field("value", res.path.values[i].value)
        .field("stderr", res.path.values[i].std_error)
        .end_object();
  }
  w.end_array().end_object();
  emit(cfg, w.str());
  return 0;
}

int cmd_scan(const RunConfig& cfg) {
  const auto law = load_law(cfg.law, "");
  const auto b = cfg.budget();
  const auto table = se::direction_scan(law, cfg.resolution, b);
  bool ok = true;
  for (const auto& row : table.rows) {
    ok = ok && row.margin >= -cfg.tol_sigma * row.stderr_margin - se::kGapRoundingFloor;
  }
  if (cfg.format == "csv") {
    emit(cfg, se::scan_to_csv(table));
    return ok ? 0 : kExitVerdict;
  }
  se::JsonWriter w;
  w.begin_object();
  header(w, "scan", cfg, cfg.law);
  w.field("law_fingerprint", table.law_fingerprint).key("joint_entropy");
  se::write_estimate(w, table.joint);
  w.field("argmax", table.argmax).key("rows").begin_array();
  for (const auto& row : table.rows) {
    w.begin_object().key("a");
    se::write_vector(w, row.a);
    w.field("entropy", row.entropy)
        .field("stderr", row.stderr_margin)
        .field("bound", row.bound)
        .field("margin", row.margin)
        .field("trivial", row.trivial)
        .end_object();
  }
  w.end_array().field("passed", ok).end_object();
  emit(cfg, w.str());
  return ok ? 0 : kExitVerdict;
}

int cmd_counterexample(const RunConfig& cfg) {
  const auto rep = se::asymmetric_counterexample(cfg.rho, cfg.budget());
  se::JsonWriter w;
  w.begin_object();
  std::ostringstream name;
  name << "builtin:correlated-gaussian-rho" << cfg.rho;
  header(w, "counterexample", cfg, name.str());
  w.field("rho", rep.rho).key("report");
  se::write_report(w, rep.report);
  w.field("expected", rep.expected).end_object();
  emit(cfg, w.str());
  return rep.expected ? 0 : kExitVerdict;
}

int cmd_calibrate(const RunConfig& cfg) {
  const auto rep = se::run_calibration(cfg.samples, cfg.seed, cfg.tol_sigma);
  if (cfg.format == "csv") {
    std::ostringstream out;
    out << "estimator,n,variance,value,stderr,truth,z\n";
    for (const auto& r : rep.rows) {
      out << r.estimator << ',' << r.n << ',' << se::format_double(r.variance) << ','
          << se::format_double(r.value) << ',' << se::format_double(r.std_error) << ','
          << se::format_double(r.truth) << ',' << se::format_double(r.z) << '\n';
    }
    emit(cfg, out.str());
    return rep.passed ? 0 : kExitVerdict;
  }
  se::JsonWriter w;
  w.begin_object();
  header(w, "calibrate", cfg, "builtin:gaussian");
  w.key("rows").begin_array();
  for (const auto& r : rep.rows) {
    w.begin_object()
        .field("estimator", r.estimator)
        .field("n", r.n)
        .field("variance", r.variance)
        .field("value", r.value)
        .field("stderr", r.std_error)
        .field("truth", r.truth)
        .field("z", r.z)
        .end_object();
  }
  w.end_array().field("max_abs_z", rep.max_abs_z).field("passed", rep.passed).end_object();
  emit(cfg, w.str());
  return rep.passed ? 0 : kExitVerdict;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of entropy inequalities for symmetric random vectors"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "base seed of the random streams");
    sub->add_option("--samples", cfg.samples, "Monte Carlo samples per estimate")
        ->check(CLI::Range(std::size_t{100}, std::numeric_limits<std::size_t>::max()));
    sub->add_option("--tol-sigma", cfg.tol_sigma, "verdict band in standard errors")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", cfg.out, "report path (stdout when omitted)");
    sub->add_option("--format", cfg.format, "report format")
        ->check(CLI::IsMember({"json", "csv"}));
  };
  auto add_law = [&](CLI::App* sub) {
    sub->add_option("--law", cfg.law, "builtin:NAME or path to a mixture JSON file");
  };

  auto* verify = app.add_subcommand("verify", "main inequality and Fisher lemma (and a direction)");
  add_common(verify);
  add_law(verify);
  verify->add_option("--direction", cfg.direction, "unit vector for the directional bound")
      ->delimiter(',');

  auto* demo = app.add_subcommand("equality-demo", "n = 2 equality with a 1-D symmetric base");
  add_common(demo);
  add_law(demo);

  auto* probe = app.add_subcommand("probe", "gap and independence evidence, n >= 3");
  add_common(probe);
  add_law(probe);

  auto* kdim = app.add_subcommand("kdim", "balanced k x n projection bound");
  add_common(kdim);
  add_law(kdim);
  kdim->add_option("--k", cfg.k, "rows of the projection")->check(CLI::Range(1, 4096));
  kdim->add_option("--n", cfg.n, "columns (must equal the law dimension)")
      ->check(CLI::Range(1, 4096));
  kdim->add_option("--method", cfg.method, "projection construction")
      ->check(CLI::IsMember({"hadamard", "frequency_pairs"}));

  auto* debruijn = app.add_subcommand("debruijn", "entropy from the Fisher information path");
  add_common(debruijn);
  add_law(debruijn);
  debruijn->add_option("--nodes", cfg.nodes, "Gauss-Legendre nodes in u = t/(1+t)")
      ->check(CLI::Range(16, 4096));

  auto* scan = app.add_subcommand("scan", "directional entropies over the positive orthant");
  add_common(scan);
  add_law(scan);
  scan->add_option("--resolution", cfg.resolution, "number of directions")
      ->check(CLI::Range(1, 100000));

  auto* counter = app.add_subcommand("counterexample", "correlated Gaussian, closed forms");
  add_common(counter);
  counter->add_option("--rho", cfg.rho, "correlation")->check(CLI::Range(-0.999999, 0.999999));

  auto* calibrate = app.add_subcommand("calibrate", "estimator battery against Gaussian closed forms");
  add_common(calibrate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (scan->parsed() && !scan->count("--format")) cfg.format = "csv";

  try {
    if (verify->parsed()) return cmd_verify(cfg);
    if (demo->parsed()) return cmd_equality_demo(cfg);
    if (probe->parsed()) return cmd_probe(cfg);
    if (kdim->parsed()) return cmd_kdim(cfg);
    if (debruijn->parsed()) return cmd_debruijn(cfg);
    if (scan->parsed()) return cmd_scan(cfg);
    if (counter->parsed()) return cmd_counterexample(cfg);
    if (calibrate->parsed()) return cmd_calibrate(cfg);
  } catch (const se::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
