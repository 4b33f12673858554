#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>
#include <gtest/gtest.h>

#include "symentropy/symentropy.hpp"
#include "test_support.hpp"

using namespace symentropy;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int status = -1;
  std::string out;
  std::string err;
};

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / ("symentropy_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path dir = scratch_dir();
  const fs::path out = dir / ("out" + std::to_string(counter) + ".txt");
  const fs::path err = dir / ("err" + std::to_string(counter++) + ".txt");
  const std::string cmd = std::string(SYMENTROPY_CLI_PATH) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = read_file(out.string());
  r.err = read_file(err.string());
  return r;
}

}  // namespace

TEST(FormatDouble, RoundTrips) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = g(rng);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(JsonWriter, NonFiniteBecomesNull) {
  JsonWriter w;
  w.begin_object()
      .field("a", 1.5)
      .field("b", std::numeric_limits<double>::infinity())
      .field("c", std::nan(""))
      .field("s", "x\"y")
      .field("t", true)
      .end_object();
  const auto doc = nlohmann::json::parse(w.str());
  EXPECT_EQ(doc["a"].get<double>(), 1.5);
  EXPECT_TRUE(doc["b"].is_null());
  EXPECT_TRUE(doc["c"].is_null());
  EXPECT_EQ(doc["s"].get<std::string>(), "x\"y");
  EXPECT_TRUE(doc["t"].get<bool>());
}

TEST(MixtureJson, RoundTripIsBitExact) {
  std::mt19937_64 rng(5);
  for (std::size_t n : {1u, 2u, 4u}) {
    const auto law = test::random_mixture(n, 3, rng);
    const auto back = mixture_from_json(mixture_to_json(law));
    EXPECT_EQ(law_fingerprint(back), law_fingerprint(law)) << "n=" << n;
    EXPECT_EQ(mixture_to_json(back), mixture_to_json(law));
  }
}

TEST(MixtureJson, ParseErrorsNameTheField) {
  auto expect_field = [](const std::string& text, const std::string& field) {
    try {
      (void)mixture_from_json(text);
      ADD_FAILURE() << "no error for " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError) << e.what();
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  expect_field("{not json", "malformed");
  expect_field("[1, 2]", "mixture");
  expect_field(R"({"components": []})", "dim");
  expect_field(R"({"dim": 1, "components": []})", "components");
  expect_field(R"({"dim": 1, "components": [{"mean": [0], "cov": [[1]]}]})", "components[0].weight");
  expect_field(R"({"dim": 2, "components": [{"weight": 1, "mean": [0], "cov": [[1,0],[0,1]]}]})",
               "components[0].mean");
  expect_field(R"({"dim": 1, "components": [{"weight": 1, "mean": [0], "cov": [["a"]]}]})",
               "components[0].cov[0][0]");
  // structurally valid but not a covariance
  EXPECT_SE_ERROR(mixture_from_json(R"({"dim": 1, "components": [{"weight": 1, "mean": [0], "cov": [[-1]]}]})"),
                  ErrorCode::NotPositiveDefinite);
}

TEST(Builtins, EveryNameLoads) {
  // the listed names are templates: K is a dimension, R a correlation
  for (std::string name : builtin_names()) {
    if (auto k = name.find('K'); k != std::string::npos) name.replace(k, 1, "3");
    if (auto r = name.rfind('R'); r != std::string::npos && r + 1 == name.size()) name.replace(r, 1, "0.25");
    EXPECT_NO_THROW((void)builtin_law(name)) << name;
  }
  EXPECT_EQ(builtin_law("builtin:gaussian-iid-n3").dim(), 3u);
  EXPECT_EQ(builtin_law("bimodal-product-n4").dim(), 4u);
  EXPECT_EQ(builtin_law("builtin:correlated-gaussian-rho-0.5").dim(), 2u);
  EXPECT_SE_ERROR(builtin_law("builtin:nonsense"), ErrorCode::ParseError);
}

TEST(AtomicWrite, ReplacesContent) {
  const fs::path p = scratch_dir() / "atomic.txt";
  atomic_write(p.string(), "first");
  atomic_write(p.string(), "second");
  EXPECT_EQ(read_file(p.string()), "second");
  for (const auto& entry : fs::directory_iterator(scratch_dir())) {
    EXPECT_EQ(entry.path().string().find(".tmp."), std::string::npos);
  }
  EXPECT_SE_ERROR(atomic_write("/nonexistent-dir/x.json", "x"), ErrorCode::InvalidArgument);
}

TEST(ScanCsv, Columns) {
  const auto t = direction_scan(standard_gaussian(2), 4, {1000, 1, 3.0});
  const std::string csv = scan_to_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "a1,a2,entropy,stderr,bound,margin");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Cli, CounterexampleExitsZero) {
  const auto r = run_cli("counterexample");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["report"]["verdict"], "violated");
  EXPECT_NEAR(doc["report"]["gap"].get<double>(), -0.7361097448, 1e-9);
  EXPECT_TRUE(doc["expected"].get<bool>());
  EXPECT_EQ(doc["seed"].get<std::uint64_t>(), 7u);
  EXPECT_EQ(doc["report"]["law_fingerprint"].get<std::string>().size(), 16u);
}

TEST(Cli, VerifyReportsAndByteIdenticalReruns) {
  const std::string args = "verify --law builtin:gaussian-iid-n2 --samples 5000 --seed 3";
  const auto a = run_cli(args);
  const auto b = run_cli(args);
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto doc = nlohmann::json::parse(a.out);
  ASSERT_EQ(doc["reports"].size(), 2u);
  EXPECT_EQ(doc["reports"][0]["statement"], "thm_main");
  EXPECT_EQ(doc["reports"][1]["statement"], "fisher_lemma");
  EXPECT_TRUE(doc["passed"].get<bool>());

  const auto with_dir = run_cli(args + " --direction 0.6,0.8");
  ASSERT_EQ(with_dir.status, 0) << with_dir.err;
  EXPECT_EQ(nlohmann::json::parse(with_dir.out)["reports"].size(), 3u);
}

TEST(Cli, OutFileAndFormats) {
  const fs::path p = scratch_dir() / "scan.csv";
  const auto r = run_cli("scan --law builtin:rotated-bimodal --samples 2000 --resolution 6 --out " +
                         p.string());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const std::string csv = read_file(p.string());
  EXPECT_EQ(csv.rfind("a1,a2,entropy", 0), 0u);

  const auto j = run_cli("scan --law builtin:rotated-bimodal --samples 2000 --resolution 6 --format json");
  ASSERT_EQ(j.status, 0) << j.err;
  EXPECT_EQ(nlohmann::json::parse(j.out)["rows"].size(), 6u);

  const auto d = run_cli("debruijn --law builtin:bimodal --samples 1000 --nodes 16 --format csv");
  ASSERT_EQ(d.status, 0) << d.err;
  EXPECT_EQ(d.out.rfind("t,value,stderr\n", 0), 0u);
}

TEST(Cli, LawFromFile) {
  const fs::path p = scratch_dir() / "law.json";
  atomic_write(p.string(), mixture_to_json(product_power(bimodal_base(), 2)));
  const auto r = run_cli("verify --samples 2000 --law " + p.string());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["reports"][0]["law_fingerprint"],
            law_fingerprint(product_power(bimodal_base(), 2)));
}

TEST(Cli, VerdictFailureExitsOne) {
  // a band of 1e-9σ cannot contain the Monte Carlo noise of the equality case
  const auto r = run_cli("equality-demo --samples 2000 --tol-sigma 1e-9");
  EXPECT_EQ(r.status, 1) << r.err;
  EXPECT_FALSE(nlohmann::json::parse(r.out)["passed"].get<bool>());
}

TEST(Cli, ConfigurationErrorsExitTwo) {
  EXPECT_EQ(run_cli("verify").status, 2);
  EXPECT_EQ(run_cli("verify --law builtin:nonsense").status, 2);
  EXPECT_EQ(run_cli("verify --law /nonexistent/law.json").status, 2);
  EXPECT_EQ(run_cli("verify --law builtin:gaussian-iid-n2 --samples 10").status, 2);
  EXPECT_EQ(run_cli("verify --law builtin:gaussian-iid-n2 --tol-sigma -1").status, 2);
  EXPECT_EQ(run_cli("scan --law builtin:gaussian-iid-n2 --format xml").status, 2);
  EXPECT_EQ(run_cli("probe --law builtin:gaussian-iid-n2 --samples 1000").status, 2);
  EXPECT_EQ(run_cli("kdim --law builtin:gaussian-iid-n4 --k 5 --n 4").status, 2);
  EXPECT_EQ(run_cli("frobnicate").status, 2);
  const auto asym = run_cli("verify --law builtin:correlated-gaussian-rho-0.9 --samples 1000");
  EXPECT_EQ(asym.status, 2);
  EXPECT_NE(asym.err.find("NotSymmetric"), std::string::npos) << asym.err;
}

TEST(Cli, CalibrateCsv) {
  const auto r = run_cli("calibrate --samples 5000 --format csv");
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(r.out.rfind("estimator,n,variance,value,stderr,truth,z\n", 0), 0u);
  // at the minimum budget the battery still runs; the verdict is then noise-limited
  const auto small = run_cli("calibrate --samples 100");
  EXPECT_TRUE(small.status == 0 || small.status == 1) << small.err;
  EXPECT_EQ(nlohmann::json::parse(small.out)["rows"].size(), 60u);
}
