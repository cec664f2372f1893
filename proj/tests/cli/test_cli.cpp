#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "phylograd_cli/cli.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "phylograd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = phylograd::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("phylograd_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }

  std::string write(const std::string& name, const std::string& text) const {
    const fs::path p = path_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Two-taxon JC: t = 0.1 + 0.2, two sites differ out of six.
constexpr const char* kPairTree = "(A:0.1,B:0.2);";
constexpr const char* kPairFasta = ">A\nACGTAC\n>B\nACGAAT\n";

double jc_same(double t) { return 0.25 + 0.75 * std::exp(-4.0 * t / 3.0); }
double jc_diff(double t) { return 0.25 - 0.25 * std::exp(-4.0 * t / 3.0); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("loglik matches the two-taxon closed form") {
  TempDir dir;
  const Result r = run_cli({"loglik", "--tree", dir.write("t.nwk", kPairTree), "--alignment",
                            dir.write("a.fa", kPairFasta)});
  REQUIRE(r.code == 0);
  const json report = json::parse(r.out);
  const double t = 0.3;
  const double expected = 4 * std::log(0.25 * jc_same(t)) + 2 * std::log(0.25 * jc_diff(t));
  CHECK(report["logLikelihood"].get<double>() == doctest::Approx(expected).epsilon(1e-12));
  CHECK(report["schemaVersion"] == 1);
  CHECK(report["command"] == "loglik");
  CHECK(report["inputsDigest"].get<std::string>().size() == 16);
  CHECK(report["wallTimeNs"].get<std::uint64_t>() > 0);
}

TEST_CASE("malformed Newick exits 2 with the byte offset") {
  TempDir dir;
  const Result r = run_cli({"loglik", "--tree", dir.write("t.nwk", "((A:1,B:1"), "--alignment",
                            dir.write("a.fa", kPairFasta)});
  CHECK(r.code == 2);
  CHECK(r.err.find("byte 9") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("unknown flags and missing inputs exit 2") {
  CHECK(run_cli({"loglik", "--bogus"}).code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"loglik", "--tree", "/nonexistent", "--alignment", "/nonexistent"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("serial and 8-worker parallel reports agree") {
  TempDir dir;
  REQUIRE(run_cli({"simulate", "--tips", "12", "--columns", "400", "--seed", "4", "--tree-out",
                   dir.file("t.nwk"), "--alignment-out", dir.file("a.fa")})
              .code == 0);
  const std::vector<std::string> inputs{"--tree", dir.file("t.nwk"), "--alignment",
                                        dir.file("a.fa")};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> args{"gradient"};
    args.insert(args.end(), inputs.begin(), inputs.end());
    args.insert(args.end(), extra.begin(), extra.end());
    const Result r = run_cli(args);
    REQUIRE(r.code == 0);
    return json::parse(r.out);
  };
  const json serial = with({"--backend", "serial"});
  const json again = with({"--backend", "serial"});
  const json parallel = with({"--backend", "parallel", "--workers", "8"});
  const double a = serial["logLikelihood"], b = parallel["logLikelihood"];
  CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
  CHECK(serial["logLikelihood"].get<double>() == again["logLikelihood"].get<double>());
  CHECK(serial["inputsDigest"] == parallel["inputsDigest"]);
  CHECK(parallel["backend"]["workers"] == 8);
  const auto ga = serial["gradient"].get<std::vector<double>>();
  const auto gb = parallel["gradient"].get<std::vector<double>>();
  CHECK(phylograd::testing::rel_inf(gb, ga) <= 1e-12);
}

TEST_CASE("gradient --check both on an 8-taxon GTR+G4 fixture") {
  TempDir dir;
  const std::string cfg = dir.write(
      "gtr.json",
      R"({"model": "gtr", "frequencies": [0.3, 0.2, 0.2, 0.3],
          "exchangeabilities": [1.2, 3.1, 0.8, 1.1, 2.9, 1.0],
          "gamma": {"alpha": 0.7, "categories": 4}})");
  REQUIRE(run_cli({"simulate", "--model-config", cfg, "--tips", "8", "--columns", "500",
                   "--seed", "21", "--tree-out", dir.file("t.nwk"), "--alignment-out",
                   dir.file("a.fa")})
              .code == 0);
  const Result r = run_cli({"gradient", "--tree", dir.file("t.nwk"), "--alignment",
                            dir.file("a.fa"), "--model-config", cfg, "--check", "both"});
  REQUIRE(r.code == 0);
  const json report = json::parse(r.out);
  CHECK(report["rateCategories"] == 4);
  CHECK(report["gradient"].size() == 14);
  CHECK(report["check"]["fd"]["maxRelativeDeviation"].get<double>() <= 1e-6);
  CHECK(report["check"]["quadratic"]["maxRelativeDeviation"].get<double>() <= 1e-8);
}

TEST_CASE("two-taxon gradient matches the JC derivative") {
  TempDir dir;
  const Result r = run_cli({"gradient", "--tree", dir.write("t.nwk", kPairTree), "--alignment",
                            dir.write("a.fa", kPairFasta)});
  REQUIRE(r.code == 0);
  const json report = json::parse(r.out);
  const double t = 0.3, e = std::exp(-4.0 * t / 3.0);
  const double expected = 4 * (-e / jc_same(t)) + 2 * ((e / 3.0) / jc_diff(t));
  const auto g = report["gradient"].get<std::vector<double>>();
  REQUIRE(g.size() == 2);
  CHECK(g[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("branch-set aggregation is the exact sum of its branches") {
  TempDir dir;
  REQUIRE(run_cli({"simulate", "--tips", "6", "--columns", "200", "--seed", "8", "--tree-out",
                   dir.file("t.nwk"), "--alignment-out", dir.file("a.fa")})
              .code == 0);
  const std::string set = dir.write("clock.txt", "# strict clock over a few branches\n0, 7\nt3\n9\n");
  const Result r = run_cli({"gradient", "--tree", dir.file("t.nwk"), "--alignment",
                            dir.file("a.fa"), "--branch-set", set});
  REQUIRE(r.code == 0);
  const json report = json::parse(r.out);
  const auto g = report["gradient"].get<std::vector<double>>();
  const auto branches = report["branchSet"]["branches"].get<std::vector<int>>();
  REQUIRE(branches.size() == 4);
  CHECK(branches[0] == 0);
  CHECK(branches[1] == 7);
  CHECK(branches[3] == 9);
  double sum = 0.0;
  for (int b : branches) sum += g[b];
  CHECK(report["branchSet"]["gradient"].get<double>() == sum);

  const std::string bad = dir.write("bad.txt", "nosuchtip\n");
  CHECK(run_cli({"gradient", "--tree", dir.file("t.nwk"), "--alignment", dir.file("a.fa"),
                 "--branch-set", bad})
            .code == 2);
}

TEST_CASE("impossible data exits 3") {
  TempDir dir;
  const std::string tree = dir.write("t.nwk", "(A:0,B:0);");
  const std::string fasta = dir.write("a.fa", ">A\nAC\n>B\nAG\n");
  const Result ll = run_cli({"loglik", "--tree", tree, "--alignment", fasta});
  CHECK(ll.code == 3);
  CHECK(ll.err.find("pattern") != std::string::npos);
  CHECK(run_cli({"gradient", "--tree", tree, "--alignment", fasta}).code == 3);
}

TEST_CASE("alphabet must agree with the model") {
  TempDir dir;
  CHECK(run_cli({"loglik", "--tree", dir.write("t.nwk", kPairTree), "--alignment",
                 dir.write("a.fa", kPairFasta), "--alphabet", "codon"})
            .code == 2);
}

TEST_CASE("bench emits kernel rows") {
  TempDir dir;
  const Result large = run_cli({"bench", "--states", "61", "--tips", "6", "--columns", "40",
                                "--iterations", "1", "--timings", dir.file("k.json")});
  REQUIRE(large.code == 0);
  CHECK(large.out.rfind("N,C,S,backend,workers,kernel,nsTotal,calls\n", 0) == 0);
  for (const char* k : {"preOrderPartials", "gradient", "postOrderPartials", "matrixTranspose",
                        "nodeSiteReduction"}) {
    CHECK(large.out.find(std::string(",") + k + ",") != std::string::npos);
  }
  const json timings = json::parse(slurp(dir.file("k.json")));
  double percent = 0.0;
  for (const auto& k : timings["kernels"]) percent += k["percent"].get<double>();
  CHECK(percent == doctest::Approx(100.0));

  const Result small = run_cli({"bench", "--states", "4", "--tips", "6", "--columns", "40",
                                "--iterations", "1"});
  REQUIRE(small.code == 0);
  CHECK(small.out.find("matrixTranspose") == std::string::npos);
  CHECK(small.out.find(",postOrderPartials,") != std::string::npos);
}

TEST_CASE("bench scaling summary") {
  TempDir dir;
  const Result r = run_cli({"bench", "--mode", "scaling", "--tips", "4,8", "--columns", "20",
                            "--iterations", "1", "--summary", dir.file("s.json")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("quadraticOracle") != std::string::npos);
  const json s = json::parse(slurp(dir.file("s.json")));
  CHECK(s.contains("fullGradientExponent"));
  CHECK(s.contains("quadraticOracleExponent"));
}

TEST_CASE("hmc writes a chain and diagnostics") {
  TempDir dir;
  REQUIRE(run_cli({"simulate", "--tips", "4", "--columns", "100", "--seed", "2", "--pin-root",
                   "--tree-out", dir.file("t.nwk"), "--alignment-out", dir.file("a.fa")})
              .code == 0);
  const std::vector<std::string> args{"hmc", "--tree", dir.file("t.nwk"), "--alignment",
                                      dir.file("a.fa"), "--iterations", "20", "--seed", "5",
                                      "--chain", dir.file("c.tsv"), "--diagnostics",
                                      dir.file("d.json")};
  REQUIRE(run_cli(args).code == 0);
  const std::string chain = slurp(dir.file("c.tsv"));
  CHECK(chain.rfind("iteration\tlogPosterior\tlength_", 0) == 0);
  CHECK(std::count(chain.begin(), chain.end(), '\n') == 21);
  const json d = json::parse(slurp(dir.file("d.json")));
  CHECK(d["freeBranches"].size() == 5);  // one of six branches pinned at zero
  CHECK(d["ess"].size() == 5);
  REQUIRE(run_cli(args).code == 0);
  CHECK(slurp(dir.file("c.tsv")) == chain);
}

TEST_CASE("simulate is reproducible for a seed") {
  const Result a = run_cli({"simulate", "--tips", "5", "--columns", "30", "--seed", "17"});
  const Result b = run_cli({"simulate", "--tips", "5", "--columns", "30", "--seed", "17"});
  const Result c = run_cli({"simulate", "--tips", "5", "--columns", "30", "--seed", "18"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
  CHECK(a.out.find(">t1\n") != std::string::npos);
}

}
