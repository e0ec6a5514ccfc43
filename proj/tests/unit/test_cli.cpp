#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dppcdf/io.hpp"
#include "dppcdf/samplers.hpp"
#include "dppcdf/synthetic.hpp"

using namespace dppcdf;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dppcdf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string &name) const { return (dir_ / name).string(); }

  // Runs the CLI in the scratch directory; stderr goes to `err`.
  int run(const std::string &args) {
    const std::string cmd = "cd '" + dir_.string() + "' && '" DPPCDF_CLI_PATH "' " + args + " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    err = read("stderr.txt");
    out = read("stdout.txt");
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string &name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::string err;
  std::string out;
};

} // namespace

TEST_F(Cli, GenKernelMatchesLibrary) {
  ASSERT_EQ(run("gen-kernel --n 12 --rank 4 --seed 9 --out k.bin"), 0) << err;
  EXPECT_EQ(read_dense_kernel(path("k.bin")).entries(), gen_synthetic_kernel(12, 4, 9).entries());
  ASSERT_EQ(run("gen-kernel --n 5 --rank 2 --seed 1 --out k.csv"), 0) << err;
  EXPECT_EQ(read_dense_kernel(path("k.csv")).entries(), gen_synthetic_kernel(5, 2, 1).entries());
}

TEST_F(Cli, BruteMatchesEnumerationOracle) {
  ASSERT_EQ(run("gen-kernel --n 10 --rank 6 --seed 3 --out k.bin"), 0) << err;
  ASSERT_EQ(run("cdf --kernel k.bin --method brute --statistic inverse-index --grid 0.1:3:30 --out b.csv"), 0) << err;
  const Curve c = read_curve_csv(path("b.csv"));
  const ExactCdf exact =
      statistic_cdf_from_atoms(atoms_from_marginal_kernel(gen_synthetic_kernel(10, 6, 3)), inverse_index_statistic(10));
  ASSERT_EQ(c.t.size(), 30u);
  for (std::size_t i = 0; i < c.t.size(); ++i) {
    EXPECT_EQ(c.f[i], exact(c.t[i]));
  }
}

TEST_F(Cli, DenseAgreesWithBruteAwayFromJumps) {
  ASSERT_EQ(run("gen-kernel --n 10 --rank 6 --seed 3 --out k.bin"), 0) << err;
  ASSERT_EQ(run("cdf --kernel k.bin --method dense --statistic constant --grid 0.5:6.5:7 --out d.csv"), 0) << err;
  ASSERT_EQ(run("cdf --kernel k.bin --method brute --statistic constant --grid 0.5:6.5:7 --out b.csv"), 0) << err;
  // the grid sits on half-integers, midway between the jumps of a count
  ASSERT_EQ(run("compare --baseline b.csv d.csv --max-sup 5e-3 --json r.json --strict"), 0) << out << err;
  const auto j = nlohmann::json::parse(read("r.json"));
  EXPECT_EQ(j["results"][0]["verdict"], "pass");
  EXPECT_LE(j["results"][0]["sup_distance"].get<double>(), 5e-3);
}

TEST_F(Cli, CompareIdenticalFiles) {
  ASSERT_EQ(run("cdf --synthetic 30:8:2 --grid 0.2:5:25 --out a.csv"), 0) << err;
  ASSERT_EQ(run("sample --synthetic 30:8:2 --count 500 --seed 4 --out s.txt"), 0) << err;
  ASSERT_EQ(run("ecdf --samples s.txt --grid 0.2:5:25 --out e.csv"), 0) << err;
  ASSERT_EQ(run("compare --baseline a.csv a.csv --json same.json"), 0) << err;
  EXPECT_EQ(nlohmann::json::parse(read("same.json"))["results"][0]["sup_distance"], 0.0);
  ASSERT_EQ(run("compare --baseline e.csv e.csv --json band.json"), 0) << err;
  EXPECT_EQ(nlohmann::json::parse(read("band.json"))["results"][0]["containment"], 1.0);
  ASSERT_EQ(run("compare --baseline e.csv a.csv --min-containment 1.01 --strict"), 1) << err;
  EXPECT_NE(out.find("FAIL"), std::string::npos);
}

TEST_F(Cli, OutputsAreByteIdenticalAcrossRuns) {
  const std::string common = "--synthetic 60:15:5 --statistic abs-cos --grid 0.5:8:20 --seed 11";
  for (const std::string method : {"dense", "nystrom --rank 10", "svd --rank 10", "per-node --rank 10"}) {
    ASSERT_EQ(run("cdf " + common + " --method " + method + " --out a.csv --meta a.json"), 0) << err;
    ASSERT_EQ(run("cdf " + common + " --method " + method + " --out b.csv --meta b.json --threads 3"), 0) << err;
    EXPECT_EQ(read("a.csv"), read("b.csv")) << method;
    auto ja = nlohmann::json::parse(read("a.json"));
    auto jb = nlohmann::json::parse(read("b.json"));
    EXPECT_TRUE(ja.contains("created_utc"));
    EXPECT_EQ(ja["transform_evaluations"], 41);
    EXPECT_EQ(ja["method"], jb["method"]);
  }
  ASSERT_EQ(run("sample --synthetic 60:15:5 --count 300 --seed 2 --out s1.txt"), 0) << err;
  ASSERT_EQ(run("sample --synthetic 60:15:5 --count 300 --seed 2 --out s2.txt"), 0) << err;
  EXPECT_EQ(read("s1.txt"), read("s2.txt"));
  ASSERT_EQ(run("ecdf --samples s1.txt --grid 0.5:8:20 --out e1.csv"), 0) << err;
  ASSERT_EQ(run("ecdf --samples s2.txt --grid 0.5:8:20 --out e2.csv"), 0) << err;
  EXPECT_EQ(read("e1.csv"), read("e2.csv"));
}

TEST_F(Cli, HkpvBandHalfWidth) {
  ASSERT_EQ(run("sample --synthetic 40:10:1 --count 10000 --seed 1 --out s.txt --meta s.json"), 0) << err;
  ASSERT_EQ(run("ecdf --samples s.txt --statistic abs-cos --grid 0.1:6:10 --delta 0.05 --out e.csv --meta e.json"), 0)
      << err;
  const auto j = nlohmann::json::parse(read("e.json"));
  EXPECT_NEAR(j["half_width"].get<double>(), 0.01358, 1e-5);
  EXPECT_EQ(j["m"], 10000);
  const SampleBatch batch = read_sample_batch(path("s.txt"));
  EXPECT_EQ(batch.kernel_fingerprint, kernel_fingerprint(gen_synthetic_kernel(40, 10, 1)));
}

TEST_F(Cli, CountersInMetadata) {
  ASSERT_EQ(run("cdf --synthetic 50:10:1 --method per-node --rank 5 --e-nodes 21 --grid 0.5:5:50 --out a.csv "
                "--meta a.json"),
            0)
      << err;
  const auto j = nlohmann::json::parse(read("a.json"));
  EXPECT_EQ(j["transform_evaluations"], 21);
  EXPECT_EQ(j["svd_count"], 21);
  EXPECT_EQ(j["e_nodes"], 21);
  EXPECT_TRUE(j["timings_s"].contains("factorization"));
  ASSERT_EQ(run("cdf --synthetic 50:10:1 --per-t-sigma --grid 0.5:5:4 --out b.csv --meta b.json"), 0) << err;
  EXPECT_EQ(nlohmann::json::parse(read("b.json"))["transform_evaluations"], 4 * 41);
}

TEST_F(Cli, StatisticSources) {
  {
    std::ofstream f(path("psi.txt"));
    f << "# per-item values\n0.5\n1.0\n0.0\n2.0\n";
  }
  ASSERT_EQ(run("gen-kernel --n 4 --rank 2 --seed 1 --out k.bin"), 0) << err;
  ASSERT_EQ(run("cdf --kernel k.bin --method brute --statistic file:psi.txt --grid 0.25:4:8 --out a.csv"), 0) << err;
  ASSERT_EQ(run("cdf --kernel k.bin --method brute --statistic indicator:0,3 --grid 0.5:2.5:3 --out b.csv"), 0) << err;
  ASSERT_EQ(run("cdf --kernel k.bin --method brute --statistic constant:2 --grid 1:9:5 --out c.csv"), 0) << err;
  EXPECT_EQ(run("cdf --kernel k.bin --statistic file:missing.txt --grid 1:2:2 --out x.csv"), 3);
  EXPECT_EQ(run("cdf --kernel k.bin --statistic bogus --grid 1:2:2 --out x.csv"), 2);
  EXPECT_NE(err.find("error[input]"), std::string::npos);
}

TEST_F(Cli, StructuredFailures) {
  EXPECT_EQ(run("cdf --kernel nope.bin --grid 1:2:2 --out x.csv"), 3);
  EXPECT_EQ(err.rfind("error[io]: ", 0), 0u) << err;
  EXPECT_EQ(run("cdf --synthetic 10:11:1 --grid 1:2:2 --out x.csv"), 2);
  EXPECT_EQ(err.rfind("error[input]: ", 0), 0u) << err;
  EXPECT_EQ(run("cdf --synthetic 10:3:1 --grid 0:2:2 --out x.csv"), 2);
  EXPECT_EQ(run("cdf --synthetic 10:3:1 --method nystrom --grid 1:2:2 --out x.csv"), 2);
  EXPECT_EQ(run("cdf --synthetic 10:3:1 --method magic --grid 1:2:2 --out x.csv"), 2);
  EXPECT_EQ(run("cdf --synthetic 20:3:1 --method brute --grid 1:2:2 --out x.csv"), 4);
  EXPECT_EQ(err.rfind("error[capability]: ", 0), 0u) << err;
  EXPECT_EQ(run("cdf --synthetic 10:3:1 --statistic constant:-1 --grid 1:2:2 --out x.csv"), 2);

  {
    // nonsymmetric K built from a valid L: hkpv refuses, brute accepts
    std::ofstream f(path("l.csv"));
    f << "0.5,0.4\n-0.4,0.5\n";
  }
  EXPECT_EQ(run("sample --kernel l.csv --ensemble --method hkpv --out s.txt"), 4);
  EXPECT_EQ(run("sample --kernel l.csv --ensemble --method brute --count 10 --out s.txt"), 0) << err;
  {
    std::ofstream f(path("bad_l.csv"));
    f << "-0.5,0\n0,0.3\n";
  }
  EXPECT_EQ(run("sample --kernel bad_l.csv --ensemble --method brute --out s.txt"), 5);
  EXPECT_EQ(err.rfind("error[invalid-kernel]: ", 0), 0u) << err;
  {
    std::ofstream f(path("broken.txt"));
    f << "not a header\n";
  }
  EXPECT_EQ(run("ecdf --samples broken.txt --grid 1:2:2 --out e.csv"), 3);
  EXPECT_EQ(run("compare --baseline missing.csv other.csv"), 3);
  EXPECT_NE(run("cdf --grid 1:2:2"), 0); // argument error from the parser
  EXPECT_FALSE(err.empty());
}
