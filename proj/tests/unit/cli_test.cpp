#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(UPTIME_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("uptime_cli_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "p.txt") << "[day]\ncount=8\nbase_rate=0.9\n"
                                     "daily=0,0,0,0,0,0,0,0,1,1,1,1,1,1,1,1,1,1,1,1,0,0,0,0\n"
                                     "noise=0.05\n[night]\ncount=4\nbase_rate=0.9\n"
                                     "daily=1,1,1,1,1,1,1,1,0,0,0,0,0,0,0,0,0,0,0,0,1,1,1,1\n";
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("train --help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("bogus"), 2);
  EXPECT_EQ(run("synth --profiles " + path("p.txt")), 2);
  EXPECT_EQ(run("synth --profiles " + path("missing.txt") + " --out " + path("t.am")), 2);
  std::ofstream(dir_ / "bad.csv") << "user_id,login_ts,logout_ts\na,10,5\n";
  EXPECT_EQ(run("ingest --events " + path("bad.csv") + " --out " + path("x.am")), 1);
}

TEST_F(Cli, EndToEndChain) {
  ASSERT_EQ(run("synth --profiles " + path("p.txt") + " --seed 3 --out " + path("t.am")), 0);
  ASSERT_EQ(run("split --matrix " + path("t.am") + " --out " + path("split")), 0);
  EXPECT_TRUE(fs::exists(dir_ / "split" / "period_D.am"));
  ASSERT_EQ(run("filter --matrix " + path("t.am") + " --threshold 2 --out " + path("f.am")), 0);
  ASSERT_EQ(run("features --matrix " + path("t.am") + " --out " + path("x.csv")), 0);
  EXPECT_EQ(slurp(dir_ / "x.csv").rfind("user_id,slot,f1,f2,f3,f4,f5,label\n", 0), 0u);
  ASSERT_EQ(run("train --matrix " + path("t.am") + " --out " + path("m.txt")), 0);
  ASSERT_EQ(run("predict --matrix " + path("t.am") + " --model " + path("m.txt") + " --out " +
                path("p.csv")),
            0);
  ASSERT_EQ(run("eval --pred " + path("p.csv") + " --labels " + path("t.am") + " --out " +
                path("e.csv")),
            0);
  EXPECT_NE(slurp(dir_ / "e.csv").find("auc,all,"), std::string::npos);
  ASSERT_EQ(run("cluster --matrix " + path("t.am") + " --k 2 --out " + path("c.csv")), 0);
  const std::string sim =
      " --matrix " + path("t.am") + " --pred " + path("p.csv") + " --reps 2 --sample 12";
  ASSERT_EQ(run("sim-dht" + sim + " --iterations 5 --out " + path("dht")), 0);
  EXPECT_TRUE(fs::exists(dir_ / "dht" / "dht_summary.csv"));
  ASSERT_EQ(run("sim-f2f" + sim + " --degree 4 --out " + path("f2f")), 0);
  ASSERT_EQ(run("sim-newsfeed --matrix " + path("t.am") + " --pred " + path("p.csv") +
                " --out " + path("n.csv")),
            0);
  ASSERT_EQ(run("run --profiles " + path("p.txt") + " --no-ablation --out " + path("rep")), 0);
  EXPECT_TRUE(fs::exists(dir_ / "rep" / "metrics.csv"));
  EXPECT_EQ(run("predict --matrix " + path("t.am") + " --model " + path("m.txt") +
                " --obs C --target C --out " + path("q.csv")),
            1);
}

TEST_F(Cli, RerunsAreByteIdentical) {
  ASSERT_EQ(run("synth --profiles " + path("p.txt") + " --seed 9 --out " + path("a.am")), 0);
  ASSERT_EQ(run("--threads 3 synth --profiles " + path("p.txt") + " --seed 9 --out " +
                path("b.am")),
            0);
  EXPECT_EQ(slurp(dir_ / "a.am"), slurp(dir_ / "b.am"));
  ASSERT_EQ(run("train --matrix " + path("a.am") + " --out " + path("m1.txt")), 0);
  ASSERT_EQ(run("--threads 1 train --matrix " + path("a.am") + " --out " + path("m2.txt")), 0);
  EXPECT_EQ(slurp(dir_ / "m1.txt"), slurp(dir_ / "m2.txt"));
}
