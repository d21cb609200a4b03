#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include <json.hpp>

namespace {

struct run_result {
  int status;
  std::string out;
};

run_result run(const std::string& args, bool merge_stderr = false) {
  const std::string cmd = std::string(LAMBDAMUT_CLI) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = ::testing::TempDir() + name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST(Cli, RatesKingman) {
  const auto r = run("rates --measure delta:0 --nmax 3");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "b,k2,k3,totalRate\n2,1,,1\n3,1,0,3\n");
}

TEST(Cli, RatesJson) {
  const auto r = run("rates --measure beta:2,2,1 --nmax 4 --format json");
  ASSERT_EQ(r.status, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("measure"), "beta:2,2,1");
  EXPECT_NEAR(j.at("rows").at(1).at("lambda").at(0).get<double>(), 0.5, 1e-14);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("rates --measure gamma:3 --nmax 4").status, 2);
  EXPECT_EQ(run("rates --nmax 4").status, 2);
  EXPECT_EQ(run("frobnicate").status, 2);
  EXPECT_EQ(run("exact --measure delta:0 --mu 1 --n 41").status, 2);
  EXPECT_NE(run("exact --measure delta:0 --mu 1 --n 41", true).out.find("partition cap exceeded"), std::string::npos);
  EXPECT_EQ(run("simulate frozen --measure poly3x2 --mu 1 --n 3 --reps 2").status, 2);
}

TEST(Cli, ExactEwensTable) {
  const auto r = run("exact --measure delta:0 --mu 1/2 --n 3 --exact");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "3^1\t1/3\n1^1 2^1\t1/2\n1^3\t1/6\n");
  const auto f = run("exact --measure delta:0 --mu 0.5 --n 3 --format json");
  ASSERT_EQ(f.status, 0);
  EXPECT_NO_THROW(nlohmann::json::parse(f.out));
}

TEST(Cli, ExactWithoutMutation) {
  const auto r = run("exact --measure beta:1,1,1 --mu 0 --n 4");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("4^1\t1\n"), std::string::npos);
}

TEST(Cli, SimulateIsReproducible) {
  const std::string args = "simulate frozen --measure poly3x2 --mu 1 --n 5 --reps 200 --seed 9";
  const auto a = run(args);
  const auto b = run(args + " --workers 3");
  EXPECT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, run("simulate frozen --measure poly3x2 --mu 1 --n 5 --reps 200 --seed 10").out);
}

TEST(Cli, CompositionFormat) {
  const auto r = run("simulate composition --measure poly3x2 --mu 1 --n 4 --reps 50 --seed 1");
  ASSERT_EQ(r.status, 0);
  std::size_t lines = 0;
  std::size_t start = 0;
  while (start < r.out.size()) {
    const std::size_t end = r.out.find('\n', start);
    const std::string line = r.out.substr(start, end - start);
    int sum = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = line.find(',', pos);
      sum += std::stoi(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    EXPECT_EQ(sum, 4) << line;
    ++lines;
    start = end + 1;
  }
  EXPECT_EQ(lines, 50u);
}

TEST(Cli, ForwardNeedsFiniteIntensity) {
  const auto r = run("simulate forward --measure beta:2,2,1 --mu 1 --horizon 1 --seed 1", true);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("infinite intensity"), std::string::npos);
}

TEST(Cli, ForwardSnapshot) {
  const auto r = run("forward-snapshot --measure poly3x2 --mu 1 --seed 4");
  ASSERT_EQ(r.status, 0);
  const auto j = nlohmann::json::parse(r.out);
  double total = j.at("diffuse").get<double>();
  for (const auto& a : j.at("atoms")) total += a.at("size").get<double>();
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(r.out, run("forward-snapshot --measure poly3x2 --mu 1 --seed 4").out);
  EXPECT_EQ(run("forward-snapshot --measure poly3x2 --mu 1 --seed 4 --method forward --horizon 5").status, 0);
}

TEST(Cli, ValidateSmallPlan) {
  const auto plan = write_temp("ok_plan.json", R"({"fixtures": [
      {"id": "k", "measure": "delta:0", "mu": 0.5, "n": 4, "checks": ["frozen"]}]})");
  const auto r = run("validate --plan " + plan + " --reps 20000 --seed 3");
  EXPECT_EQ(r.status, 0);
  EXPECT_TRUE(nlohmann::json::parse(r.out).at("passed").get<bool>());
  const auto csv = run("validate --plan " + plan + " --reps 20000 --seed 3 --format csv");
  EXPECT_EQ(csv.out.rfind("fixture,measure,check,", 0), 0u);
}

TEST(Cli, ValidateNegativeControl) {
  const auto plan = write_temp("neg_plan.json", R"({"fixtures": [
      {"id": "neg", "measure": "poly3x2", "mu": 1, "exactMu": 2, "n": 5, "checks": ["frozen"]}]})");
  const auto r = run("validate --plan " + plan + " --reps 20000 --seed 3");
  EXPECT_EQ(r.status, 1);
  EXPECT_FALSE(nlohmann::json::parse(r.out).at("passed").get<bool>());
  EXPECT_EQ(run("validate --plan /nonexistent.json --reps 10 --seed 1").status, 2);
}

TEST(Cli, HelpForEverySubcommand) {
  for (const std::string sub : {"", "rates", "exact", "simulate", "validate", "forward-snapshot"}) {
    const auto r = run(sub + " --help");
    EXPECT_EQ(r.status, 0) << sub;
    EXPECT_NE(r.out.find("Usage"), std::string::npos) << sub;
  }
}
