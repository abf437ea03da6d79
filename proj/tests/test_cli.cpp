#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qinstr/color_code.hpp"
#include "scenarios.hpp"

#ifndef QINSTR_CLI_PATH
#error "QINSTR_CLI_PATH must name the CLI binary"
#endif

using namespace qinstr;
using nlohmann::json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(QINSTR_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {};
  RunResult r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string write_config(const std::string& name, const json& j) {
  const auto path = std::filesystem::temp_directory_path() / ("qinstr_cli_" + name + ".json");
  std::ofstream(path) << j.dump();
  return path.string();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string f; std::getline(is, f, ',');) out.push_back(f);
  if (!s.empty() && s.back() == ',') out.push_back("");
  return out;
}

// Data rows (no comments, no header) as field vectors.
std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  bool header = false;
  for (const auto& l : lines(csv)) {
    if (l.empty() || l[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    out.push_back(split(l));
  }
  return out;
}

std::string run_in_process(const std::string& scenario, const json& params, std::uint64_t seed = 1) {
  cli::ScenarioConfig c;
  c.scenario = scenario;
  c.params = params;
  c.seed = seed;
  c.build = "test";
  std::ostringstream os;
  cli::run_scenario(c, os);
  return os.str();
}

}  // namespace

TEST(Cli, ListsEveryScenario) {
  RunResult r = run_cli("--list");
  ASSERT_EQ(r.code, 0);
  for (const auto& [name, fn] : cli::registry()) EXPECT_NE(r.out.find(name), std::string::npos) << name;
  EXPECT_EQ(cli::registry().size(), 8u);
}

TEST(Cli, CsvScenariosCarryConfigCommentAndHeader) {
  const std::map<std::string, std::string> headers{
      {"bloch-sweep", "p_loss,input,x,y,z"},
      {"ghz-imbalance", "p_loss,imbalance,one_minus_p_loss"},
      {"erasure-sweep", "p_loss,p_no_loss,fidelity_analytic,fidelity_decay_model,fidelity_sampled,error"},
      {"tomo-compare", "p_loss,repeat,shots,tvd_constrained,tvd_unconstrained,error"}};
  for (const auto& [name, header] : headers) {
    RunResult r = run_cli("--scenario " + name + " --seed 3");
    ASSERT_EQ(r.code, 0) << name;
    auto ls = lines(r.out);
    ASSERT_GE(ls.size(), 3u);
    EXPECT_EQ(ls[0].rfind("# config=", 0), 0u) << name;
    EXPECT_NE(ls[0].find("build="), std::string::npos);
    EXPECT_NE(ls[0].find("\"seed\":3"), std::string::npos);
    EXPECT_EQ(ls[1], header);
  }
}

TEST(Cli, SameSeedGivesByteIdenticalOutput) {
  const std::string cfg = write_config("det", {{"p_loss", {0.0, 0.5}}, {"repeats", 2}});
  RunResult a = run_cli("--scenario tomo-compare --config " + cfg + " --seed 9");
  RunResult b = run_cli("--scenario tomo-compare --config " + cfg + " --seed 9");
  RunResult c = run_cli("--scenario tomo-compare --config " + cfg + " --seed 10");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);

  const std::string qcfg = write_config("detq", {{"p_loss", {0.1}}, {"p_corr", {0.045}}, {"trials", 3000}});
  RunResult q1 = run_cli("--scenario qec-sweep --config " + qcfg);
  RunResult q2 = run_cli("--scenario qec-sweep --config " + qcfg);
  EXPECT_EQ(q1.out, q2.out);
}

TEST(Cli, OutFileMatchesStdout) {
  const auto path = std::filesystem::temp_directory_path() / "qinstr_cli_out.csv";
  RunResult a = run_cli("--scenario ghz-imbalance --out " + path.string());
  ASSERT_EQ(a.code, 0);
  EXPECT_TRUE(a.out.empty());
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), run_cli("--scenario ghz-imbalance").out);
}

TEST(Cli, ConfigErrorsExitWithTwo) {
  EXPECT_EQ(run_cli("--scenario nonexistent").code, 2);
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("--scenario bloch-sweep --config /nonexistent/file.json").code, 2);
  EXPECT_EQ(run_cli("--scenario bloch-sweep --config " + write_config("range", {{"p_loss", {1.5}}})).code, 2);
  EXPECT_EQ(run_cli("--scenario qec-sweep --config " + write_config("mode", {{"mode", "quantum"}})).code, 2);
  EXPECT_EQ(run_cli("--scenario noise-fit --config " + write_config("models", {{"models", {{"bogus"}}}})).code, 2);
  const auto bad = std::filesystem::temp_directory_path() / "qinstr_cli_malformed.json";
  std::ofstream(bad) << "{ not json";
  EXPECT_EQ(run_cli("--scenario bloch-sweep --config " + bad.string()).code, 2);
  EXPECT_EQ(run_cli("--scenario bloch-sweep --trials -4").code, 2);
}

TEST(BlochSweep, PlusEndpointIsSouthPole) {
  auto rs = rows(run_in_process("bloch-sweep", {{"p_loss", {0.0, 1.0}}, {"inputs", {"plus", "one"}}}));
  ASSERT_EQ(rs.size(), 4u);
  for (const auto& r : rs) {
    if (r[0] == "1") EXPECT_NEAR(std::stod(r[4]), -1.0, 1e-12) << r[1];
    if (r[0] == "0" && r[1] == "plus") EXPECT_NEAR(std::stod(r[2]), 1.0, 1e-12);
  }
}

TEST(GhzImbalance, ColumnEqualsSurvival) {
  auto rs = rows(run_in_process("ghz-imbalance", {{"p_loss", {0.0, 0.1, 0.37, 0.9, 1.0}}}));
  ASSERT_EQ(rs.size(), 5u);
  for (const auto& r : rs) EXPECT_NEAR(std::stod(r[1]), 1.0 - std::stod(r[0]), 1e-9);
}

TEST(ErasureSweep, DecayModelColumnAndSampledFidelity) {
  auto rs = rows(run_in_process("erasure-sweep", {{"p_loss", {0.0, 0.5}}, {"shots", 200}}));
  ASSERT_EQ(rs.size(), 2u);
  EXPECT_NEAR(std::stod(rs[0][2]), 1.0, 1e-12);
  // Renormalized white-noise weight w, fidelity 1 - 3w/4 on a qubit Choi state.
  const double w_ideal = (1.0 - 0.09) * (1.0 - 0.03), w_noise = 0.03;
  EXPECT_NEAR(std::stod(rs[0][3]), 1.0 - 0.75 * w_noise / (w_ideal + w_noise), 1e-9);
  EXPECT_GT(std::stod(rs[0][3]), std::stod(rs[1][3]));
  EXPECT_GT(std::stod(rs[1][4]), 0.8);
}

TEST(TomoCompare, ConstrainedFitDegradesWithLoss) {
  auto rs = rows(run_in_process("tomo-compare", {{"p_loss", {0.8}}, {"repeats", 3}}, 4));
  ASSERT_EQ(rs.size(), 3u);
  for (const auto& r : rs) EXPECT_GT(std::stod(r[3]), std::stod(r[4]));
}

TEST(NoiseFit, ReportRecoversCorrelatedRateAndRanksModels) {
  json rep = json::parse(run_in_process(
      "noise-fit", {{"models", {json::array(), {"depol"}, {"corr"}, {"corr", "depol", "deph"}}}}));
  const auto& fits = rep["targets"][0]["fits"];
  ASSERT_EQ(fits.size(), 4u);
  EXPECT_EQ(fits[0]["fidelity_model"], rep["targets"][0]["fidelity_ideal"]);
  EXPECT_NEAR(fits[2]["params"]["corr"].get<double>(), 0.045, 1e-3);
  const double f_depol = fits[1]["fidelity_model"], f_corr = fits[2]["fidelity_model"],
               f_comb = fits[3]["fidelity_model"];
  EXPECT_GE(f_comb, f_corr - 1e-9);
  EXPECT_GE(f_corr, f_depol);
  for (const char* key : {"model", "params", "fidelity_ideal", "fidelity_model"}) EXPECT_TRUE(fits[3].contains(key));
}

TEST(QecSweep, IdealRowsOverlayPolynomial) {
  auto rs = rows(run_in_process("qec-sweep", {{"p_loss", {0.1, 0.3}}, {"p_corr", {0.0}}, {"trials", 40000}}));
  ASSERT_EQ(rs.size(), 2u);
  for (const auto& r : rs) {
    const double rate = std::stod(r[6]), se = std::stod(r[7]), analytic = std::stod(r[8]);
    EXPECT_NEAR(analytic, 1.0 - analytic_success(std::stod(r[0])), 1e-9);
    EXPECT_NEAR(rate, analytic, 3.0 * std::max(se, 1e-4));
  }
}

TEST(QecScaling, EmitsSlopesForBothSweeps) {
  std::string out = run_in_process("qec-scaling", {{"p_single", {0.03, 0.1}}, {"p_corr", {0.1, 0.2}}, {"trials", 20000}});
  EXPECT_NE(out.find("# slope mode=clifford sweep=single"), std::string::npos);
  EXPECT_NE(out.find("# slope mode=clifford sweep=corr"), std::string::npos);
  EXPECT_EQ(rows(out).size(), 4u);
}

TEST(QecModes, ReportsMaxRelativeDeviation) {
  std::string out = run_in_process("qec-modes", {{"p_loss", {0.1}}, {"trials", 300}});
  EXPECT_NE(out.find("# max_relative_deviation="), std::string::npos);
  auto rs = rows(out);
  ASSERT_EQ(rs.size(), 2u);
  EXPECT_EQ(rs[0][4], "coherent");
  EXPECT_EQ(rs[1][4], "clifford");
}
