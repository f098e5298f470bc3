#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "oracles.hpp"
#include "tailbin/io.hpp"
#include "tailbin/numerics.hpp"

using namespace tailbin;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string err;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("tailbin_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Outcome run(const std::string& args, const std::string& env = "") const {
    const std::string out = path("stdout.txt"), err = path("stderr.txt");
    const std::string cmd = env + " " + TAILBIN_CLI + std::string(" ") + args + " >" + out + " 2>" + err;
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_text(out);
    r.err = read_text(err);
    return r;
  }

  void write(const std::string& name, const std::string& text) const { write_text_atomic(path(name), text); }

  fs::path dir_;
};

std::string pareto_csv(std::uint64_t seed, int n) {
  RngStream s = make_rng_stream(seed, 0);
  std::string text = "y,x\n";
  for (int i = 0; i < n; ++i) {
    const int y = s.uniform() < 0.5;
    text += std::to_string(y) + "," + format_number(sample_pareto(s, y ? 1.0 : 2.0)) + "\n";
  }
  return text;
}

std::string panel_csv(std::uint64_t seed, int n, int t, bool constant_y = false) {
  RngStream s = make_rng_stream(seed, 0);
  std::string text = "unit,t,y,x\n";
  for (int i = 0; i < n; ++i) {
    const double a = s.uniform() - 0.5;
    for (int k = 1; k <= t; ++k) {
      const double x = sample_abs_t(s, 1.0) + 0.01;
      int y = s.uniform() < logistic(a + 0.8 * std::log(x));
      if (constant_y) y = 1;
      text += "u" + std::to_string(i) + "," + std::to_string(k) + "," + std::to_string(y) + "," + format_number(x) + "\n";
    }
  }
  return text;
}

}  // namespace

TEST_F(Cli, SimulateIsReproducible) {
  write("cfg.json", R"({"alpha_x": 1, "alpha_eps": 1, "n": 1000, "reps": 2, "tail_q": 0.95})");
  ASSERT_EQ(run("simulate --experiment exp1 --config " + path("cfg.json") + " --out " + path("a")).code, 0);
  ASSERT_EQ(run("simulate --experiment exp1 --config " + path("cfg.json") + " --out " + path("b"), "TAILBIN_THREADS=3")
                .code,
            0);
  const std::string a = read_text(path("a/summary.csv"));
  EXPECT_EQ(a, read_text(path("b/summary.csv")));
  EXPECT_EQ(read_text(path("a/manifest.json")), read_text(path("b/manifest.json")));
  EXPECT_EQ(a.rfind("experiment,alpha_x,alpha_eps,estimator,estimand", 0), 0u);
}

TEST_F(Cli, SimulateMissingFieldExitsTwo) {
  write("cfg.json", R"({"alpha_eps": 1})");
  const Outcome r = run("simulate --experiment exp1 --config " + path("cfg.json") + " --out " + path("a"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("alpha_x"), std::string::npos);
  EXPECT_EQ(run("simulate --experiment exp9 --config " + path("cfg.json") + " --out " + path("a")).code, 2);
  EXPECT_EQ(run("simulate --experiment exp1 --config " + path("none.json") + " --out " + path("a")).code, 3);
}

TEST_F(Cli, SimulateExp2WritesScores) {
  write("cfg.json", R"({"alpha_x": 1, "alpha_eps": 1, "n": 300, "t": 30, "reps": 2})");
  ASSERT_EQ(run("simulate --experiment exp2 --config " + path("cfg.json") + " --out " + path("a")).code, 0);
  const std::string lps = read_text(path("a/lps.csv"));
  for (const char* e : {",tail,", ",logit_all,", ",logit_tail,"}) EXPECT_NE(lps.find(e), std::string::npos) << e;
  EXPECT_TRUE(fs::exists(path("a/lps_reps.csv")));
}

TEST_F(Cli, FitCsAndForecast) {
  const std::string csv = pareto_csv(201, 4000);
  write("d.csv", csv);
  const Outcome r = run("fit-cs --data " + path("d.csv") + " --tail-q 0.9 --method hill --out " + path("fit.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("y=0 theta="), std::string::npos);

  const CsvLoad load = cross_section_from_csv(parse_csv(csv));
  const CsFit fit = fit_cs_tail(load.data, 0.9, CsMethod::kHill);
  const CsFit disk = cs_fit_from_json(nlohmann::json::parse(read_text(path("fit.json"))));
  for (int y = 0; y < 2; ++y) {
    std::vector<double> sub;
    for (std::size_t i = 0; i < load.data.size(); ++i) {
      if (load.data.y[i] == y) sub.push_back(load.data.x[i]);
    }
    EXPECT_NEAR(disk.theta[y][0], oracle::hill(sub, oracle::sorted_quantile(sub, 0.9)), 1e-9);
  }

  ASSERT_EQ(run("forecast --fit " + path("fit.json") + " --data " + path("d.csv") + " --out " + path("f.csv")).code, 0);
  const ForecastSet fc = forecasts_from_csv(parse_csv(read_text(path("f.csv"))));
  ASSERT_EQ(fc.records.size(), load.data.size());
  for (std::size_t i = 0; i < fc.records.size(); ++i) {
    const double p = predict_prob_cs(fit, load.data.x[i], Vector::Ones(1));
    EXPECT_NEAR(fc.records[i].p_hat, p, 1e-9 * std::max(p, 1e-3));
    EXPECT_EQ(fc.records[i].y, load.data.y[i]);
  }

  const Outcome ev = run("evaluate --forecasts " + path("f.csv") + " " + path("f.csv") + " --pairwise");
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(ev.out.rfind("file,sum_lps,mean_lps,n\n", 0), 0u);
  EXPECT_NE(ev.out.find("file,reference,mean_diff"), std::string::npos);
}

TEST_F(Cli, FitCsRejectsNonPositiveX) {
  write("d.csv", "y,x\n1,2\n0,3\n1,0\n");
  const Outcome r = run("fit-cs --data " + path("d.csv") + " --tail-q 0.9 --out " + path("fit.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("row 4"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("fit.json")));
}

TEST_F(Cli, FitPanelModes) {
  const std::string csv = panel_csv(202, 300, 6);
  write("p.csv", csv);
  const Outcome r = run("fit-panel --data " + path("p.csv") + " --mode conditional --tail-q 0.7 --out " + path("c.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const PanelFit in_process = fit_panel_conditional(panel_from_csv(parse_csv(csv)).panel, 0.7);
  const PanelFit disk = panel_fit_from_json(nlohmann::json::parse(read_text(path("c.json"))));
  EXPECT_NEAR(disk.theta_star[0], in_process.theta_star[0], 1e-12);

  ASSERT_EQ(run("fit-panel --data " + path("p.csv") + " --mode fe --tail-q 0.7 --out " + path("fe.json")).code, 0);
  ASSERT_EQ(run("forecast --fit " + path("fe.json") + " --data " + path("p.csv") + " --out " + path("f.csv")).code, 0);
  EXPECT_EQ(read_text(path("f.csv")).rfind("unit,p_hat,y_realized\n", 0), 0u);
  EXPECT_EQ(run("fit-panel --data " + path("p.csv") + " --mode dynamic --tail-q 0.1 --out " + path("d.json")).code, 0);

  write("flat.csv", panel_csv(203, 50, 6, true));
  const Outcome flat = run("fit-panel --data " + path("flat.csv") + " --mode fe --tail-q 0.7 --out " + path("x.json"));
  EXPECT_EQ(flat.code, 4);
  EXPECT_NE(flat.err.find("no contributing units"), std::string::npos) << flat.err;

  write("short.csv", panel_csv(204, 50, 4));
  const Outcome dyn = run("fit-panel --data " + path("short.csv") + " --mode dynamic --tail-q 0.5 --out " + path("x.json"));
  EXPECT_EQ(dyn.code, 2);
  EXPECT_NE(dyn.err.find("requires at least five periods"), std::string::npos) << dyn.err;
}

TEST_F(Cli, LogLog) {
  write("d.csv", pareto_csv(205, 500));
  ASSERT_EQ(run("loglog --data " + path("d.csv") + " --by-y --out " + path("l.csv")).code, 0);
  const CsvTable t = parse_csv(read_text(path("l.csv")));
  EXPECT_EQ(t.header, (std::vector<std::string>{"group", "log_x", "log_survival"}));
  EXPECT_EQ(t.rows.size(), 1000u);
  EXPECT_EQ(t.rows.front()[0], "all");
  EXPECT_EQ(t.rows.back()[0], "1");
}
