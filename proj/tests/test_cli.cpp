#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "conecurve/cli.hpp"
#include "conecurve/io.hpp"

namespace fs = std::filesystem;
using conecurve::io::CsvTable;
using conecurve::io::read_csv;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

std::string config(const std::string& name) { return std::string(CONECURVE_CONFIG_DIR) + "/" + name + ".cfg"; }

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("conecurve_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI with stderr folded into the captured output; prefix holds environment assignments.
Outcome run(const std::string& args, const std::string& prefix = "") {
  const std::string cmd = prefix + " " + CONECURVE_CLI_PATH + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return o;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) o.out += buf;
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_footer(const CsvTable& t, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& f : t.footer)
    if (f.rfind(prefix, 0) == 0) ++n;
  return n;
}

bool has_footer(const CsvTable& t, const std::string& prefix) { return count_footer(t, prefix) > 0; }

}  // namespace

TEST(Cli, SimulateWritesTrajectoryAndReport) {
  const auto dir = fresh_dir("simulate");
  const auto o = run("simulate --config " + config("fig1") + " --out " + dir.string());
  ASSERT_EQ(o.code, 0) << o.out;
  const CsvTable t = read_csv(dir / "fig1_trajectory.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"s", "alpha", "tau", "eta", "k", "constraint_residual"}));
  EXPECT_GT(t.rows.size(), 10u);
  EXPECT_EQ(count_footer(t, "event k_zero"), 1u);
  EXPECT_TRUE(has_footer(t, "stop_minus BlowUp"));
  EXPECT_TRUE(has_footer(t, "stop_plus SpanExhausted"));
  EXPECT_TRUE(fs::exists(dir / "fig1_report.txt"));
  EXPECT_NE(o.out.find("k_zero_count 1"), std::string::npos);
}

TEST(Cli, FixedPointGivesConstantColumns) {
  const auto dir = fresh_dir("fixed");
  const auto o = run("simulate --a 1 --c -0.5 --vector timelike --alpha0 -1 --tau0 0 --eta0 0.5 --span 5 --out " +
                     dir.string());
  ASSERT_EQ(o.code, 0) << o.out;
  const CsvTable t = read_csv(dir / "simulate_trajectory.csv");
  ASSERT_GT(t.rows.size(), 2u);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    EXPECT_EQ(t.number(r, 1), -1.0);
    EXPECT_EQ(t.number(r, 2), 0.0);
    EXPECT_EQ(t.number(r, 3), 0.5);
  }
}

TEST(Cli, InverseFlowRecordsBarrier) {
  const auto dir = fresh_dir("barrier");
  const auto o = run("simulate --flow icf --a 1 --c 1 --vector timelike --alpha0 -1 --tau0 -0.5 --eta0 0.625 --out " +
                     dir.string());
  ASSERT_EQ(o.code, 0) << o.out;
  EXPECT_NE(o.out.find("SingularBarrier"), std::string::npos) << o.out;
  EXPECT_TRUE(has_footer(read_csv(dir / "simulate_trajectory.csv"), "stop_plus SingularBarrier") ||
              has_footer(read_csv(dir / "simulate_trajectory.csv"), "stop_minus SingularBarrier"));
}

TEST(Cli, ExitCodes) {
  const auto dir = fresh_dir("codes").string();
  EXPECT_EQ(run("simulate --config " + config("fig1") + " --eta0 0.7 --out " + dir).code, 2);
  EXPECT_EQ(run("simulate --bogus").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("simulate --config /nonexistent.cfg").code, 2);
  EXPECT_EQ(run("simulate --vector sideways").code, 2);
  EXPECT_EQ(run("homothety --k 0 --out " + dir).code, 2);
  EXPECT_EQ(run("homothety --out " + dir).code, 2);
  // a window of length 0.6 is too short for the checks to mean anything
  EXPECT_EQ(run("verify --config " + config("fig1") + " --span 0.3 --out " + dir).code, 1);
  // the inverse flow cannot start on c + a tau = 0
  EXPECT_EQ(run("simulate --flow icf --c -0.5 --alpha0 -1 --tau0 0.5 --eta0 0.625 --out " + dir).code, 3);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, OffConstraintMessageNamesField) {
  const auto o = run("simulate --config " + config("fig1") + " --eta0 0.7 --out " + fresh_dir("msg").string());
  EXPECT_NE(o.out.find("NotOnConstraint"), std::string::npos) << o.out;
}

TEST(Cli, ReconstructWritesComponents) {
  const auto dir = fresh_dir("reconstruct");
  const auto o = run("reconstruct --config " + config("fig3") + " --svg --out " + dir.string());
  ASSERT_EQ(o.code, 0) << o.out;
  const CsvTable curve = read_csv(dir / "fig3_curve.csv");
  EXPECT_EQ(curve.header, (std::vector<std::string>{"s", "x1", "x2", "x3", "y1", "y2", "y3", "k"}));
  std::size_t csv = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv") ++csv;
  EXPECT_EQ(csv, 4u);
  for (int i = 1; i <= 3; ++i) EXPECT_TRUE(fs::exists(dir / ("fig3_icf_" + std::to_string(i) + ".csv")));
  const std::string svg = slurp(dir / "fig3.svg");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Cli, ReconstructFigureComponentCounts) {
  for (auto [name, n] : {std::pair{"fig1", 2}, std::pair{"fig8", 2}}) {
    const auto dir = fresh_dir(std::string("count_") + name);
    const auto o = run(std::string("reconstruct --config ") + config(name) + " --out " + dir.string());
    ASSERT_EQ(o.code, 0) << o.out;
    EXPECT_NE(o.out.find("icf components " + std::to_string(n)), std::string::npos) << o.out;
    EXPECT_FALSE(fs::exists(dir / (std::string(name) + "_icf_" + std::to_string(n + 1) + ".csv")));
  }
}

TEST(Cli, HomothetyTable) {
  const auto dir = fresh_dir("homothety");
  const auto o = run("homothety --k -1 --t 0,0.49,0.6 --name h --out " + dir.string());
  ASSERT_EQ(o.code, 0) << o.out;
  const CsvTable t = read_csv(dir / "h_homothety.csv");
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.number(0, 1), 1.0);
  EXPECT_NEAR(t.number(1, 1), std::sqrt(0.02), 1e-12);
  EXPECT_EQ(t.number(1, 3), 1.0);
  EXPECT_EQ(t.number(2, 3), 0.0);
  EXPECT_TRUE(std::isnan(t.number(2, 1)));
  const auto unit = run("homothety --k 1 --t 0 --name u --out " + dir.string());
  ASSERT_EQ(unit.code, 0);
  const CsvTable u = read_csv(dir / "u_homothety.csv");
  EXPECT_EQ(u.number(0, 1), 1.0);
  EXPECT_EQ(u.number(0, 2), 1.0);
}

TEST(Cli, VerifyPassesOnFigureConfig) {
  const auto dir = fresh_dir("verify");
  const auto o = run("verify --config " + config("fig1") + " --out " + dir.string());
  EXPECT_EQ(o.code, 0) << o.out;
  const CsvTable t = read_csv(dir / "fig1_verify.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"check", "value", "threshold", "status"}));
  bool oracle = false;
  for (const auto& r : t.rows) {
    EXPECT_EQ(r.at(3), "PASS") << r.at(0);
    if (r.at(0) == "soliton_oracle") oracle = conecurve::io::parse_double(r.at(1)) <= 1e-6;
  }
  EXPECT_TRUE(oracle);
}

TEST(Cli, SolitonOracle) {
  const auto dir = fresh_dir("soliton");
  const auto o = run("soliton --config " + config("soliton") + " --svg --out " + dir.string());
  ASSERT_EQ(o.code, 0) << o.out;
  const CsvTable t = read_csv(dir / "soliton_soliton_1.csv");
  EXPECT_EQ(t.rows.size(), 401u);
  EXPECT_TRUE(fs::exists(dir / "soliton_soliton.svg"));
  const auto pos = o.out.find("max_error_vs_integration ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_LE(std::stod(o.out.substr(pos + 25)), 1e-6);
}

TEST(Cli, SweepRowsAndSummary) {
  const auto dir = fresh_dir("sweep");
  const std::string cfg = (dir / "small.cfg").string();
  std::ofstream(cfg) << "name = small\nvector = timelike\nsweep_c = -0.5, 0, 4\nsweep_runs = 4\nsweep_horizon = 20\n";
  const auto o = run("sweep --config " + cfg + " --out " + dir.string());
  ASSERT_EQ(o.code, 0) << o.out;
  const CsvTable t = read_csv(dir / "small_sweep.csv");
  ASSERT_EQ(t.rows.size(), 12u);
  const auto zeros = t.column("k_zeros"), err = t.column("error");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    EXPECT_EQ(t.rows[r][err], "");
    EXPECT_LE(t.number(r, zeros), 2.0);
  }
  std::size_t rows = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "small_sweep_rows")) ++rows;
  EXPECT_EQ(rows, 12u);
  EXPECT_TRUE(has_footer(t, "rows=12"));
}

TEST(Cli, SweepReportsPerRowErrors) {
  const auto dir = fresh_dir("sweep_err");
  const std::string cfg = (dir / "bad.cfg").string();
  // rows with a = -1 fail validation without stopping the sweep
  std::ofstream(cfg) << "name = bad\nvector = timelike\nsweep_a = 1, -1\nsweep_c = 0\nsweep_runs = 2\nsweep_horizon = 5\n";
  const auto o = run("sweep --config " + cfg + " --out " + dir.string());
  ASSERT_EQ(o.code, 0) << o.out;
  const CsvTable t = read_csv(dir / "bad_sweep.csv");
  ASSERT_EQ(t.rows.size(), 4u);
  const auto err = t.column("error");
  EXPECT_EQ(t.rows[0][err], "");
  EXPECT_EQ(t.rows[2][err], "InvalidConfig");
}

TEST(Cli, EnvironmentOverridesOut) {
  const auto flag_dir = fresh_dir("env_flag");
  const auto env_dir = fresh_dir("env_var");
  const auto o = run("simulate --config " + config("fig1") + " --out " + flag_dir.string(),
                     "CONECURVE_OUT=" + env_dir.string());
  ASSERT_EQ(o.code, 0) << o.out;
  EXPECT_TRUE(fs::exists(env_dir / "fig1_trajectory.csv"));
  EXPECT_FALSE(fs::exists(flag_dir / "fig1_trajectory.csv"));
}

TEST(Cli, IdenticalConfigAndSeedGiveIdenticalBytes) {
  const auto a = fresh_dir("bytes_a"), b = fresh_dir("bytes_b");
  for (const auto& dir : {a, b}) {
    ASSERT_EQ(run("simulate --vector spacelike --seed 42 --span 10 --name r --out " + dir.string()).code, 0);
    ASSERT_EQ(run("reconstruct --config " + config("fig8") + " --svg --out " + dir.string()).code, 0);
    const std::string cfg = (dir / "s.cfg").string();
    std::ofstream(cfg) << "name = s\nsweep_c = -0.5, 4\nsweep_runs = 3\nsweep_horizon = 10\nseed = 9\n";
    ASSERT_EQ(run("sweep --config " + cfg + " --out " + dir.string()).code, 0);
  }
  for (const char* f : {"r_trajectory.csv", "r_report.txt", "fig8_curve.csv", "fig8_icf_1.csv", "fig8.svg",
                        "s_sweep.csv"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_FALSE(slurp(a / "r_trajectory.csv").empty());
  const auto other = fresh_dir("bytes_c");
  ASSERT_EQ(run("simulate --vector spacelike --seed 43 --span 10 --name r --out " + other.string()).code, 0);
  EXPECT_NE(slurp(a / "r_trajectory.csv"), slurp(other / "r_trajectory.csv"));
}

TEST(Cli, CsvOutputReparsesBitExactly) {
  const auto dir = fresh_dir("reparse");
  ASSERT_EQ(run("reconstruct --config " + config("fig1") + " --out " + dir.string()).code, 0);
  const std::string text = slurp(dir / "fig1_curve.csv");
  const CsvTable t = read_csv(dir / "fig1_curve.csv");
  EXPECT_EQ(conecurve::io::to_csv(t), text);
  for (const auto& row : t.rows)
    for (const auto& cell : row) EXPECT_EQ(conecurve::io::format_double(conecurve::io::parse_double(cell)), cell);
}

TEST(Cli, ErrorCodesMapToExitCodes) {
  using conecurve::Error;
  using conecurve::ErrorCode;
  using conecurve::cli::exit_code_for;
  EXPECT_EQ(exit_code_for(Error(ErrorCode::NoFrameFound, "x")), 4);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::NotOnConstraint, "x")), 2);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::InvalidConfig, "x")), 2);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::OutOfDomain, "x")), 2);
}
