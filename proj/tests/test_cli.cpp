#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "bcm/events.hpp"
#include "bcm/harness.hpp"
#include "bcm/trend_mle.hpp"

using namespace bcm;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(BCM_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("bcm_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Writes a simulated trial as it looks at the end of the study.
  std::string write_trial(int n, const ModelParams& p, std::uint64_t seed) {
    TrialDesign d;
    d.n_total = n;
    Rng rng = replication_stream(seed, 0);
    trial_ = simulate_trial(d, p, rng);
    const auto path = (dir_ / "events.csv").string();
    std::ofstream out(path);
    out << std::setprecision(17) << "subject_id,group,exposure_years,event_times,entry_years\n";
    for (std::size_t i = 0; i < trial_.subjects.size(); ++i) {
      const auto& s = trial_.subjects[i];
      out << "S" << i << ',' << (s.group == Group::Treatment ? 'T' : 'C') << ','
          << std::min(d.max_followup, d.study_duration - s.entry) << ',';
      for (std::size_t k = 0; k < s.events.size(); ++k) out << (k ? ";" : "") << s.events[k];
      out << ',' << s.entry << '\n';
    }
    return path;
  }

  fs::path dir_;
  Trial trial_;
};

}  // namespace

TEST_F(Cli, TargetInfo) {
  const auto r = run("target-info --alpha 0.025 --power 0.9 --rate-ratio 0.5");
  EXPECT_EQ(r.code, 0);
  EXPECT_NEAR(std::stod(r.out), 21.87, 0.005);
}

TEST_F(Cli, FitRoundTrip) {
  const ModelParams truth{0.55087856597702343895, -1.0, std::log(0.5), 1.25};
  const auto path = write_trial(2000, truth, 31);
  const auto r = run("fit " + path);
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  const auto& t = j["trend"];
  ASSERT_TRUE(t["converged"].get<bool>());
  const double se = 1.0 / std::sqrt(t["information_beta"].get<double>());
  EXPECT_LT(std::abs(t["beta"].get<double>() - truth.beta), 3 * se);
  EXPECT_TRUE(t["reject"].get<bool>());
  EXPECT_EQ(j["subjects"].get<int>(), 2000);
  // same answer as the library on the same data
  const auto direct = fit_trend(TrialIndex(trial_).grouped(4.0));
  EXPECT_NEAR(t["beta"].get<double>(), direct.estimates.beta, 1e-8);
}

TEST_F(Cli, BlindedFit) {
  const auto path = write_trial(500, {0.55, -1.0, std::log(0.5), 1.25}, 32);
  for (const char* proc : {"trend-lump", "trend-mix", "const-lump", "const-mix"}) {
    const auto r = run("fit " + path + " --blinded --beta-h1 -0.6931471805599453 --procedure " + proc);
    ASSERT_EQ(r.code, 0) << proc;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_TRUE(j["converged"].get<bool>()) << proc;
    EXPECT_GT(j["information"].get<double>(), 0.0) << proc;
  }
  EXPECT_EQ(run("fit " + path + " --blinded").code, 2);
}

TEST_F(Cli, CurveMatchesLibrary) {
  const auto path = write_trial(300, {0.55, -1.0, std::log(0.5), 1.25}, 33);
  const auto csv = (dir_ / "curve.csv").string();
  ASSERT_EQ(run("curve " + path + " --beta-h1 -0.6931471805599453 --procedure trend-lump --start 1 --step 0.5 --end 4.5 --out " + csv)
                .code,
            0);
  const auto data = load_event_file(path);
  const auto expected =
      information_curve(data, std::log(0.5), AllocationWeights::balanced(), {Procedure::TrendLump}, monitoring_grid(1.0, 0.5, 4.5));
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "time,procedure,information");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ASSERT_LT(rows, expected.size());
    const double info = std::stod(line.substr(line.rfind(',') + 1));
    EXPECT_NEAR(info, *expected[rows].info, 1e-6 * info);
    ++rows;
  }
  EXPECT_EQ(rows, expected.size());
  // flat once every subject has finished follow-up
  EXPECT_NEAR(*expected.back().info, *expected[expected.size() - 2].info, 1e-6 * *expected.back().info);
}

TEST_F(Cli, SimulateWritesReport) {
  const auto cfg = (dir_ / "s.cfg").string();
  std::ofstream(cfg) << "[scenario]\nlabel = tiny\nrate_ratio_h1 = 0.5\ntrue_rate_ratio = 0.5\ntrend_alpha1 = -1\n"
                        "cum_rate_control_2y = 1.5\nshape_phi = 1.25\nn_total = 40\nrecruitment_years = 2\n"
                        "max_followup_years = 2\nstudy_years = 4\nmonitor_start_years = 0.5\nprocedure = fixed\n"
                        "power_target = 0.8\nalpha_one_sided = 0.025\nreplications = 4\nseed = 3\n";
  const auto out = (dir_ / "report").string();
  const auto r = run("simulate " + cfg + " --out " + out + " --workers 2");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("tiny"), std::string::npos);
  EXPECT_TRUE(fs::exists(fs::path(out) / "summary.csv"));
  EXPECT_TRUE(fs::exists(fs::path(out) / "summary.json"));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("fit /nonexistent/events.csv").code, 4);
  EXPECT_EQ(run("target-info --rate-ratio 1").code, 2);
  EXPECT_EQ(run("nonsense").code, 2);
  const auto bad = (dir_ / "bad.cfg").string();
  std::ofstream(bad) << "[scenario]\nrate_ratio_h1 = 0.5\n";
  EXPECT_EQ(run("simulate " + bad).code, 2);
  // a blinded file with one subject cannot be fitted
  const auto one = (dir_ / "one.csv").string();
  std::ofstream(one) << "subject_id,exposure_years,event_times\n1,1.0,0.5\n";
  EXPECT_EQ(run("fit " + one + " --blinded --beta-h1 -0.5").code, 3);
}
