#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fbsq/diagnostics.hpp"

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

/// Runs the CLI with stdout captured to a file.
Result run(const std::string& args) {
  const auto log = fs::temp_directory_path() / "fbsq_cli_out.txt";
  const std::string cmd = std::string(FBSQ_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream os;
  os << in.rdbuf();
  r.out = os.str();
  return r;
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("fbsq_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("admissible", "[cli]") {
  auto r = run("admissible --alpha 1.0");
  CHECK(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("q in (1, 1.33333)"));
  CHECK_THAT(r.out, ContainsSubstring("s0 in (1, 4/q - 2)"));
  CHECK_THAT(r.out, ContainsSubstring("p > 8"));

  r = run("admissible --alpha 0.5");
  CHECK(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("empty region"));
  CHECK_THAT(r.out, ContainsSubstring("alpha_lower"));

  r = run("admissible --scan 0.7:1.0:0.05 --q-steps 20 --s0-steps 30");
  CHECK(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  int rows = 0;
  std::getline(lines, line);
  CHECK_THAT(line, ContainsSubstring("alpha,nonempty"));
  while (std::getline(lines, line)) {
    ++rows;
    CHECK_THAT(line, ContainsSubstring(",true,"));
  }
  CHECK(rows == 7);

  CHECK(run("admissible").code == 1);
  CHECK(run("admissible --alpha banana").code == 1);
  CHECK(run("admissible --scan 1:0.5:0.1").code == 1);
}

TEST_CASE("fit-decay", "[cli]") {
  const auto dir = scratch("fit");
  {
    std::ofstream csv(dir / "series.csv");
    csv << "t,theta_Hdot(s=0)\r\n";
    for (int k = 0; k <= 200; ++k) {
      const double t = 0.05 * k;
      csv << t << ',' << 2.5 * std::pow(fbsq::bracket(t), -1.25) << "\r\n";
    }
  }
  const auto csv = (dir / "series.csv").string();
  auto r = run("fit-decay " + csv + " --alpha 0.8 --s0 1.5 --window 1:8 --box-length 1e4");
  REQUIRE(r.code == 0);
  const auto slope_at = r.out.find("\"fitted_slope\": ");
  REQUIRE(slope_at != std::string::npos);
  const double slope = std::stod(r.out.substr(slope_at + 16));
  CHECK(std::abs(slope + 1.25) < 1e-6);

  CHECK(run("fit-decay " + csv + " --alpha 0.8 --s0 1.5 --window 1:8 --box-length 100").code == 4);
  CHECK(run("fit-decay " + csv + " --alpha 0.8 --s0 1.5 --window 0.5:8 --box-length 1e4").code == 4);
  CHECK(run("fit-decay " + csv + " --alpha 0.8 --s0 1.5 --window 1:8").code == 1);  // no box length anywhere
  CHECK(run("fit-decay " + (dir / "missing.csv").string() + " --alpha 0.8 --s0 1.5 --box-length 1e4").code == 3);
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "t,other\r\n0,1\r\n";
  }
  CHECK(run("fit-decay " + (dir / "bad.csv").string() + " --alpha 0.8 --s0 1.5 --box-length 1e4").code == 1);
}

TEST_CASE("verify-lp", "[cli]") {
  auto r = run("verify-lp --samples 0 --grid 64");
  CHECK(r.code == 0);
  r = run("verify-lp --samples 4 --grid 64");
  CHECK(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("reconstruction: pass"));
  r = run("verify-lp --samples 4 --grid 64 --inject-fault 2");
  CHECK(r.code == 1);
  CHECK_THAT(r.out, ContainsSubstring("reconstruction: FAIL"));
  CHECK(run("verify-lp --grid 32").code == 1);
}

TEST_CASE("simulate", "[cli]") {
  const auto dir = scratch("sim");
  auto r = run("simulate " FBSQ_SOURCE_DIR "/configs/zero.ini -q --out " + (dir / "a").string());
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "a" / "series.csv"));
  CHECK(fs::exists(dir / "a" / "config.ini"));
  CHECK(run("simulate " + (dir / "nope.ini").string()).code == 1);

  {
    std::ofstream cfg(dir / "blowup.ini");
    cfg << "schema = fbsq-config-v1\n[grid]\nn = 64\nbox_length = 16pi\n[init]\namp_theta = 1e300\n"
           "[time]\nsample_every = 1\nt_end = 0.1\n";
  }
  r = run("simulate " + (dir / "blowup.ini").string() + " -q --out " + (dir / "b").string());
  CHECK(r.code == 2);
  CHECK(fs::exists(dir / "b" / "series.csv"));
  CHECK(fs::exists(dir / "b" / "summary.json"));

  // A file where the run directory should go.
  std::ofstream(dir / "occupied") << "x";
  CHECK(run("simulate " FBSQ_SOURCE_DIR "/configs/zero.ini -q --out " + (dir / "occupied").string()).code == 3);
}

TEST_CASE("stability", "[cli]") {
  const auto dir = scratch("stab");
  {
    std::ofstream cfg(dir / "s.ini");
    cfg << "schema = fbsq-config-v1\n[grid]\nn = 64\nbox_length = 8pi\n[init]\nxi_c = 1\namp_u = 0.3\n"
           "[time]\ndt_max = 0.002\nt_end = 0.2\nsample_every = 20\n";
  }
  const auto r = run("stability " + (dir / "s.ini").string() + " --delta 1e-6 --csv " + (dir / "y.csv").string());
  CHECK(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("fitted K"));
  CHECK(fs::exists(dir / "y.csv"));
}
