#include "support.hpp"

#include "tsfilt/cli.hpp"
#include "tsfilt/report.hpp"

#include <doctest.h>

#include <regex>

using namespace tsfilt;
using namespace tsfilt::testing;

namespace {

std::string ex1() { return data_file("example1.json").string(); }

double parse_gamma(const std::string& out) {
  std::smatch m;
  REQUIRE(std::regex_search(out, m, std::regex("gamma_min = ([0-9.eE+-]+)")));
  return std::stod(m[1].str());
}

const std::string& th1_report() {
  static const std::string path = [] {
    const auto p = temp_path("cli-ex1-th1.report.json").string();
    const auto r = cli({"synth", ex1(), "--theorem", "1", "-o", p});
    REQUIRE(r.code == kExitOk);
    return p;
  }();
  return path;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("validate") {
    CHECK(cli({"validate", ex1()}).code == kExitOk);
    const auto rho = cli({"validate", test_file("bad_rho.json").string()});
    CHECK(rho.code == kExitValidation);
    CHECK(rho.err.find("delay derivative bound must be < 1") != std::string::npos);
    const auto dims = cli({"validate", test_file("bad_dims.json").string()});
    CHECK(dims.code == kExitValidation);
    CHECK(dims.err.find("A is 3x2, expected 2x2") != std::string::npos);
    CHECK(cli({"validate", test_file("missing.json").string()}).code == kExitValidation);
  }

  TEST_CASE("usage errors") {
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    CHECK(cli({"synth", ex1(), "--theorem", "3"}).code == kExitUsage);
    CHECK(cli({"--help"}).code == kExitOk);
    CHECK(cli({"synth", "--help"}).code == kExitOk);
  }

  TEST_CASE("synth writes a report") {
    const auto p = temp_path("cli-synth.report.json").string();
    const auto r = cli({"synth", ex1(), "--theorem", "1", "--full-precision", "-o", p});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("status: optimal") != std::string::npos);
    const double g = parse_gamma(r.out);
    CHECK(g > 0.0);
    CHECK(read_report_file(p).gamma == doctest::Approx(g).epsilon(1e-15));
  }

  TEST_CASE("synth rejects bad parameters") {
    CHECK(cli({"synth", ex1(), "--rho", "1.5", "-o", temp_path("x.json").string()}).code == kExitValidation);
    CHECK(cli({"synth", ex1(), "--h", "-1", "-o", temp_path("x.json").string()}).code == kExitValidation);
    CHECK(cli({"synth", test_file("bad_dims.json").string()}).code == kExitValidation);
  }

  TEST_CASE("infeasible synthesis exits 3") {
    const auto r = cli({"synth", data_file("example2.json").string(), "--theorem", "1", "--h", "0.8", "--upsilon",
                        "1", "-o", temp_path("ex2-th1.json").string()});
    MESSAGE(r.out);
    CHECK(r.code == kExitInfeasible);
  }

  TEST_CASE("sweep") {
    const auto bad = cli({"sweep", test_file("sweep_empty_upsilon.json").string()});
    CHECK(bad.code == kExitValidation);
    const auto r = cli({"sweep", test_file("sweep_small.json").string(), "--full-precision"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.rfind("method,h=0.5,h=0.8\n", 0) == 0);
    const auto s = cli({"synth", ex1(), "--theorem", "1", "--h", "0.8", "--upsilon", "2", "--full-precision", "-o",
                        temp_path("cell.json").string()});
    const double g = parse_gamma(s.out);
    std::smatch m;
    REQUIRE(std::regex_search(r.out, m, std::regex("upsilon=2\\),[^,]+,([^\\n]+)")));
    CHECK(std::stod(m[1].str()) == doctest::Approx(g).epsilon(1e-12));
  }

  TEST_CASE("simulate") {
    const auto free = cli({"simulate", ex1(), "--filter", th1_report(), "--scenario", "free"});
    CHECK(free.code == kExitOk);
    CHECK(free.out.find("(<= 1e-3: pass)") != std::string::npos);
    const auto sine = cli({"simulate", ex1(), "--filter", th1_report(), "--scenario", "decaying-sine"});
    CHECK(sine.code == kExitOk);
    CHECK(sine.out.find("(g_emp <= gamma_min: pass)") != std::string::npos);
    const auto csv = temp_path("trace.csv").string();
    CHECK(cli({"simulate", ex1(), "--filter", th1_report(), "--scenario", "noise", "--seed", "4", "-o", csv,
               "--every", "10"})
              .code == kExitOk);
    CHECK(std::filesystem::file_size(csv) > 1000);
    CHECK(cli({"simulate", ex1(), "--filter", temp_path("nope.json").string()}).code != kExitOk);
    CHECK(cli({"simulate", ex1(), "--filter", th1_report(), "--scenario", "chirp"}).code != kExitOk);
  }

  TEST_CASE("verify") {
    const auto r = cli({"verify", ex1(), "--filter", th1_report()});
    MESSAGE(r.out);
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(cli({"verify", ex1(), "--filter", temp_path("nope.json").string()}).code != kExitOk);
  }
}
