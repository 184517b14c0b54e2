// End-to-end checks of the command-line binary: spawn it, capture stdout and
// the exit code, and verify that the causal and closed-form methods agree for
// randomly drawn systems and flag sets.

#include <catch2/catch_amalgamated.hpp>

#include <qvdw/atom_model.hpp>
#include <qvdw/config_io.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <sys/wait.h>

using namespace qvdw;
using nlohmann::json;

namespace {

std::string cli_path() {
  for (const char* p : {"./qvdw", "build/qvdw", "../build/qvdw"})
    if (std::filesystem::exists(p)) return p;
  FAIL("qvdw binary not found; build it first");
  return {};
}

struct CliRun {
  int exit_code = -1;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliRun r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  REQUIRE(status != -1);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string write_config(const PairSystem& sys, const std::string& name) {
  const std::string file =
      (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(file);
  REQUIRE(out.good());
  out << serialize_system(sys);
  REQUIRE(out.good());
  return file;
}

}  // namespace

TEST_CASE("cli: causal and closed-form agree over random flag sets") {
  std::mt19937 rng(20250823);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  for (int iter = 0; iter < 20; ++iter) {
    const double nu_a = 9000.0 + 7000.0 * u01(rng);
    TransitionLine a = TransitionLine::from_cm(nu_a, 0.6 + 1.2 * u01(rng),
                                               1e6 + 9e6 * u01(rng), {}, "A");
    const int n_lines = 1 + int(3.0 * u01(rng));
    std::vector<TransitionLine> b;
    for (int l = 0; l < n_lines; ++l) {
      const double ratio = 0.02 + 0.07 * u01(rng);
      const double nu_b = nu_a * (u01(rng) < 0.5 ? 1.0 + ratio : 1.0 - ratio);
      b.push_back(TransitionLine::from_cm(nu_b, 0.6 + 1.2 * u01(rng),
                                          1e6 + 9e6 * u01(rng), {},
                                          "B" + std::to_string(l)));
    }
    const PairSystem sys(a, b, {0, 0, 1}, {}, "random pair");
    const std::string config = write_config(sys, "cli_roundtrip_system.json");

    const double R_um = 15.0 + 75.0 * u01(rng);
    const double front_ps = 2.0 * R_um * 1e-6 / si::c * 1e12;
    // mostly after the causality front, occasionally before it
    const double u = iter % 7 == 0 ? 0.5 : 1.05 + 2.0 * u01(rng);
    const double T_ps = front_ps * u;

    std::string common = "--system " + config + " --R-um " +
                         std::to_string(R_um) + " --T-ps " +
                         std::to_string(T_ps);
    if (iter % 3 == 0) common += " --joules";

    const CliRun closed = run_cli("eval " + common + " --method closed-form");
    const CliRun causal = run_cli("eval " + common + " --method causal");
    INFO("iter " << iter << " R_um=" << R_um << " T_ps=" << T_ps);
    REQUIRE(closed.exit_code == 0);
    REQUIRE(causal.exit_code == 0);

    const json jc = json::parse(closed.out);
    const json jr = json::parse(causal.out);
    CHECK(jc.at("method") == "closed-form");
    CHECK(jr.at("method") == "contour:causal");

    const double vc = jc.at("value_scaled").get<double>();
    const double vr = jr.at("value_scaled").get<double>();
    // both are the same algebraic expression; near nodes the difference is
    // bounded by rounding relative to the oscillating terms, of size (kR)^4
    const double term_scale = std::pow(a.k() * R_um * 1e-6, 4);
    CHECK_THAT(vc, Catch::Matchers::WithinRel(vr, 1e-9) ||
                       Catch::Matchers::WithinAbs(vr, 1e-12 * term_scale));

    if (iter % 3 == 0) {
      const double wc = jc.at("value_joules").get<double>();
      const double wr = jr.at("value_joules").get<double>();
      CHECK_THAT(wc, Catch::Matchers::WithinRel(wr, 1e-9) ||
                         Catch::Matchers::WithinAbs(wr, 1e-40));
    }
    if (u < 1.0) {
      CHECK(jc.at("value_rad_per_s").get<double>() == 0.0);
      CHECK(jr.at("value_rad_per_s").get<double>() == 0.0);
    }
  }
}

TEST_CASE("cli: --out writes the same report as stdout") {
  TransitionLine a = TransitionLine::from_cm(12578.95, 1.0, 6.0e6, {}, "A");
  TransitionLine b = TransitionLine::from_cm(12985.17, 1.0, 6.0e6, {}, "B");
  const PairSystem sys(a, {b}, {0, 0, 1}, {}, "out test");
  const std::string config = write_config(sys, "cli_roundtrip_system.json");
  const std::string args =
      "eval --system " + config + " --R-um 30 --T-ps 3 --method closed-form";

  const CliRun direct = run_cli(args);
  REQUIRE(direct.exit_code == 0);

  const std::string out_file =
      (std::filesystem::temp_directory_path() / "cli_roundtrip_out.json")
          .string();
  const CliRun redirected = run_cli(args + " --out " + out_file);
  REQUIRE(redirected.exit_code == 0);
  CHECK(redirected.out.empty());

  std::ifstream in(out_file);
  REQUIRE(in.good());
  std::string written((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  CHECK(written == direct.out);
}

TEST_CASE("cli: exit codes distinguish usage and domain errors") {
  TransitionLine a = TransitionLine::from_cm(12578.95, 1.0, 6.0e6, {}, "A");
  TransitionLine b1 = TransitionLine::from_cm(12985.17, 1.0, 6.0e6, {}, "B1");
  TransitionLine b2 = TransitionLine::from_cm(13045.876, 1.0, 6.2e6, {}, "B2");
  const PairSystem sys(a, {b1, b2}, {0, 0, 1}, {}, "exit test");
  const std::string config = write_config(sys, "cli_roundtrip_system.json");

  CHECK(run_cli("eval --R-um 30 --T-ps 3").exit_code == 2);
  CHECK(run_cli("eval --system no_such_file.json --R-um 30 --T-ps 3")
            .exit_code == 2);
  CHECK(run_cli("eval --system " + config + " --R-um 30 --T-ps 3 "
                "--method nonsense").exit_code == 2);
  CHECK(run_cli("eval --system " + config + " --R-um 0 --T-ps 3").exit_code ==
        1);
  // transfer probability needs a single line, this system has two
  CHECK(run_cli("probability --system " + config + " --R-um 30 --T-ps 1")
            .exit_code == 1);
  CHECK(run_cli("eval --system " + config + " --R-um 30 --T-ps 3").exit_code ==
        0);
}
