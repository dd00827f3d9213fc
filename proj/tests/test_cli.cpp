#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "vid2ode/util.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  std::string cmd = std::string(VID2ODE_CLI_PATH) + " " + args +
                    " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("help succeeds, bad usage exits 2") {
  CHECK(run("--help") == 0);
  CHECK(run("synth --help") == 0);
  CHECK(run("bogus-subcommand") == 2);
  CHECK(run("synth --no-such-flag") == 2);
  CHECK(run("discover") == 2);              // --data is required
  CHECK(run("synth --system lorenz") == 2); // unknown system
}

TEST_CASE("full pipeline through the cli") {
  TempDir tmp("cli");

  // synth: deterministic manifests for a fixed seed.
  REQUIRE(run("synth --system duffing --videos 1 --frames 12 --seed 3 --out " +
              tmp.str("d1")) == 0);
  REQUIRE(run("synth --system duffing --videos 1 --frames 12 --seed 3 --out " +
              tmp.str("d2")) == 0);
  CHECK(vid2ode::read_text_file(tmp.str("d1/manifest.json")) ==
        vid2ode::read_text_file(tmp.str("d2/manifest.json")));
  CHECK(fs::exists(tmp.str("d1/video_000/frame_00000.png")));

  // discover: tiny schedule, writes the run artifacts and clears .incomplete.
  vid2ode::write_text_file(
      tmp.str("cfg.json"),
      R"({"epochs_pretrain":1,"epochs_total":1,"epochs_threshold":1,)"
      R"("epochs_refine":1,"q":2,"threshold_interval":1})");
  REQUIRE(run("discover --data " + tmp.str("d1") + " --out " + tmp.str("run") +
              " --config " + tmp.str("cfg.json")) == 0);
  CHECK(fs::exists(tmp.str("run/report.json")));
  CHECK(fs::exists(tmp.str("run/resolved_config.json")));
  CHECK(fs::exists(tmp.str("run/coefficients.csv")));
  CHECK(fs::exists(tmp.str("run/coefficients_rescaled.csv")));
  CHECK(fs::exists(tmp.str("run/checkpoint.bin")));
  CHECK(fs::exists(tmp.str("run/loss_traces.png")));
  CHECK_FALSE(fs::exists(tmp.str("run/.incomplete")));

  // report: replays a saved run summary.
  CHECK(run("report --in " + tmp.str("run/report.json")) == 0);
  CHECK(run("report --in " + tmp.str("d1/manifest.json")) == 1);

  // baseline: two-step report next to the discovery outputs.
  vid2ode::write_text_file(tmp.str("bcfg.json"), R"({"pretrain_epochs":1})");
  CHECK(run("baseline --data " + tmp.str("d1") + " --out " + tmp.str("bl") +
            " --config " + tmp.str("bcfg.json")) == 0);
  CHECK(fs::exists(tmp.str("bl/report.json")));

  // ablate: writes the ablation comparison row.
  CHECK(run("ablate --data " + tmp.str("d1") + " --out " + tmp.str("ab") +
            " --config " + tmp.str("cfg.json") + " --mode no_int_loss") == 0);
  CHECK(fs::exists(tmp.str("ab/report.json")));
  CHECK(fs::exists(tmp.str("ab/ablation.csv")));

  // config with an unknown key is rejected before any output is created.
  vid2ode::write_text_file(tmp.str("bad.json"), R"({"learning_rate":0.1})");
  CHECK(run("discover --data " + tmp.str("d1") + " --out " + tmp.str("x") +
            " --config " + tmp.str("bad.json")) == 2);
  CHECK_FALSE(fs::exists(tmp.str("x/report.json")));
}

TEST_CASE("gradcheck subcommand passes at tolerance") {
  CHECK(run("gradcheck --system duffing --frames 10 --videos 1") == 0);
}
