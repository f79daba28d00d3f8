#include "doctest.h"

#include <sstream>

#include <nlohmann/json.hpp>

#include "emosem/cli.hpp"
#include "emosem/corpus.hpp"
#include "test_util.hpp"

using namespace emosem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = run_cli(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

}  // namespace

TEST_CASE("help and usage errors") {
  const auto help = cli({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("synth") != std::string::npos);
  CHECK(cli({"synth", "--help"}).code == kExitOk);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"stats"}).code == kExitUsage);
}

TEST_CASE("synth then stats") {
  const auto dir = testing::scratch_dir("cli_synth");
  const auto path = (dir / "c.jsonl").string();
  const auto s = cli({"synth", "--participants", "4", "--noise", "0", "--descriptive-signal", "1",
                      "--expressive-signal", "1", "--out", path});
  REQUIRE(s.code == kExitOk);
  CHECK(s.out.find("24 records") != std::string::npos);
  CHECK(load_corpus(path).records.size() == 24);

  const auto st = cli({"stats", path});
  REQUIRE(st.code == kExitOk);
  const auto j = nlohmann::json::parse(st.out);
  CHECK(j["n_records"] == 24);
  CHECK(j["rate_intended_experienced"] == 1.0);
  CHECK(j["rate_other_emotions"] == 0.0);
  CHECK(j["rate_intended_highest"] == 1.0);
  CHECK(j["alpha"] == 1.0);

  const auto in = cli({"ingest", path});
  REQUIRE(in.code == kExitOk);
  CHECK(nlohmann::json::parse(in.out)["records"] == 24);

  CHECK(cli({"synth", "--noise", "2", "--out", path}).code == kExitUsage);
}

TEST_CASE("segment writes one row per record") {
  const auto dir = testing::scratch_dir("cli_segment");
  const auto corpus = (dir / "c.jsonl").string();
  REQUIRE(cli({"synth", "--participants", "3", "--out", corpus}).code == kExitOk);
  const auto seg = (dir / "seg.jsonl").string();
  REQUIRE(cli({"segment", corpus, "--backend", "mock-rule", "--out", seg}).code == kExitOk);
  std::istringstream rows(testing::read_file(seg));
  std::size_t n = 0;
  for (std::string line; std::getline(rows, line);) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("descriptive"));
    ++n;
  }
  CHECK(n == 18);
}

TEST_CASE("missing inputs") {
  const auto dir = testing::scratch_dir("cli_missing");
  const auto cfg = (dir / "absent.toml").string();
  const auto r = cli({"--config", cfg, "stats", "x.jsonl"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("absent.toml") != std::string::npos);

  const auto m = cli({"stats", (dir / "nope.jsonl").string()});
  CHECK(m.code == kExitStageFailure);
  CHECK(m.err.find("ingest") != std::string::npos);
}

TEST_CASE("run with a config file") {
  const auto dir = testing::scratch_dir("cli_run");
  testing::write_text(dir / "cfg.toml", "seeds = [1]\nconditions = [\"full\"]\n[synth]\nn_participants = 6\n");
  const auto out = dir / "out";
  const auto r = cli({"--config", (dir / "cfg.toml").string(), "--out", out.string(), "run"});
  CHECK(r.code == kExitOk);
  CHECK(std::filesystem::exists(out / "report.json"));
  CHECK(std::filesystem::exists(out / "metrics" / "metrics.json"));
}
