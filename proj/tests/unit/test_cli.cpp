#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "sid/cli.hpp"
#include "sid/codec.hpp"
#include "sid/experiment.hpp"
#include "test_support.hpp"

using namespace sid;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run sid_run(std::vector<std::string> args) {
  args.insert(args.begin(), "sid");
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

// Two authentic and two synthetic images, a stub descriptor flagging one
// synthetic image, and a split manifest.
struct Workspace {
  testing::TempDir dir{"sid_cli"};

  Workspace() {
    std::filesystem::create_directories(dir / "auth");
    std::filesystem::create_directories(dir / "syn");
    CounterRng rng(1, 2, 3);
    for (int i = 0; i < 5; ++i) {
      write_png(dir / ("auth/" + std::to_string(i) + ".png"), testing::random_image(rng, 48, 40));
      write_png(dir / ("syn/" + std::to_string(i) + ".png"), testing::random_image(rng, 48, 40));
    }
    const json backend = {{"version", 1},
                          {"kind", "stub"},
                          {"id", "scripted"},
                          {"label_space", {"authentic", "synthetic"}},
                          {"script",
                           {{"default", {0.9, 0.1}},
                            {"rules", {{{"source", "syn/1.png"}, {"probabilities", {0.2, 0.8}}},
                                       {{"source", "syn/3.png"}, {"probabilities", {0.2, 0.8}}}}}}}};
    testing::write_file(dir / "stub.json", backend.dump());
  }

  std::string p(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("co2 needs an explicit intensity") {
  const Run ok = sid_run({"co2", "--kwh", "2", "--intensity", "0.5"});
  CHECK(ok.code == kExitOk);
  CHECK(json::parse(ok.out)["estimate"]["emissions_kg"].get<double>() == doctest::Approx(1.0));
  const Run missing = sid_run({"co2", "--kwh", "2"});
  CHECK(missing.code == kExitValidation);
  const json rec = json::parse(missing.err);
  CHECK(rec["error"]["kind"] == "validation_error");
  CHECK(rec["error"]["exit_code"] == kExitValidation);
  CHECK(sid_run({"co2", "--kwh", "-1", "--intensity", "0.5"}).code != kExitOk);
}

TEST_CASE("usage errors exit 2") {
  CHECK(sid_run({"eval", "--bogus"}).code == kExitUsage);
  CHECK(sid_run({}).code == kExitUsage);
}

TEST_CASE("dataset pipeline and eval are reproducible") {
  Workspace ws;
  REQUIRE(sid_run({"dataset", "ingest", "--root", ws.p("auth"), "--label", "authentic", "-o", ws.p("a.jsonl")}).code == 0);
  REQUIRE(sid_run({"dataset", "ingest", "--root", ws.p("syn"), "--label", "synthetic", "-o", ws.p("s.jsonl")}).code == 0);
  REQUIRE(sid_run({"dataset", "merge", "--manifest", ws.p("a.jsonl"), "--manifest", ws.p("s.jsonl"), "-o",
                   ws.p("all.jsonl")}).code == 0);
  CHECK(sid_run({"dataset", "split", "--manifest", ws.p("all.jsonl"), "-o", ws.p("x.jsonl")}).code ==
        kExitValidation);  // no seed
  REQUIRE(sid_run({"dataset", "split", "--manifest", ws.p("all.jsonl"), "--seed", "5", "-o", ws.p("split.jsonl")})
              .code == 0);
  CHECK(sid_run({"dataset", "validate", "--manifest", ws.p("split.jsonl")}).code == 0);

  const std::vector<std::string> eval = {"eval", "--backend", ws.p("stub.json"), "--manifest", ws.p("all.jsonl"),
                                         "--seed", "1", "--patch-side", "32"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> a = eval;
    a.insert(a.end(), extra.begin(), extra.end());
    return sid_run(a);
  };
  const Run a = with({"--workers", "1"});
  const Run b = with({"--workers", "1"});
  const Run c = with({"--workers", "4"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
  const json doc = json::parse(a.out);
  CHECK(doc["provenance"]["tool"] == "sid");
  CHECK(doc["provenance"]["config_hash"].get<std::string>().size() == 64);
  CHECK(doc["report"]["per_class_recall"]["synthetic"].get<double>() == doctest::Approx(40.0));
  CHECK(doc["report"]["per_class_recall"]["authentic"].get<double>() == doctest::Approx(100.0));

  // A config file yields the same artifact as the equivalent flags.
  const json cfg = {{"schema_version", 1}, {"backend", "stub.json"}, {"manifest", "all.jsonl"},
                    {"seed", 1},           {"patch_side", 32}};
  testing::write_file(ws.dir / "eval.json", cfg.dump());
  const Run d = sid_run({"eval", "--config", ws.p("eval.json")});
  REQUIRE(d.code == 0);
  CHECK(json::parse(d.out)["report"] == doc["report"]);

  const json bad = {{"schema_version", 2}, {"backend", "stub.json"}, {"manifest", "all.jsonl"}, {"seed", 1}};
  testing::write_file(ws.dir / "bad.json", bad.dump());
  CHECK(sid_run({"eval", "--config", ws.p("bad.json")}).code == kExitValidation);
  CHECK(sid_run({"eval", "--backend", ws.p("nope.json"), "--manifest", ws.p("all.jsonl"), "--seed", "1"}).code ==
        kExitValidation);
}

TEST_CASE("cross writes a matrix with averages") {
  Workspace ws;
  REQUIRE(sid_run({"dataset", "ingest", "--root", ws.p("syn"), "--label", "synthetic", "-o", ws.p("s.jsonl")}).code == 0);
  const json cfg = {{"schema_version", 1},
                    {"seed", 3},
                    {"patch_side", 32},
                    {"runs", {{{"id", "stub"}, {"backend", "stub.json"}}}},
                    {"datasets", {{{"id", "syn"}, {"manifest", "s.jsonl"}}}}};
  testing::write_file(ws.dir / "cross.json", cfg.dump());
  const Run r = sid_run({"cross", "--config", ws.p("cross.json"), "--csv", ws.p("m.csv")});
  REQUIRE(r.code == 0);
  const std::string csv = testing::read_text(ws.dir / "m.csv");
  CHECK(csv.find("40.00") != std::string::npos);
  CHECK(csv.find("Avg.") != std::string::npos);
}

TEST_CASE("config hash ignores run-environment keys") {
  const json a = {{"seed", 1}, {"workers", 1}};
  const json b = {{"seed", 1}, {"workers", 8}, {"output", "x"}};
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(json{{"seed", 2}}));
}

TEST_CASE("shipped presets parse") {
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(SID_PRESET_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    CAPTURE(entry.path().filename().string());
    const json doc = json::parse(testing::read_text(entry.path()));
    CHECK(doc.at("schema_version") == 1);
    CHECK(doc.at("seed").is_number_unsigned());
    if (doc.contains("voting")) CHECK_NOTHROW(parse_voting_policy(doc.at("voting")));
    if (doc.contains("augmentation")) CHECK(parse_augmentation(doc.at("augmentation"), 1));
    if (doc.contains("train")) CHECK_NOTHROW(parse_train_config(doc.at("train"), 1));
    if (doc.contains("mode")) CHECK(parse_eval_mode(doc.at("mode").get<std::string>()));
    for (const auto& d : doc.value("datasets", json::array())) {
      if (d.contains("alteration")) CHECK(parse_augmentation(d.at("alteration"), 1));
    }
  }
  CHECK(seen == 6);
}
