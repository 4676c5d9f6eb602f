#include <doctest.h>

#include <filesystem>

#include "cli_runner.hpp"
#include "helpers.hpp"
#include "lidisco/config.hpp"
#include "lidisco/dataio.hpp"

using namespace lidisco;
using testutil::run_cli;
using testutil::snapshot;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = LIDISCO_CONFIG_DIR;

/// A small scene directory shared by the tests in this file.
struct Fixture {
  testutil::TempDir tmp{"cli"};
  fs::path data;
  fs::path scene;
  fs::path params;

  Fixture() {
    scene = tmp / "scene.json";
    write_text_file(scene, R"({"seed": 3, "n_frames": 8, "n_objects": 6, "range_m": [10, 40],
                               "bearing_rad": [0.25, 1.25], "yaw_rad": [-0.02, 0.02], "speed_mps": [5, 5]})");
    params = tmp / "params.json";
    write_text_file(params, R"({"detector": {"patch_size": 21}, "boxfit": {"criterion": "closeness"}})");
    data = tmp / "data";
    const auto r = run_cli({"synth", "--config", scene.string(), "--out", data.string()});
    REQUIRE(r.code == 0);
  }

  std::string p(const std::string& name) const { return (tmp / name).string(); }
};

}  // namespace

TEST_CASE("synth writes the sequence layout deterministically") {
  Fixture fx;
  CHECK(fs::exists(fx.data / "manifest.json"));
  CHECK(fs::exists(fx.data / "gt_labels.jsonl"));
  std::size_t frames = 0;
  for (const auto& e : fs::directory_iterator(fx.data / "frames")) frames += e.path().extension() == ".oypc";
  CHECK(frames == 8);
  CHECK(read_sequence(fx.data).sequence.frames.size() == 8);

  REQUIRE(run_cli({"synth", "--config", fx.scene.string(), "--out", fx.p("again")}).code == 0);
  CHECK(snapshot(fx.data) == snapshot(fx.tmp / "again"));
  REQUIRE(run_cli({"synth", "--config", fx.scene.string(), "--out", fx.p("seeded"), "--seed", "99"}).code == 0);
  CHECK(snapshot(fx.tmp / "seeded" / "frames") != snapshot(fx.data / "frames"));
}

TEST_CASE("usage and config errors exit 2 without partial output") {
  testutil::TempDir tmp("cliusage");
  const auto missing = run_cli({"synth", "--config", (tmp / "absent.json").string(), "--out", (tmp / "o").string()});
  CHECK(missing.code == 2);
  CHECK_FALSE(missing.err.empty());
  CHECK_FALSE(fs::exists(tmp / "o"));

  write_text_file(tmp / "bad.json", R"({"n_frames": 5, "wheels": 4})");
  const auto unknown = run_cli({"synth", "--config", (tmp / "bad.json").string(), "--out", (tmp / "o").string()});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("wheels") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp / "o"));

  write_text_file(tmp / "invalid.json", R"({"n_frames": -1})");
  CHECK(run_cli({"synth", "--config", (tmp / "invalid.json").string(), "--out", (tmp / "o").string()}).code == 2);
  CHECK_FALSE(fs::exists(tmp / "o"));

  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"synth", "--bogus"}).code == 2);
  CHECK(run_cli({"synth", "--out", (tmp / "o").string()}).code == 2);
  CHECK(run_cli({"infer", "--threads", "0", "--data", "x", "--model", "y", "--out", "z"}).code == 2);
  CHECK(run_cli({"eval", "--det", "a", "--gt", "b", "--report", "c", "--iou", "0.3,abc"}).code == 2);
  CHECK(run_cli({"eval", "--det", "a", "--gt", "b", "--report", "c", "--iou", "1.5"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("every subcommand prints parseable default params") {
  for (const std::string cmd : {"synth", "autolabel", "train", "infer", "selftrain", "eval"}) {
    const auto r = run_cli({cmd, "--print-default-params"});
    CHECK(r.code == 0);
    const Json j = Json::parse(r.out);
    CHECK(j.is_object());
    if (cmd == "synth") CHECK(to_json(scene_config_from_json(j)) == to_json(SceneConfig{}));
    if (cmd == "autolabel" || cmd == "train" || cmd == "infer")
      CHECK(to_json(pipeline_params_from_json(j)) == to_json(PipelineParams{}));
    if (cmd == "selftrain") CHECK(to_json(round_config_from_json(j)) == to_json(RoundConfig{}));
    if (cmd == "eval") CHECK(to_json(eval_params_from_json(j)) == to_json(EvalParams{}));
    CHECK(run_cli({cmd, "--print-default-params", "--threads", "2"}).out == r.out);
  }
}

TEST_CASE("data errors exit 3") {
  Fixture fx;
  const auto nodata = run_cli({"autolabel", "--data", fx.p("nowhere"), "--out", fx.p("l.jsonl")});
  CHECK(nodata.code == 3);
  CHECK_FALSE(fs::exists(fx.tmp / "l.jsonl"));
  write_text_file(fx.tmp / "broken.jsonl", "{\"frame_id\": 0, \"boxes\": [{\"cx\": 1}]}\n");
  const auto broken = run_cli({"train", "--data", fx.data.string(), "--labels", fx.p("broken.jsonl"), "--out",
                               fx.p("m.json")});
  CHECK(broken.code == 3);
  CHECK(broken.err.find("broken.jsonl:1") != std::string::npos);
  write_text_file(fx.tmp / "empty.jsonl", "");
  CHECK(run_cli({"train", "--data", fx.data.string(), "--labels", fx.p("empty.jsonl"), "--out", fx.p("m.json")})
            .code == 3);
  CHECK_FALSE(fs::exists(fx.tmp / "m.json"));
}

TEST_CASE("full chain is byte-identical across runs and thread counts and leaves inputs untouched") {
  Fixture fx;
  const std::string data = fx.data.string(), gt = (fx.data / "gt_labels.jsonl").string();
  const std::string before = snapshot(fx.data) + snapshot(fx.params) + snapshot(fx.scene);

  auto chain = [&](const std::string& tag, const std::string& threads) {
    const std::string labels = fx.p(tag + "_labels.jsonl"), model = fx.p(tag + "_model.json"),
                      dets = fx.p(tag + "_dets.jsonl"), report = fx.p(tag + "_report.json"),
                      rounds = fx.p(tag + "_rounds");
    REQUIRE(run_cli({"autolabel", "--data", data, "--params", fx.params.string(), "--out", labels, "--threads", threads})
                .code == 0);
    REQUIRE(run_cli({"train", "--data", data, "--labels", labels, "--params", fx.params.string(), "--out", model,
                     "--threads", threads})
                .code == 0);
    REQUIRE(run_cli({"infer", "--data", data, "--model", model, "--params", fx.params.string(), "--out", dets,
                     "--threads", threads})
                .code == 0);
    const auto ev = run_cli({"eval", "--det", dets, "--gt", gt, "--data", data, "--report", report, "--dtc",
                             "--threads", threads});
    REQUIRE(ev.code == 0);
    write_text_file(fx.tmp / (tag + "_rounds.json"), R"({"n_rounds": 2, "params": {"detector": {"patch_size": 21}}})");
    REQUIRE(run_cli({"selftrain", "--data", data, "--config", fx.p(tag + "_rounds.json"), "--out", rounds,
                     "--threads", threads})
                .code == 0);
    return snapshot(labels) + snapshot(model) + snapshot(dets) + snapshot(report) + snapshot(rounds) + ev.out;
  };
  const std::string a = chain("a", "1");
  const std::string b = chain("b", "1");
  const std::string c = chain("c", "3");
  CHECK(a == b);
  CHECK(a == c);
  CHECK(fs::exists(fx.tmp / "a_rounds" / "round_1" / "model.json"));
  CHECK_FALSE(fs::exists(fx.tmp / "a_rounds" / "round_0" / "model.json"));
  CHECK(snapshot(fx.data) + snapshot(fx.params) + snapshot(fx.scene) == before);

  const Json rep = read_json_file(fx.tmp / "a_report.json");
  CHECK(rep["per_iou"].size() == 2);
  CHECK(rep.contains("dtc"));
}

TEST_CASE("eval of perfect detections gives AP 1.0") {
  Fixture fx;
  const std::string gt = (fx.data / "gt_labels.jsonl").string();
  const auto r = run_cli({"eval", "--det", gt, "--gt", gt, "--report", fx.p("r.json"), "--iou", "0.5"});
  REQUIRE(r.code == 0);
  const Json j = read_json_file(fx.tmp / "r.json");
  REQUIRE(j["per_iou"].size() == 1);
  CHECK(j["per_iou"][0]["ap"].get<double>() == 1.0);
  CHECK_FALSE(r.out.empty());
}

TEST_CASE("infer with a grid spec mismatch exits 3 and names both specs") {
  Fixture fx;
  const std::string data = fx.data.string(), gt = (fx.data / "gt_labels.jsonl").string();
  REQUIRE(run_cli({"train", "--data", data, "--labels", gt, "--params", fx.params.string(), "--out", fx.p("m.json")})
              .code == 0);
  write_text_file(fx.tmp / "coarse.json", R"({"detector": {"patch_size": 21, "grid": {"cell_size": 0.5}}})");
  const auto r = run_cli({"infer", "--data", data, "--model", fx.p("m.json"), "--params", fx.p("coarse.json"), "--out",
                          fx.p("d.jsonl")});
  CHECK(r.code == 3);
  CHECK(r.err.find("cell_size=0.25") != std::string::npos);
  CHECK(r.err.find("cell_size=0.5") != std::string::npos);
  CHECK_FALSE(fs::exists(fx.tmp / "d.jsonl"));
}
