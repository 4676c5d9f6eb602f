#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lidisco/config.hpp"
#include "lidisco/dataio.hpp"
#include "lidisco/detector.hpp"
#include "lidisco/error.hpp"
#include "lidisco/eval.hpp"
#include "lidisco/selftrain.hpp"
#include "lidisco/synth.hpp"

namespace fs = std::filesystem;
using namespace lidisco;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

// Problems with parameter files or flags; mapped to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json load_config(const std::string& path) {
  try {
    return read_json_file(path);
  } catch (const Error& e) {
    throw UsageError(std::string("config ") + e.what());
  }
}

template <typename Fn>
auto parse_config(const std::string& path, Fn&& fn) {
  const Json j = load_config(path);
  try {
    return fn(j);
  } catch (const Error& e) {
    throw UsageError(path + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

PipelineParams load_pipeline(const std::string& path) {
  if (path.empty()) return PipelineParams{};
  return parse_config(path, pipeline_params_from_json);
}

struct Common {
  int threads = 1;
  bool print_defaults = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--threads", c.threads, "Worker threads (output does not depend on this)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--print-default-params", c.print_defaults, "Print the default parameter JSON and exit");
}

void print_json(const Json& j) { std::cout << j.dump(2) << "\n"; }

std::vector<double> parse_iou_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw UsageError("--iou: cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("--iou: empty list");
  for (double v : out)
    if (!(v > 0.0 && v < 1.0)) throw UsageError("--iou: thresholds must be in (0, 1)");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR auto-labelling toolkit: synthesis, zero-shot labels, template detector, self-training, evaluation"};
  app.require_subcommand(1);

  // synth
  Common synth_c;
  std::string synth_config, synth_out;
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic sequence with ground truth");
  synth->add_option("--config", synth_config, "Scene config JSON");
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--seed", synth_seed, "Override the config seed");
  add_common(synth, synth_c);

  // autolabel
  Common auto_c;
  std::string auto_data, auto_params, auto_out;
  auto* autolabel = app.add_subcommand("autolabel", "Zero-shot labels (ground removal, clustering, tracking)");
  autolabel->add_option("--data", auto_data, "Sequence directory or manifest");
  autolabel->add_option("--params", auto_params, "Pipeline params JSON (defaults when omitted)");
  autolabel->add_option("--out", auto_out, "Output labels.jsonl");
  add_common(autolabel, auto_c);

  // train
  Common train_c;
  std::string train_data, train_labels, train_out, train_params;
  auto* train = app.add_subcommand("train", "Train BEV templates on labels");
  train->add_option("--data", train_data, "Sequence directory or manifest");
  train->add_option("--labels", train_labels, "Training labels.jsonl");
  train->add_option("--out", train_out, "Output model.json");
  train->add_option("--params", train_params, "Pipeline params JSON (defaults when omitted)");
  add_common(train, train_c);

  // infer
  Common infer_c;
  std::string infer_data, infer_model, infer_out, infer_params;
  auto* infer = app.add_subcommand("infer", "Run a trained model on every frame");
  infer->add_option("--data", infer_data, "Sequence directory or manifest");
  infer->add_option("--model", infer_model, "model.json");
  infer->add_option("--out", infer_out, "Output detections.jsonl");
  infer->add_option("--params", infer_params, "Pipeline params JSON (defaults when omitted)");
  add_common(infer, infer_c);

  // selftrain
  Common st_c;
  std::string st_data, st_config, st_out;
  auto* st = app.add_subcommand("selftrain", "Iterative self-training; one directory per round");
  st->add_option("--data", st_data, "Sequence directory or manifest");
  st->add_option("--config", st_config, "Rounds config JSON (defaults when omitted)");
  st->add_option("--out", st_out, "Output directory");
  add_common(st, st_c);

  // eval
  Common eval_c;
  std::string eval_det, eval_gt, eval_data, eval_report, eval_iou, eval_params;
  bool eval_dtc = false;
  std::optional<double> eval_max_range;
  auto* ev = app.add_subcommand("eval", "AP and distance-to-collision report");
  ev->add_option("--det", eval_det, "Detections labels.jsonl");
  ev->add_option("--gt", eval_gt, "Ground truth labels.jsonl");
  ev->add_option("--data", eval_data, "Sequence directory or manifest (poses)");
  ev->add_option("--report", eval_report, "Output report.json");
  ev->add_flag("--dtc", eval_dtc, "Add the distance-to-collision bucket breakdown");
  ev->add_option("--iou", eval_iou, "Comma-separated IoU thresholds, e.g. 0.3,0.5");
  ev->add_option("--max-range", eval_max_range, "Ignore boxes beyond this BEV range (m)");
  ev->add_option("--params", eval_params, "Eval params JSON (defaults when omitted)");
  add_common(ev, eval_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      if (synth_c.print_defaults) return print_json(to_json(SceneConfig{})), kExitOk;
      require(synth_config, "--config");
      require(synth_out, "--out");
      SceneConfig cfg = parse_config(synth_config, scene_config_from_json);
      if (synth_seed) cfg.seed = *synth_seed;
      const SyntheticScene scene = generate(cfg, synth_c.threads);
      write_sequence(synth_out, scene.sequence);
      write_labels(scene.truth.labels, fs::path(synth_out) / "gt_labels.jsonl");
    } else if (autolabel->parsed()) {
      if (auto_c.print_defaults) return print_json(to_json(PipelineParams{})), kExitOk;
      require(auto_data, "--data");
      require(auto_out, "--out");
      const PipelineParams params = load_pipeline(auto_params);
      const LoadedSequence seq = read_sequence(auto_data);
      write_labels(round_zero(seq.sequence, params, auto_c.threads), auto_out);
    } else if (train->parsed()) {
      if (train_c.print_defaults) return print_json(to_json(PipelineParams{})), kExitOk;
      require(train_data, "--data");
      require(train_labels, "--labels");
      require(train_out, "--out");
      const PipelineParams params = load_pipeline(train_params);
      const LoadedSequence seq = read_sequence(train_data);
      const LabelSet labels = read_labels(train_labels);
      const PreparedSequence prepared = prepare_sequence(seq.sequence, params, train_c.threads);
      write_model(train_on_sequence(prepared, labels, params.detector, params.train_near_range_m), train_out);
    } else if (infer->parsed()) {
      if (infer_c.print_defaults) return print_json(to_json(PipelineParams{})), kExitOk;
      require(infer_data, "--data");
      require(infer_model, "--model");
      require(infer_out, "--out");
      const PipelineParams params = load_pipeline(infer_params);
      const TemplateModel model = read_model(infer_model);
      if (!(model.spec == params.detector.grid))
        throw Error(ErrorKind::SpecMismatch, "model grid " + model.spec.describe() + " differs from params grid " +
                                                 params.detector.grid.describe());
      const LoadedSequence seq = read_sequence(infer_data);
      const PreparedSequence prepared = prepare_sequence(seq.sequence, params, infer_c.threads);
      write_labels(detect_sequence(prepared, model, infer_c.threads), infer_out);
    } else if (st->parsed()) {
      if (st_c.print_defaults) return print_json(to_json(RoundConfig{})), kExitOk;
      require(st_data, "--data");
      require(st_out, "--out");
      const RoundConfig cfg = st_config.empty() ? RoundConfig{} : parse_config(st_config, round_config_from_json);
      const LoadedSequence seq = read_sequence(st_data);
      const SelfTrainResult result = self_train(seq.sequence, cfg, st_c.threads);
      for (const auto& r : result.rounds) write_round_artifacts(st_out, r);
      if (result.stop_reason) std::cerr << "selftrain stopped early: " << *result.stop_reason << "\n";
    } else if (ev->parsed()) {
      if (eval_c.print_defaults) return print_json(to_json(EvalParams{})), kExitOk;
      require(eval_det, "--det");
      require(eval_gt, "--gt");
      require(eval_report, "--report");
      if (eval_dtc) require(eval_data, "--data");
      EvalParams params = eval_params.empty() ? EvalParams{} : parse_config(eval_params, eval_params_from_json);
      if (!eval_iou.empty()) params.iou_thresholds = parse_iou_list(eval_iou);
      if (eval_max_range) params.max_range_m = *eval_max_range;
      const LabelSet dets = read_labels(eval_det);
      const LabelSet gts = read_labels(eval_gt);
      std::vector<FrameInfo> frames;
      if (!eval_data.empty()) frames = read_sequence(eval_data).sequence.frames;
      const EvalReport report = evaluate(dets, gts, frames, params, eval_dtc);
      write_json_file(report_to_json(report), eval_report);
      std::cout << format_report(report);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::InvalidConfig ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
