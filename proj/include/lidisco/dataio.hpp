#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lidisco/core.hpp"

namespace lidisco {

/// Insertion-ordered JSON so written files keep a stable, readable key order.
using Json = nlohmann::ordered_json;

struct TemplateModel;
struct EvalReport;

struct ManifestFrame {
  std::uint64_t frame_id = 0;
  double timestamp_s = 0.0;
  std::string point_file;  ///< relative to the manifest's directory
  Pose pose;               ///< world_from_ego
};

struct SequenceManifest {
  std::string sequence_id;
  std::vector<ManifestFrame> frames;
};

/// Point files: "OYPC", u32 version (1), u32 count, then count * 4 little-endian f32
/// (x, y, z, intensity). Coordinates are narrowed to f32 on write.
void write_point_file(const std::filesystem::path& path, const PointCloud& cloud);
/// Reads points; frame_id and timestamp are left at 0 for the caller to fill in.
PointCloud read_point_file(const std::filesystem::path& path);

Json manifest_to_json(const SequenceManifest& m);
/// Validates contiguity, timestamp order and poses. `where` names the source in errors.
SequenceManifest manifest_from_json(const Json& j, const std::string& where);

/// Writes manifest.json and frames/NNNNNN.oypc under `dir`. Returns the manifest path.
std::filesystem::path write_sequence(const std::filesystem::path& dir, const Sequence& seq);

struct LoadedSequence {
  SequenceManifest manifest;
  Sequence sequence;
};

/// Accepts either a manifest path or a directory containing manifest.json.
LoadedSequence read_sequence(const std::filesystem::path& manifest_path);

/// Labels as JSON lines, one object per frame in ascending frame_id order.
std::string labels_to_jsonl(const LabelSet& labels);
LabelSet labels_from_jsonl(const std::string& text, const std::string& where);
void write_labels(const LabelSet& labels, const std::filesystem::path& path);
LabelSet read_labels(const std::filesystem::path& path);

Json box_to_json(const OrientedBox& b);
OrientedBox box_from_json(const Json& j);

Json model_to_json(const TemplateModel& model);
TemplateModel model_from_json(const Json& j);
void write_model(const TemplateModel& model, const std::filesystem::path& path);
TemplateModel read_model(const std::filesystem::path& path);

Json report_to_json(const EvalReport& report);

Json read_json_file(const std::filesystem::path& path);
/// Writes `j.dump(2)` plus a trailing newline.
void write_json_file(const Json& j, const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace lidisco
